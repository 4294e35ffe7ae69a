#include "eqz/eqznet.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <stdexcept>

#include "eqz/bcjr.hpp"
#include "eqz/llr.hpp"
#include "eqz/rng.hpp"

namespace eqz {

namespace {

void check_block(const EqzBlock& b, int n) {
  if (b.w1.rows() != b.w2.size() || b.w1.rows() != b.b1.size() || b.w1.cols() != n)
    throw std::invalid_argument("inconsistent block shapes");
}

void check_params(const EqzNetParams& p) {
  const int n = p.frame_length();
  check_block(p.block_a, n);
  if (p.arch != EqzArch::KNet) check_block(p.block_b, n);
  if (p.arch == EqzArch::Head) {
    if (p.head_w.rows() != 2 || p.head_w.cols() != 2 || p.head_b.size() != 2 || p.head_w2.size() != 2)
      throw std::invalid_argument("head layer must be 2x2 with 2-vectors");
  }
}

// Batched activations for one block: Z is N x B.
struct BlockPass {
  Eigen::MatrixXd h;        // width x B, tanh activations
  Eigen::RowVectorXd out;   // 1 x B
};

BlockPass block_forward(const EqzBlock& blk, const Eigen::MatrixXd& z) {
  BlockPass p;
  p.h = ((blk.w1 * z).colwise() + blk.b1).array().tanh().matrix();
  p.out = blk.w2.transpose() * p.h;
  return p;
}

// Backprop through one block given d(loss)/d(block output) per column.
void block_backward(const EqzBlock& blk, const Eigen::MatrixXd& z, const BlockPass& p,
                    const Eigen::RowVectorXd& dout, EqzBlock& grad) {
  grad.w2 = p.h * dout.transpose();
  const Eigen::MatrixXd dpre =
      (blk.w2 * dout).array() * (1.0 - p.h.array().square());
  grad.w1 = dpre * z.transpose();
  grad.b1 = dpre.rowwise().sum();
}

struct ForwardPass {
  BlockPass a, b;
  Eigen::MatrixXd head_h;       // 2 x B
  Eigen::RowVectorXd out;       // 1 x B
};

ForwardPass net_forward(const EqzNetParams& params, const Eigen::MatrixXd& z) {
  ForwardPass fp;
  fp.a = block_forward(params.block_a, z);
  if (params.arch == EqzArch::KNet) {
    fp.out = fp.a.out;
    return fp;
  }
  fp.b = block_forward(params.block_b, z);
  if (params.arch == EqzArch::Sum) {
    fp.out = fp.a.out + fp.b.out;
    return fp;
  }
  Eigen::MatrixXd o(2, z.cols());
  o.row(0) = fp.a.out;
  o.row(1) = fp.b.out;
  fp.head_h = ((params.head_w * o).colwise() + params.head_b).array().tanh().matrix();
  fp.out = params.head_w2.transpose() * fp.head_h;
  return fp;
}

// Loss = (1/B) * sum (out - target)^2; gradient shaped like the parameters.
double loss_and_grad(const EqzNetParams& params, const Eigen::MatrixXd& z,
                     const Eigen::RowVectorXd& target, EqzNetParams* grad) {
  const auto bsz = z.cols();
  const ForwardPass fp = net_forward(params, z);
  const Eigen::RowVectorXd err = fp.out - target;
  const double loss = err.squaredNorm() / static_cast<double>(bsz);
  if (!grad) return loss;

  *grad = params;  // copy shapes/arch; values overwritten below
  const Eigen::RowVectorXd dout = err * (2.0 / static_cast<double>(bsz));
  if (params.arch == EqzArch::KNet) {
    block_backward(params.block_a, z, fp.a, dout, grad->block_a);
    return loss;
  }
  if (params.arch == EqzArch::Sum) {
    block_backward(params.block_a, z, fp.a, dout, grad->block_a);
    block_backward(params.block_b, z, fp.b, dout, grad->block_b);
    return loss;
  }
  Eigen::MatrixXd o(2, z.cols());
  o.row(0) = fp.a.out;
  o.row(1) = fp.b.out;
  grad->head_w2 = fp.head_h * dout.transpose();
  const Eigen::MatrixXd dpre_h =
      (params.head_w2 * dout).array() * (1.0 - fp.head_h.array().square());
  grad->head_w = dpre_h * o.transpose();
  grad->head_b = dpre_h.rowwise().sum();
  const Eigen::MatrixXd d_o = params.head_w.transpose() * dpre_h;  // 2 x B
  block_backward(params.block_a, z, fp.a, d_o.row(0), grad->block_a);
  block_backward(params.block_b, z, fp.b, d_o.row(1), grad->block_b);
  return loss;
}

Eigen::MatrixXd frames_matrix(const EqzNetParams& params, const std::vector<LabeledFrame>& items,
                              const std::vector<long>& idx) {
  const int n = params.frame_length();
  Eigen::MatrixXd z(n, static_cast<Eigen::Index>(idx.size()));
  for (std::size_t c = 0; c < idx.size(); ++c) {
    const auto& fr = items[idx[c]].frame;
    if (fr.n1 != params.n1 || fr.n2 != params.n2)
      throw std::invalid_argument("frame/network geometry mismatch");
    z.col(static_cast<Eigen::Index>(c)) = Eigen::Map<const Eigen::VectorXd>(fr.samples.data(), n);
  }
  return z;
}

Eigen::RowVectorXd targets_row(const std::vector<LabeledFrame>& items, const std::vector<long>& idx,
                               int bit_index) {
  Eigen::RowVectorXd t(static_cast<Eigen::Index>(idx.size()));
  for (std::size_t c = 0; c < idx.size(); ++c) {
    const auto& lf = items[idx[c]];
    if (bit_index < 0 || bit_index >= lf.target_llrs.size())
      throw std::invalid_argument("bit index outside label width");
    t(static_cast<Eigen::Index>(c)) = lf.target_llrs(bit_index);
  }
  return t;
}

long block_param_count(const EqzBlock& b) {
  return static_cast<long>(b.w1.size() + b.b1.size() + b.w2.size());
}

long copy_block_out(const EqzBlock& b, Eigen::VectorXd& v, long at) {
  for (int r = 0; r < b.w1.rows(); ++r)
    for (int c = 0; c < b.w1.cols(); ++c) v(at++) = b.w1(r, c);
  for (int i = 0; i < b.b1.size(); ++i) v(at++) = b.b1(i);
  for (int i = 0; i < b.w2.size(); ++i) v(at++) = b.w2(i);
  return at;
}

long copy_block_in(EqzBlock& b, const Eigen::VectorXd& v, long at) {
  for (int r = 0; r < b.w1.rows(); ++r)
    for (int c = 0; c < b.w1.cols(); ++c) b.w1(r, c) = v(at++);
  for (int i = 0; i < b.b1.size(); ++i) b.b1(i) = v(at++);
  for (int i = 0; i < b.w2.size(); ++i) b.w2(i) = v(at++);
  return at;
}

}  // namespace

EqzNetParams init_k_eqznet(const LmmseFilter& filter, int k, double alpha, double w) {
  if (k < 2 || k % 2 != 0) throw std::invalid_argument("K must be even and >= 2");
  if (!(alpha > 1.0)) throw std::invalid_argument("alpha must be > 1");
  if (!(w > 0.0)) throw std::invalid_argument("w must be > 0");
  const int n = filter.length();
  const int half = (k - 2) / 2;
  if (half > n - 1) throw std::invalid_argument("K too large for the filter length");
  EqzNetParams p;
  p.arch = EqzArch::KNet;
  p.n1 = filter.n1;
  p.n2 = filter.n2;
  p.block_a.w1.resize(k, n);
  p.block_a.b1 = Eigen::VectorXd::Zero(k);
  p.block_a.w2.resize(k);
  const Eigen::Map<const Eigen::RowVectorXd> f(filter.taps.data(), n);
  p.block_a.w1.row(0) = f;
  p.block_a.w1.row(1) = f;
  p.block_a.w2(0) = alpha * w;
  p.block_a.w2(1) = -w;
  int row = 2;
  for (int shift = -half; shift <= half; ++shift) {
    if (shift == 0) continue;
    const std::vector<double> fk = shifted_filter(filter, shift);
    p.block_a.w1.row(row) = Eigen::Map<const Eigen::RowVectorXd>(fk.data(), n);
    p.block_a.w2(row) = -w;
    ++row;
  }
  return p;
}

EqzNetParams random_k_eqznet(int n1, int n2, int k, std::uint64_t seed) {
  if (k < 2 || k % 2 != 0) throw std::invalid_argument("K must be even and >= 2");
  EqzNetParams p;
  p.arch = EqzArch::KNet;
  p.n1 = n1;
  p.n2 = n2;
  const int n = p.frame_length();
  auto gen = make_engine(seed);
  std::normal_distribution<double> dist(0.0, 1.0);
  p.block_a.w1.resize(k, n);
  for (int r = 0; r < k; ++r)
    for (int c = 0; c < n; ++c) p.block_a.w1(r, c) = dist(gen);
  p.block_a.b1 = Eigen::VectorXd::Zero(k);
  p.block_a.w2.resize(k);
  for (int r = 0; r < k; ++r) p.block_a.w2(r) = dist(gen);
  return p;
}

double forward(const EqzNetParams& params, const ObservationFrame& frame) {
  check_params(params);
  if (frame.n1 != params.n1 || frame.n2 != params.n2)
    throw std::invalid_argument("frame/network geometry mismatch");
  const Eigen::Map<const Eigen::VectorXd> z(frame.samples.data(), params.frame_length());
  const Eigen::MatrixXd zm = z;
  return net_forward(params, zm).out(0);
}

Eigen::VectorXd flatten(const EqzNetParams& p) {
  long count = block_param_count(p.block_a);
  if (p.arch != EqzArch::KNet) count += block_param_count(p.block_b);
  if (p.arch == EqzArch::Head) count += 4 + 2 + 2;
  Eigen::VectorXd v(count);
  long at = copy_block_out(p.block_a, v, 0);
  if (p.arch != EqzArch::KNet) at = copy_block_out(p.block_b, v, at);
  if (p.arch == EqzArch::Head) {
    for (int r = 0; r < 2; ++r)
      for (int c = 0; c < 2; ++c) v(at++) = p.head_w(r, c);
    for (int i = 0; i < 2; ++i) v(at++) = p.head_b(i);
    for (int i = 0; i < 2; ++i) v(at++) = p.head_w2(i);
  }
  return v;
}

void unflatten(EqzNetParams& p, const Eigen::VectorXd& theta) {
  long at = copy_block_in(p.block_a, theta, 0);
  if (p.arch != EqzArch::KNet) at = copy_block_in(p.block_b, theta, at);
  if (p.arch == EqzArch::Head) {
    for (int r = 0; r < 2; ++r)
      for (int c = 0; c < 2; ++c) p.head_w(r, c) = theta(at++);
    for (int i = 0; i < 2; ++i) p.head_b(i) = theta(at++);
    for (int i = 0; i < 2; ++i) p.head_w2(i) = theta(at++);
  }
  if (at != theta.size()) throw std::invalid_argument("flat parameter length mismatch");
}

EqzNetParams gradient(const EqzNetParams& params, const std::vector<LabeledFrame>& batch,
                      int bit_index) {
  check_params(params);
  if (batch.empty()) throw std::invalid_argument("empty batch");
  std::vector<long> idx(batch.size());
  std::iota(idx.begin(), idx.end(), 0L);
  const Eigen::MatrixXd z = frames_matrix(params, batch, idx);
  const Eigen::RowVectorXd t = targets_row(batch, idx, bit_index);
  EqzNetParams grad;
  loss_and_grad(params, z, t, &grad);
  return grad;
}

double loss(const EqzNetParams& params, const std::vector<LabeledFrame>& dataset, int bit_index) {
  check_params(params);
  if (dataset.empty()) throw std::invalid_argument("empty dataset");
  std::vector<long> idx(dataset.size());
  std::iota(idx.begin(), idx.end(), 0L);
  const Eigen::MatrixXd z = frames_matrix(params, dataset, idx);
  const Eigen::RowVectorXd t = targets_row(dataset, idx, bit_index);
  return loss_and_grad(params, z, t, nullptr);
}

TrainResult train(const EqzNetParams& initial, const std::vector<LabeledFrame>& dataset,
                  const TrainConfig& config, int bit_index) {
  check_params(initial);
  if (dataset.empty()) throw std::invalid_argument("empty dataset");
  if (config.batch_size < 1) throw std::invalid_argument("batch size must be >= 1");
  if (config.epochs < 0) throw std::invalid_argument("epochs must be >= 0");

  TrainResult res;
  res.params = initial;
  Eigen::VectorXd theta = flatten(initial);
  Eigen::VectorXd m = Eigen::VectorXd::Zero(theta.size());
  Eigen::VectorXd v = Eigen::VectorXd::Zero(theta.size());
  long step = 0;

  std::vector<long> order(dataset.size());
  std::iota(order.begin(), order.end(), 0L);
  auto gen = make_engine(config.seed);

  for (int epoch = 0; epoch < config.epochs; ++epoch) {
    std::shuffle(order.begin(), order.end(), gen);
    double epoch_loss = 0.0;
    long seen = 0;
    for (std::size_t at = 0; at < order.size(); at += config.batch_size) {
      const std::size_t end = std::min(order.size(), at + config.batch_size);
      const std::vector<long> idx(order.begin() + at, order.begin() + end);
      const Eigen::MatrixXd z = frames_matrix(res.params, dataset, idx);
      const Eigen::RowVectorXd t = targets_row(dataset, idx, bit_index);
      EqzNetParams grad = res.params;
      const double batch_loss = loss_and_grad(res.params, z, t, &grad);
      epoch_loss += batch_loss * static_cast<double>(idx.size());
      seen += static_cast<long>(idx.size());

      const Eigen::VectorXd g = flatten(grad);
      ++step;
      m = config.beta1 * m + (1.0 - config.beta1) * g;
      v = config.beta2 * v + (1.0 - config.beta2) * g.cwiseProduct(g);
      const double bc1 = 1.0 - std::pow(config.beta1, static_cast<double>(step));
      const double bc2 = 1.0 - std::pow(config.beta2, static_cast<double>(step));
      theta -= (config.learning_rate * (m / bc1).array() /
                ((v / bc2).array().sqrt() + config.epsilon))
                   .matrix();
      unflatten(res.params, theta);
    }
    res.epoch_losses.push_back(epoch_loss / static_cast<double>(seen));
  }
  return res;
}

EqzNetParams compose_sum(const EqzNetParams& k_net, const EqzNetParams& pretrained_l) {
  if (k_net.arch != EqzArch::KNet || pretrained_l.arch != EqzArch::KNet)
    throw std::invalid_argument("compose_sum expects two plain blocks");
  if (k_net.n1 != pretrained_l.n1 || k_net.n2 != pretrained_l.n2)
    throw std::invalid_argument("sub-network geometry mismatch");
  EqzNetParams p;
  p.arch = EqzArch::Sum;
  p.n1 = k_net.n1;
  p.n2 = k_net.n2;
  p.block_a = k_net.block_a;
  p.block_b = pretrained_l.block_a;
  return p;
}

EqzNetParams compose_head(const EqzNetParams& k_net, const EqzNetParams& l_net,
                          std::uint64_t head_seed) {
  EqzNetParams p = compose_sum(k_net, l_net);
  p.arch = EqzArch::Head;
  auto gen = make_engine(head_seed);
  std::normal_distribution<double> dist(0.0, 1.0);
  p.head_w.resize(2, 2);
  for (int r = 0; r < 2; ++r)
    for (int c = 0; c < 2; ++c) p.head_w(r, c) = 0.1 * dist(gen);
  p.head_b = Eigen::VectorXd::Zero(2);
  p.head_w2.resize(2);
  for (int i = 0; i < 2; ++i) p.head_w2(i) = 0.1 * dist(gen);
  return p;
}

std::vector<LabeledFrame> build_dataset(const ChannelModel& channel, const PamConstellation& cons,
                                        long bit_count, int n1, int n2, std::uint64_t seed,
                                        int block_symbols) {
  if (bit_count < 1) throw std::invalid_argument("bit count must be >= 1");
  if (block_symbols < 1) throw std::invalid_argument("block symbols must be >= 1");
  const int q = cons.bits_per_symbol;
  const long symbols_total = (bit_count + q - 1) / q;
  const TrellisSpec tr = build_trellis(channel, cons);

  std::vector<LabeledFrame> out;
  out.reserve(symbols_total);
  long done = 0;
  long block_index = 0;
  while (done < symbols_total) {
    const int q_sym = static_cast<int>(std::min<long>(block_symbols, symbols_total - done));
    const std::uint64_t bseed = derive_seed(seed, block_index++);
    const auto bits = random_bits(static_cast<long>(q_sym) * q, derive_seed(bseed, 1));
    const SymbolBlock block = gray_map(bits, cons);
    const std::vector<double> z = apply_channel(block, channel, derive_seed(bseed, 2));
    const EqualizeResult eq = map_equalize(z, tr, channel.noise_variance);
    for (int n = 0; n < q_sym; ++n) {
      LabeledFrame lf;
      lf.frame = extract_frame(z, n, n1, n2);
      lf.target_llrs.resize(q);
      for (int j = 0; j < q; ++j)
        lf.target_llrs(j) = clamp_llr(eq.bit_llrs.values[static_cast<std::size_t>(n) * q + j]);
      out.push_back(std::move(lf));
    }
    done += q_sym;
  }
  return out;
}

EqzNetBank train_bank(const std::vector<EqzNetParams>& initial, const std::vector<LabeledFrame>& dataset,
                      const TrainConfig& config, std::vector<std::vector<double>>* traces) {
  if (initial.empty()) throw std::invalid_argument("bank needs at least one network");
  if (!dataset.empty() && static_cast<int>(initial.size()) != dataset.front().target_llrs.size())
    throw std::invalid_argument("bank width must match label width");
  EqzNetBank bank;
  if (traces) traces->clear();
  for (std::size_t mth = 0; mth < initial.size(); ++mth) {
    TrainResult r = train(initial[mth], dataset, config, static_cast<int>(mth));
    bank.nets.push_back(std::move(r.params));
    if (traces) traces->push_back(std::move(r.epoch_losses));
  }
  return bank;
}

std::vector<double> bank_forward(const EqzNetBank& bank, const ObservationFrame& frame) {
  std::vector<double> out(bank.nets.size());
  for (std::size_t mth = 0; mth < bank.nets.size(); ++mth)
    out[mth] = clamp_llr(forward(bank.nets[mth], frame));
  return out;
}

long operation_count(const EqzNetParams& p) {
  const long n = p.frame_length();
  long macs = static_cast<long>(p.block_a.width()) * n + p.block_a.width();
  if (p.arch != EqzArch::KNet) macs += static_cast<long>(p.block_b.width()) * n + p.block_b.width();
  if (p.arch == EqzArch::Head) macs += 2 * 2 + 2;
  return macs;
}

}  // namespace eqz
