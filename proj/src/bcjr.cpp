#include "eqz/bcjr.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <stdexcept>

#include "eqz/rng.hpp"

namespace eqz {

namespace {

constexpr double kNegInf = -std::numeric_limits<double>::infinity();

// Symmetric two-term log-sum-exp: computed from (max, min) so the result does
// not depend on argument order.  Together with the sorted reduction below
// this makes the +/- relabeling symmetry of binary signaling hold bit-exactly.
double lse2(double a, double b) {
  if (a == kNegInf) return b;
  if (b == kNegInf) return a;
  const double hi = a > b ? a : b;
  const double lo = a > b ? b : a;
  return hi + std::log1p(std::exp(lo - hi));
}

// Order-independent reduction over an arbitrary term list (sorts in place).
double lse_sorted(std::vector<double>& terms) {
  std::sort(terms.begin(), terms.end());
  double acc = kNegInf;
  for (double t : terms) acc = lse2(acc, t);
  return acc;
}

struct Engine {
  const TrellisSpec& tr;
  const std::vector<double>& z;
  double inv_two_sigma2;
  const std::vector<double>* priors;  // per-bit LLRs over the whole block, or null

  int m() const { return tr.num_inputs(); }
  long states() const { return tr.state_count; }

  // log prior of level a at absolute symbol index n (constant terms dropped;
  // zero for uniform priors).
  double log_prior(int n_abs, int a) const {
    if (!priors) return 0.0;
    const auto& label = tr.constellation.bit_labels[a];
    const int q = tr.constellation.bits_per_symbol;
    double acc = 0.0;
    for (int j = 0; j < q; ++j) {
      const double l = (*priors)[static_cast<std::size_t>(n_abs) * q + j];
      acc += label[j] ? -0.5 * l : 0.5 * l;
    }
    return acc;
  }

  // Noiseless branch output.  Inside the zero-padded left edge the memory
  // positions that precede the block are literal zero amplitudes, not
  // constellation symbols, so they are masked out of the table value.
  double branch_output(long s, int a, int n_abs, bool zero_padded_left) const {
    if (!zero_padded_left || n_abs >= tr.memory) return tr.outputs[s * m() + a];
    double out = tr.taps[0] * tr.constellation.levels[a];
    for (int i = 1; i <= tr.memory; ++i)
      if (n_abs - i >= 0) out += tr.taps[i] * tr.constellation.levels[tr.state_digit(s, i)];
    return out;
  }

  double gamma(long s, int a, int n_abs, bool zero_padded_left) const {
    const double d = z[n_abs] - branch_output(s, a, n_abs, zero_padded_left);
    return -(d * d) * inv_two_sigma2 + log_prior(n_abs, a);
  }
};

// Forward-backward over absolute symbol range [t0, t1).  Fills
// level_log[n - t0][a] with the unnormalized log of P(x_n = level a, z).
// zero_padded_left selects the exact block-edge treatment for t0 == 0;
// interior starts (windowed mode) use a uniform state distribution.
void forward_backward(const Engine& eng, int t0, int t1, bool zero_padded_left,
                      std::vector<std::vector<double>>& level_log) {
  const long s_count = eng.states();
  const int m = eng.m();
  const int len = t1 - t0;
  level_log.assign(len, std::vector<double>(m, kNegInf));

  // beta[t - t0][s]; uniform at the right edge.
  std::vector<std::vector<double>> beta(len + 1, std::vector<double>(s_count, 0.0));
  for (int t = t1 - 1; t > t0; --t) {
    auto& cur = beta[t - t0];
    const auto& nxt = beta[t - t0 + 1];
    for (long s = 0; s < s_count; ++s) {
      double acc = kNegInf;
      for (int a = 0; a < m; ++a)
        acc = lse2(acc, eng.gamma(s, a, t, zero_padded_left) + nxt[eng.tr.next_state[s * m + a]]);
      cur[s] = acc;
    }
    // normalize to keep magnitudes bounded
    double mx = kNegInf;
    for (double v : cur) mx = std::max(mx, v);
    if (mx != kNegInf)
      for (double& v : cur) v -= mx;
  }

  std::vector<double> alpha(s_count, kNegInf), alpha_next(s_count);
  if (zero_padded_left && t0 == 0 && eng.tr.memory > 0) {
    alpha[0] = 0.0;  // designated boundary state; pre-block digits are masked anyway
  } else {
    std::fill(alpha.begin(), alpha.end(), 0.0);
  }

  const long shift_mod = eng.tr.memory > 0 ? s_count / m : 1;
  std::vector<double> terms(s_count);
  for (int t = t0; t < t1; ++t) {
    const auto& b_next = beta[t - t0 + 1];
    auto& out = level_log[t - t0];
    for (int a = 0; a < m; ++a) {
      for (long s = 0; s < s_count; ++s)
        terms[s] = alpha[s] + eng.gamma(s, a, t, zero_padded_left) + b_next[eng.tr.next_state[s * m + a]];
      out[a] = lse_sorted(terms);
    }
    if (t + 1 < t1) {
      if (eng.tr.memory == 0) {
        // single state: fold every input branch
        double acc = kNegInf;
        for (int a = 0; a < m; ++a) acc = lse2(acc, alpha[0] + eng.gamma(0, a, t, zero_padded_left));
        alpha_next[0] = acc;
      } else {
        // per-destination gather: d = a + M * (s mod M^(memory-1)), so the
        // predecessors of d are s = d/M + u * M^(memory-1), u in [0, M)
        for (long d = 0; d < s_count; ++d) {
          const int a = static_cast<int>(d % m);
          const long p = d / m;
          double acc = kNegInf;
          for (int u = 0; u < m; ++u) {
            const long s = p + shift_mod * u;
            acc = lse2(acc, alpha[s] + eng.gamma(s, a, t, zero_padded_left));
          }
          alpha_next[d] = acc;
        }
      }
      double mx = kNegInf;
      for (double v : alpha_next) mx = std::max(mx, v);
      if (mx != kNegInf)
        for (double& v : alpha_next) v -= mx;
      alpha.swap(alpha_next);
    }
  }
}

void bit_llrs_from_level_log(const PamConstellation& cons, const std::vector<double>& level_log,
                             double* out) {
  const int q = cons.bits_per_symbol;
  std::vector<double> num, den;
  for (int j = 0; j < q; ++j) {
    num.clear();
    den.clear();
    for (int a = 0; a < cons.order; ++a)
      (cons.bit_labels[a][j] ? den : num).push_back(level_log[a]);
    out[j] = clamp_llr(lse_sorted(num) - lse_sorted(den));
  }
}

}  // namespace

int TrellisSpec::state_digit(long s, int i) const {
  const int m = constellation.order;
  long v = s;
  for (int j = 1; j < i; ++j) v /= m;
  return static_cast<int>(v % m);
}

TrellisSpec build_trellis(const ChannelModel& ch, const PamConstellation& cons, long state_budget) {
  TrellisSpec tr;
  tr.constellation = cons;
  tr.taps = ch.taps;
  tr.memory = ch.memory();
  const int m = cons.order;
  long states = 1;
  for (int i = 0; i < tr.memory; ++i) {
    states *= m;
    if (states > state_budget)
      throw std::invalid_argument("trellis state count exceeds budget");
  }
  tr.state_count = states;
  tr.next_state.resize(states * m);
  tr.outputs.resize(states * m);
  const long shift_mod = tr.memory > 0 ? states / m : 1;
  for (long s = 0; s < states; ++s) {
    for (int a = 0; a < m; ++a) {
      double out = ch.taps[0] * cons.levels[a];
      for (int i = 1; i <= tr.memory; ++i) out += ch.taps[i] * cons.levels[tr.state_digit(s, i)];
      tr.outputs[s * m + a] = out;
      tr.next_state[s * m + a] = tr.memory > 0 ? a + m * (s % shift_mod) : 0;
    }
  }
  return tr;
}

EqualizeResult map_equalize(const std::vector<double>& z, const TrellisSpec& tr, double noise_variance,
                            const std::vector<double>* bit_priors) {
  if (z.empty()) throw std::invalid_argument("empty observation block");
  if (!(noise_variance > 0.0)) throw std::invalid_argument("noise variance must be > 0");
  const int q_sym = static_cast<int>(z.size());
  const int q = tr.constellation.bits_per_symbol;
  if (bit_priors && static_cast<int>(bit_priors->size()) != q_sym * q)
    throw std::invalid_argument("prior length must be Q * bits_per_symbol");

  Engine eng{tr, z, 1.0 / (2.0 * noise_variance), bit_priors};
  std::vector<std::vector<double>> level_log;
  forward_backward(eng, 0, q_sym, true, level_log);

  EqualizeResult res;
  res.posteriors.assign(q_sym, std::vector<double>(tr.constellation.order, 0.0));
  res.bit_llrs.values.assign(static_cast<std::size_t>(q_sym) * q, 0.0);
  for (int n = 0; n < q_sym; ++n) {
    double tot = kNegInf;
    for (double v : level_log[n]) tot = lse2(tot, v);
    for (int a = 0; a < tr.constellation.order; ++a)
      res.posteriors[n][a] = std::exp(level_log[n][a] - tot);
    bit_llrs_from_level_log(tr.constellation, level_log[n], &res.bit_llrs.values[static_cast<std::size_t>(n) * q]);
  }
  return res;
}

std::vector<std::vector<double>> brute_force_map(const std::vector<double>& z, const ChannelModel& ch,
                                                 const PamConstellation& cons, double noise_variance,
                                                 const std::vector<double>* bit_priors) {
  if (z.empty()) throw std::invalid_argument("empty observation block");
  if (!(noise_variance > 0.0)) throw std::invalid_argument("noise variance must be > 0");
  const int q_sym = static_cast<int>(z.size());
  const int m = cons.order;
  double seq_count = std::pow(static_cast<double>(m), q_sym);
  if (seq_count > 1048576.0) throw std::invalid_argument("sequence enumeration exceeds budget");
  const long total = static_cast<long>(seq_count);
  const int q = cons.bits_per_symbol;
  if (bit_priors && static_cast<int>(bit_priors->size()) != q_sym * q)
    throw std::invalid_argument("prior length must be Q * bits_per_symbol");

  const double inv2s = 1.0 / (2.0 * noise_variance);
  std::vector<int> idx(q_sym, 0);
  std::vector<std::vector<double>> gather(q_sym, std::vector<double>(m, kNegInf));
  for (long t = 0; t < total; ++t) {
    long v = t;
    for (int n = 0; n < q_sym; ++n) {
      idx[n] = static_cast<int>(v % m);
      v /= m;
    }
    double ll = 0.0;
    for (int n = 0; n < q_sym; ++n) {
      double conv = 0.0;
      for (int i = 0; i <= ch.memory() && i <= n; ++i) conv += ch.taps[i] * cons.levels[idx[n - i]];
      const double d = z[n] - conv;
      ll -= d * d * inv2s;
      if (bit_priors) {
        const auto& label = cons.bit_labels[idx[n]];
        for (int j = 0; j < q; ++j) {
          const double l = (*bit_priors)[static_cast<std::size_t>(n) * q + j];
          ll += label[j] ? -0.5 * l : 0.5 * l;
        }
      }
    }
    for (int n = 0; n < q_sym; ++n) gather[n][idx[n]] = lse2(gather[n][idx[n]], ll);
  }
  for (int n = 0; n < q_sym; ++n) {
    double tot = kNegInf;
    for (double g : gather[n]) tot = lse2(tot, g);
    for (int a = 0; a < m; ++a) gather[n][a] = std::exp(gather[n][a] - tot);
  }
  return gather;
}

LlrSequence windowed_map(const std::vector<double>& z, const TrellisSpec& tr, double noise_variance,
                         int window) {
  if (z.empty()) throw std::invalid_argument("empty observation block");
  if (!(noise_variance > 0.0)) throw std::invalid_argument("noise variance must be > 0");
  if (window % 2 == 0 || window < 2 * tr.memory + 1)
    throw std::invalid_argument("window must be odd and >= 2 * memory + 1");
  const int q_sym = static_cast<int>(z.size());
  const int q = tr.constellation.bits_per_symbol;
  const int half = window / 2;

  Engine eng{tr, z, 1.0 / (2.0 * noise_variance), nullptr};
  LlrSequence out;
  out.values.assign(static_cast<std::size_t>(q_sym) * q, 0.0);
  std::vector<std::vector<double>> level_log;
  for (int n = 0; n < q_sym; ++n) {
    const int a0 = std::max(0, n - half);
    const int b1 = std::min(q_sym, n + half + 1);
    forward_backward(eng, a0, b1, a0 == 0, level_log);
    bit_llrs_from_level_log(tr.constellation, level_log[n - a0], &out.values[static_cast<std::size_t>(n) * q]);
  }
  return out;
}

WindowCalibration calibrate_window(const ChannelModel& ch, const PamConstellation& cons, double ebn0_db,
                                   double target_ber_ratio, const CalibrationOptions& opts) {
  if (!(target_ber_ratio >= 1.0)) throw std::invalid_argument("target BER ratio must be >= 1");
  const double sigma2 = ebn0_to_noise_variance(ebn0_db, cons, 1.0);
  const ChannelModel channel(ch.taps, sigma2);
  const TrellisSpec tr = build_trellis(channel, cons);
  const int q = cons.bits_per_symbol;

  // Shared seeded block set: the reference and every probed window see the
  // exact same observations.
  struct Block {
    std::vector<std::uint8_t> bits;
    std::vector<double> z;
  };
  std::vector<Block> blocks;
  long bits_total = 0;
  long ref_errors = 0;
  const long block_bits = static_cast<long>(opts.block_symbols) * q;
  while ((bits_total < opts.min_bits || ref_errors < opts.min_errors) && bits_total < opts.max_bits) {
    const std::uint64_t bseed = derive_seed(opts.seed, blocks.size());
    Block blk;
    blk.bits = random_bits(block_bits, derive_seed(bseed, 1));
    blk.z = apply_channel(gray_map(blk.bits, cons), channel, derive_seed(bseed, 2));
    const EqualizeResult ref = map_equalize(blk.z, tr, sigma2);
    for (std::size_t i = 0; i < blk.bits.size(); ++i)
      if ((ref.bit_llrs.values[i] < 0.0) != (blk.bits[i] != 0)) ++ref_errors;
    bits_total += block_bits;
    blocks.push_back(std::move(blk));
  }

  WindowCalibration cal;
  cal.reference_ber = static_cast<double>(ref_errors) / static_cast<double>(bits_total);
  const int w_min = 2 * tr.memory + 1;
  for (int w = w_min; w <= std::max(opts.max_window, w_min); w += 2) {
    long errors = 0;
    for (const auto& blk : blocks) {
      const LlrSequence llrs = windowed_map(blk.z, tr, sigma2, w);
      for (std::size_t i = 0; i < blk.bits.size(); ++i)
        if ((llrs.values[i] < 0.0) != (blk.bits[i] != 0)) ++errors;
    }
    const double ber = static_cast<double>(errors) / static_cast<double>(bits_total);
    cal.ber_by_window.emplace_back(w, ber);
    cal.window = w;
    if (ber <= target_ber_ratio * cal.reference_ber) {
      cal.aligned = true;
      break;
    }
  }
  return cal;
}

}  // namespace eqz
