#include "eqz/turbo.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <stdexcept>

#include "eqz/bcjr.hpp"
#include "eqz/llr.hpp"
#include "eqz/rng.hpp"

namespace eqz {

namespace {

// log(1/(1+e^-x)), stable on both tails.
double log_sigmoid(double x) {
  return x < 0.0 ? x - std::log1p(std::exp(x)) : -std::log1p(std::exp(-x));
}

double lse(const std::vector<double>& xs) {
  const double peak = *std::max_element(xs.begin(), xs.end());
  double acc = 0.0;
  for (double x : xs) acc += std::exp(x - peak);
  return peak + std::log(acc);
}

// Posterior mean and variance of one symbol under its prior bit LLRs.
void symbol_moments(const PamConstellation& cons, const double* prior, double& mean, double& var) {
  if (cons.order == 2) {
    mean = std::tanh(0.5 * prior[0]);
    var = 1.0 - mean * mean;
    return;
  }
  double m1 = 0.0, m2 = 0.0;
  for (int l = 0; l < cons.order; ++l) {
    double lp = 0.0;
    for (int m = 0; m < cons.bits_per_symbol; ++m)
      lp += log_sigmoid(cons.bit_labels[l][m] ? -prior[m] : prior[m]);
    const double p = std::exp(lp);
    m1 += p * cons.levels[l];
    m2 += p * cons.levels[l] * cons.levels[l];
  }
  mean = m1;
  var = std::max(m2 - m1 * m1, 0.0);
}

}  // namespace

std::vector<int> make_interleaver(int length, std::uint64_t seed) {
  if (length < 1) throw std::invalid_argument("interleaver length must be >= 1");
  std::vector<int> perm(length);
  std::iota(perm.begin(), perm.end(), 0);
  auto gen = make_engine(seed);
  std::shuffle(perm.begin(), perm.end(), gen);
  return perm;
}

std::vector<double> permute(const std::vector<double>& x, const std::vector<int>& perm) {
  if (x.size() != perm.size()) throw std::invalid_argument("permutation length mismatch");
  std::vector<double> y(x.size());
  for (std::size_t i = 0; i < perm.size(); ++i) y[i] = x[perm[i]];
  return y;
}

std::vector<double> unpermute(const std::vector<double>& x, const std::vector<int>& perm) {
  if (x.size() != perm.size()) throw std::invalid_argument("permutation length mismatch");
  std::vector<double> y(x.size());
  for (std::size_t i = 0; i < perm.size(); ++i) y[perm[i]] = x[i];
  return y;
}

std::vector<double> lmmse_with_priors(const std::vector<double>& z, const ChannelModel& channel,
                                      const PamConstellation& constellation,
                                      const std::vector<double>& prior_llrs, int n1, int n2) {
  const int q_sym = static_cast<int>(z.size());
  const int q = constellation.bits_per_symbol;
  if (static_cast<int>(prior_llrs.size()) != q_sym * q)
    throw std::invalid_argument("prior length does not match the bit count");

  std::vector<double> mean(q_sym), var(q_sym);
  double vbar = 0.0;
  for (int n = 0; n < q_sym; ++n) {
    symbol_moments(constellation, prior_llrs.data() + static_cast<std::size_t>(n) * q, mean[n], var[n]);
    vbar += var[n];
  }
  vbar /= q_sym;
  vbar = std::max(vbar, 1e-12);  // perfect priors would otherwise make the solve singular

  const ConvolutionMatrix conv = make_convolution_matrix(channel, n1, n2);
  const int cols = static_cast<int>(conv.mat.cols());
  Eigen::VectorXd variances = Eigen::VectorXd::Constant(cols, vbar);
  variances(conv.selected_column) = 1.0;
  const LmmseFilter filter = design_filter_with_variances(channel, n1, n2, variances);
  const double c_rel = filter.reliability_constant;  // 1 - mu
  const double mu = 1.0 - c_rel;
  const double s2 = mu * c_rel;

  const int mh = channel.memory();
  std::vector<double> out(prior_llrs.size());
  ObservationFrame work;
  work.n1 = n1;
  work.n2 = n2;
  std::vector<double> gauss_log(constellation.order), lp0, lp1, num, den;
  for (int n = 0; n < q_sym; ++n) {
    const ObservationFrame frame = extract_frame(z, n, n1, n2);
    // Window means, with the center symbol kept (its ISI is not cancelled).
    Eigen::VectorXd xbar = Eigen::VectorXd::Zero(cols);
    for (int c = 0; c < cols; ++c) {
      const int sym = n - n2 - mh + c;
      if (sym >= 0 && sym < q_sym && c != conv.selected_column) xbar(c) = mean[sym];
    }
    const Eigen::VectorXd recon = conv.mat * xbar;
    work.samples.assign(frame.samples.begin(), frame.samples.end());
    for (int i = 0; i < filter.length(); ++i) work.samples[i] -= recon(i);
    const double est = estimate_symbol(filter, work);

    if (constellation.order == 2) {
      out[n] = 2.0 * est / c_rel;
      continue;
    }
    // Gaussian per-level likelihoods around mu * amplitude, demapped per bit
    // with every other bit's prior (never the bit's own).
    for (int l = 0; l < constellation.order; ++l) {
      const double d = est - mu * constellation.levels[l];
      gauss_log[l] = -d * d / (2.0 * s2);
    }
    lp0.assign(q, 0.0);
    lp1.assign(q, 0.0);
    for (int m = 0; m < q; ++m) {
      const double l_prior = prior_llrs[static_cast<std::size_t>(n) * q + m];
      lp0[m] = log_sigmoid(l_prior);
      lp1[m] = log_sigmoid(-l_prior);
    }
    for (int m = 0; m < q; ++m) {
      num.clear();
      den.clear();
      for (int l = 0; l < constellation.order; ++l) {
        double metric = gauss_log[l];
        for (int m2 = 0; m2 < q; ++m2) {
          if (m2 == m) continue;
          metric += constellation.bit_labels[l][m2] ? lp1[m2] : lp0[m2];
        }
        (constellation.bit_labels[l][m] ? den : num).push_back(metric);
      }
      out[static_cast<std::size_t>(n) * q + m] = lse(num) - lse(den);
    }
  }
  return out;
}

TurboResult turbo_equalize(const std::vector<double>& z, const LdpcCode& code,
                           const ChannelModel& channel, const PamConstellation& constellation,
                           const EqzNetBank* bank, const TurboConfig& config) {
  const int q = constellation.bits_per_symbol;
  const int q_sym = static_cast<int>(z.size());
  if (q_sym * q != code.n)
    throw std::invalid_argument("received block carries " + std::to_string(q_sym * q) +
                                " bits but the code length is " + std::to_string(code.n));
  if (config.iterations < 1) throw std::invalid_argument("need at least one turbo iteration");
  if (config.subsequent == TurboEq::EqzNet)
    throw std::invalid_argument("later iterations must use a conventional equalizer");
  const bool wants_net = config.first == TurboEq::EqzNet;
  if (wants_net && (!bank || static_cast<int>(bank->nets.size()) != q))
    throw std::invalid_argument("EqzNet schedule needs a bank with one network per bit");

  // A strictly zero noise variance only happens in noiseless constructions;
  // the floor keeps every equalizer's arithmetic finite there.
  ChannelModel eq_channel = channel;
  eq_channel.noise_variance = std::max(channel.noise_variance, 1e-12);

  const bool uses_bcjr = config.first == TurboEq::Bcjr || config.subsequent == TurboEq::Bcjr;
  TrellisSpec trellis;
  if (uses_bcjr) trellis = build_trellis(eq_channel, constellation);

  std::vector<int> perm;
  if (config.interleaver_seed) perm = make_interleaver(code.n, *config.interleaver_seed);

  TurboResult res;
  std::vector<double> priors(code.n, 0.0);  // transmitted-bit order
  for (int round = 0; round < config.iterations; ++round) {
    const TurboEq eq = round == 0 ? config.first : config.subsequent;
    std::vector<double> extrinsic(code.n);
    if (eq == TurboEq::EqzNet) {
      for (int n = 0; n < q_sym; ++n) {
        const ObservationFrame frame = extract_frame(z, n, config.n1, config.n2);
        const std::vector<double> llrs = bank_forward(*bank, frame);
        for (int m = 0; m < q; ++m) extrinsic[static_cast<std::size_t>(n) * q + m] = llrs[m];
      }
    } else if (eq == TurboEq::Lmmse) {
      extrinsic = lmmse_with_priors(z, eq_channel, constellation, priors, config.n1, config.n2);
      for (double& l : extrinsic) l = clamp_llr(l);
    } else {
      const EqualizeResult full =
          map_equalize(z, trellis, eq_channel.noise_variance, round == 0 ? nullptr : &priors);
      for (int i = 0; i < code.n; ++i)
        extrinsic[i] = clamp_llr(full.bit_llrs.values[i] - priors[i]);
    }

    const std::vector<double> to_decoder = perm.empty() ? extrinsic : unpermute(extrinsic, perm);
    const DecodeResult dec = decode(code, to_decoder, config.decoder_iterations);

    std::vector<std::uint8_t> message(code.k);
    for (int j = 0; j < code.k; ++j) message[j] = dec.hard_bits[code.info_positions[j]];
    res.per_iteration_bits.push_back(message);
    res.decoded_bits = std::move(message);
    res.iterations_run = round + 1;
    if (dec.converged) {
      res.converged = true;
      break;
    }
    priors = perm.empty() ? dec.extrinsic : permute(dec.extrinsic, perm);
  }
  while (static_cast<int>(res.per_iteration_bits.size()) < config.iterations)
    res.per_iteration_bits.push_back(res.decoded_bits);
  return res;
}

}  // namespace eqz
