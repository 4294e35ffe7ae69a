#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>
#include <random>

#include "eqz/bcjr.hpp"
#include "eqz/rng.hpp"
#include "eqz/txchain.hpp"

using namespace eqz;

namespace {

std::vector<double> random_block(const ChannelModel& ch, const PamConstellation& cons, int q_sym,
                                 std::uint64_t seed) {
  const auto bits = random_bits(static_cast<long>(q_sym) * cons.bits_per_symbol, seed);
  return apply_channel(gray_map(bits, cons), ch, seed + 1);
}

}  // namespace

TEST_CASE("trellis encodes state digits base-M, most recent first") {
  const ChannelModel ch({1.0, 0.5, 0.25}, 0.1);
  const PamConstellation cons = PamConstellation::make(4);
  const TrellisSpec t = build_trellis(ch, cons);
  CHECK(t.memory == 2);
  CHECK(t.state_count == 16);
  // Walking input a from state s shifts a into the most recent digit.
  for (long s = 0; s < t.state_count; ++s)
    for (int a = 0; a < 4; ++a) {
      const long ns = t.next_state[s * 4 + a];
      CHECK(t.state_digit(ns, 1) == a);
      CHECK(t.state_digit(ns, 2) == t.state_digit(s, 1));
    }
  CHECK_THROWS(build_trellis(ChannelModel(std::vector<double>(12, 1.0), 0.1), cons, 65536));
}

TEST_CASE("noiseless trellis outputs reproduce the convolution") {
  const ChannelModel ch({1.0, 0.5}, 0.0);
  const PamConstellation cons = PamConstellation::make(2);
  const TrellisSpec t = build_trellis(ch, cons);
  // state holds x_{n-1}; output = h0 x_n + h1 x_{n-1}
  for (long s = 0; s < 2; ++s)
    for (int a = 0; a < 2; ++a) {
      const double xprev = cons.levels[t.state_digit(s, 1)];
      const double xnow = cons.levels[a];
      CHECK(t.outputs[s * 2 + a] == doctest::Approx(1.0 * xnow + 0.5 * xprev).epsilon(1e-15));
    }
}

TEST_CASE("map_equalize matches the exhaustive reference on the defining case") {
  const ChannelModel ch({1.0, 0.5}, 0.0);
  const PamConstellation cons = PamConstellation::make(2);
  const TrellisSpec t = build_trellis(ch, cons);
  const double s2 = 0.2;
  const std::vector<double> z = random_block(ChannelModel({1.0, 0.5}, s2), cons, 6, 11);
  const EqualizeResult fast = map_equalize(z, t, s2);
  const auto slow = brute_force_map(z, ch, cons, s2);
  REQUIRE(fast.posteriors.size() == slow.size());
  for (std::size_t n = 0; n < slow.size(); ++n)
    for (int a = 0; a < 2; ++a)
      CHECK(std::abs(fast.posteriors[n][a] - slow[n][a]) < 1e-12);
}

TEST_CASE("map_equalize matches the exhaustive reference with priors and 4-PAM") {
  auto gen = make_engine(500);
  std::normal_distribution<double> prior_dist(0.0, 2.0);
  for (int rep = 0; rep < 25; ++rep) {
    const int order = rep % 2 ? 2 : 4;
    const PamConstellation cons = PamConstellation::make(order);
    const int q_sym = 3 + rep % 4;
    std::vector<double> taps = {1.0, -0.4};
    if (rep % 3 == 0) taps.push_back(0.2);
    const double s2 = 0.05 + 0.9 * (rep % 5) / 4.0;
    const ChannelModel ch(taps, s2);
    const TrellisSpec t = build_trellis(ChannelModel(taps, 0.0), cons);
    const std::vector<double> z = random_block(ch, cons, q_sym, 1000 + rep);
    std::vector<double> priors(static_cast<std::size_t>(q_sym) * cons.bits_per_symbol);
    for (auto& p : priors) p = prior_dist(gen);
    const EqualizeResult fast = map_equalize(z, t, s2, &priors);
    const auto slow = brute_force_map(z, ch, cons, s2, &priors);
    for (std::size_t n = 0; n < slow.size(); ++n)
      for (int a = 0; a < order; ++a)
        CHECK(std::abs(fast.posteriors[n][a] - slow[n][a]) < 1e-9);
  }
}

TEST_CASE("posterior rows are probability vectors") {
  const ChannelModel ch = ChannelModel::preset("h_A", 0.1);
  const PamConstellation cons = PamConstellation::make(4);
  const TrellisSpec t = build_trellis(ChannelModel(ch.taps, 0.0), cons);
  const std::vector<double> z = random_block(ch, cons, 40, 3);
  const EqualizeResult r = map_equalize(z, t, 0.1);
  for (const auto& row : r.posteriors) {
    double sum = 0.0;
    for (double p : row) {
      CHECK(p >= 0.0);
      sum += p;
    }
    CHECK(sum == doctest::Approx(1.0).epsilon(1e-12));
  }
  CHECK(r.bit_llrs.values.size() == 80);
}

TEST_CASE("memoryless channel reduces to the AWGN LLR") {
  const ChannelModel ch({1.0}, 0.0);
  const PamConstellation cons = PamConstellation::make(2);
  const TrellisSpec t = build_trellis(ch, cons);
  const double s2 = 0.3;
  const std::vector<double> z = {0.4, -1.2, 0.05, 2.0};
  const EqualizeResult r = map_equalize(z, t, s2);
  for (std::size_t n = 0; n < z.size(); ++n)
    CHECK(r.bit_llrs.values[n] == doctest::Approx(2.0 * z[n] / s2).epsilon(1e-12));
}

TEST_CASE("negating the block negates every bit LLR bit-exactly") {
  const ChannelModel ch = ChannelModel::preset("h_A", 0.15);
  const PamConstellation cons = PamConstellation::make(2);
  const TrellisSpec t = build_trellis(ChannelModel(ch.taps, 0.0), cons);
  std::vector<double> z = random_block(ch, cons, 60, 17);
  const EqualizeResult pos = map_equalize(z, t, 0.15);
  for (auto& v : z) v = -v;
  const EqualizeResult neg = map_equalize(z, t, 0.15);
  for (std::size_t i = 0; i < pos.bit_llrs.values.size(); ++i)
    CHECK(pos.bit_llrs.values[i] == -neg.bit_llrs.values[i]);
}

TEST_CASE("null priors and zero priors agree bit-exactly") {
  const ChannelModel ch = ChannelModel::preset("h_B", 0.2);
  const PamConstellation cons = PamConstellation::make(2);
  const TrellisSpec t = build_trellis(ChannelModel(ch.taps, 0.0), cons);
  const std::vector<double> z = random_block(ch, cons, 50, 23);
  const std::vector<double> zeros(50, 0.0);
  const EqualizeResult a = map_equalize(z, t, 0.2);
  const EqualizeResult b = map_equalize(z, t, 0.2, &zeros);
  for (std::size_t i = 0; i < a.bit_llrs.values.size(); ++i)
    CHECK(a.bit_llrs.values[i] == b.bit_llrs.values[i]);
}

TEST_CASE("priors steer the posterior") {
  // All-zero observations are sign-symmetric: likelihood(x) = likelihood(-x),
  // so without priors every bit LLR is exactly zero.  Positive priors must
  // break the tie and pull every posterior positive.
  const ChannelModel ch({1.0, 0.7}, 0.5);
  const PamConstellation cons = PamConstellation::make(2);
  const TrellisSpec t = build_trellis(ChannelModel(ch.taps, 0.0), cons);
  const std::vector<double> z(6, 0.0);
  const EqualizeResult flat = map_equalize(z, t, 0.5);
  for (double v : flat.bit_llrs.values) CHECK(std::abs(v) < 1e-9);
  std::vector<double> priors(6, 5.0);  // strong belief in bit 0 -> +1
  const EqualizeResult r = map_equalize(z, t, 0.5, &priors);
  for (double v : r.bit_llrs.values) CHECK(v > 0.1);
}

TEST_CASE("bit LLRs are clamped to +/-40") {
  const ChannelModel ch({1.0}, 0.0);
  const PamConstellation cons = PamConstellation::make(2);
  const TrellisSpec t = build_trellis(ch, cons);
  const std::vector<double> z = {50.0, -50.0};
  const EqualizeResult r = map_equalize(z, t, 1e-4);
  CHECK(r.bit_llrs.values[0] == 40.0);
  CHECK(r.bit_llrs.values[1] == -40.0);
}

TEST_CASE("a window spanning the block equals the full pass") {
  const ChannelModel ch = ChannelModel::preset("h_A", 0.1);
  const PamConstellation cons = PamConstellation::make(2);
  const TrellisSpec t = build_trellis(ChannelModel(ch.taps, 0.0), cons);
  const std::vector<double> z = random_block(ch, cons, 25, 31);
  const EqualizeResult full = map_equalize(z, t, 0.1);
  const LlrSequence win = windowed_map(z, t, 0.1, 2 * 25 + 1);
  for (std::size_t i = 0; i < full.bit_llrs.values.size(); ++i)
    CHECK(win.values[i] == doctest::Approx(full.bit_llrs.values[i]).epsilon(1e-12));
}

TEST_CASE("narrow windows approximate and validate their arguments") {
  const ChannelModel ch = ChannelModel::preset("h_A", 0.05);
  const PamConstellation cons = PamConstellation::make(2);
  const TrellisSpec t = build_trellis(ChannelModel(ch.taps, 0.0), cons);
  const std::vector<double> z = random_block(ch, cons, 200, 37);
  const EqualizeResult full = map_equalize(z, t, 0.05);
  const LlrSequence win = windowed_map(z, t, 0.05, 17);
  int agree = 0;
  for (std::size_t i = 0; i < win.values.size(); ++i)
    agree += (win.values[i] < 0) == (full.bit_llrs.values[i] < 0);
  CHECK(agree > 195);  // near-MAP hard decisions
  CHECK_THROWS(windowed_map(z, t, 0.05, 16));  // even
  CHECK_THROWS(windowed_map(z, t, 0.05, 7));   // < 2*memory+1
}

TEST_CASE("calibration picks window 1 on a memoryless channel") {
  const ChannelModel ch({1.0}, 0.0);
  const PamConstellation cons = PamConstellation::make(2);
  CalibrationOptions opts;
  opts.min_bits = 20000;
  opts.min_errors = 50;
  opts.max_bits = 100000;
  opts.max_window = 7;
  opts.block_symbols = 500;
  const WindowCalibration cal = calibrate_window(ch, cons, 4.0, 1.05, opts);
  CHECK(cal.window == 1);
  CHECK(cal.aligned);
  CHECK(cal.reference_ber > 0.0);
  REQUIRE(!cal.ber_by_window.empty());
  CHECK(cal.ber_by_window.front().first == 1);
}

TEST_CASE("calibration on h_A returns an odd window wide enough for the memory") {
  const ChannelModel ch = ChannelModel::preset("h_A", 0.0);
  const PamConstellation cons = PamConstellation::make(2);
  CalibrationOptions opts;
  opts.min_bits = 30000;
  opts.min_errors = 50;
  opts.max_bits = 60000;
  opts.max_window = 19;
  opts.block_symbols = 500;
  const WindowCalibration cal = calibrate_window(ch, cons, 8.0, 1.10, opts);
  CHECK(cal.window % 2 == 1);
  CHECK(cal.window >= 2 * ch.memory() + 1);
  CHECK(cal.window <= 19);
  for (const auto& [w, ber] : cal.ber_by_window) {
    CHECK(w % 2 == 1);
    CHECK(ber >= 0.0);
  }
}
