#pragma once

#include <cstdint>
#include <utility>
#include <vector>

#include "eqz/llr.hpp"
#include "eqz/txchain.hpp"

namespace eqz {

// Full-state trellis over the constellation alphabet with channel memory M_h.
// State s encodes (x_{n-1}, ..., x_{n-M_h}) as base-M level-index digits with
// the most recent symbol in the least significant digit.
struct TrellisSpec {
  PamConstellation constellation;
  std::vector<double> taps;
  int memory = 0;
  long state_count = 1;
  std::vector<long> next_state;  // [s * M + a]
  std::vector<double> outputs;   // [s * M + a], noiseless channel output

  int num_inputs() const { return constellation.order; }
  // Level index of x_{n-i} stored in state s, i in [1, memory].
  int state_digit(long s, int i) const;
};

struct LlrSequence {
  std::vector<double> values;
  double clamp_magnitude = kLlrClamp;
};

struct EqualizeResult {
  std::vector<std::vector<double>> posteriors;  // [symbol][level index], each row sums to 1
  LlrSequence bit_llrs;                         // one entry per source bit
};

TrellisSpec build_trellis(const ChannelModel& channel, const PamConstellation& constellation,
                          long state_budget = 65536);

// Log-domain forward-backward over the whole block.  Boundary handling
// matches the zero-padded channel: the first M_h steps mask out-of-block
// memory symbols to amplitude zero, and the final state distribution is
// uniform (no observation constrains the right tail).  Optional per-bit
// prior LLRs (length Q * bits_per_symbol) enter the branch metrics.
EqualizeResult map_equalize(const std::vector<double>& z, const TrellisSpec& trellis,
                            double noise_variance, const std::vector<double>* bit_priors = nullptr);

// Exhaustive reference: enumerates all M^Q symbol sequences.  Returns the
// per-symbol posterior matrix.  Guarded by M^Q <= 2^20.
std::vector<std::vector<double>> brute_force_map(const std::vector<double>& z, const ChannelModel& channel,
                                                 const PamConstellation& constellation, double noise_variance,
                                                 const std::vector<double>* bit_priors = nullptr);

// Sliding-window variant: per symbol, runs the forward-backward pass on the
// window centered there (clipped to the block) and emits only the center
// LLRs.  Interior window edges start from uniform state distributions; a
// window edge that coincides with the block edge keeps the exact zero-padded
// treatment.  `window` must be odd and >= 2 * memory + 1.
LlrSequence windowed_map(const std::vector<double>& z, const TrellisSpec& trellis, double noise_variance,
                         int window);

struct CalibrationOptions {
  long min_bits = 200000;   // simulate at least this many bits
  int min_errors = 200;     // and until the full-block reference has this many errors
  long max_bits = 2000000;  // hard cap
  int max_window = 31;
  int block_symbols = 1000;
  std::uint64_t seed = 1;
};

struct WindowCalibration {
  int window = 1;
  bool aligned = false;
  double reference_ber = 0.0;
  std::vector<std::pair<int, double>> ber_by_window;  // probed (window, BER)
};

// Probes odd windows from 2*M_h+1 upward on a shared seeded block set and
// returns the smallest window whose BER is within target_ber_ratio of the
// full-block BER.  Never fails: if no probed window aligns, returns the
// largest one with aligned=false.
WindowCalibration calibrate_window(const ChannelModel& channel, const PamConstellation& constellation,
                                   double ebn0_db, double target_ber_ratio,
                                   const CalibrationOptions& opts = {});

}  // namespace eqz
