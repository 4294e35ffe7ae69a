#pragma once

#include <cstdint>
#include <string>
#include <vector>

namespace eqz {

// Real-valued ISI channel: taps h_0..h_{M_h} plus AWGN variance sigma_w^2.
// Signals are zero outside the transmitted block (zero-padding convention).
struct ChannelModel {
  std::vector<double> taps;
  double noise_variance = 0.0;

  ChannelModel() = default;
  ChannelModel(std::vector<double> taps_in, double noise_var);

  int memory() const { return static_cast<int>(taps.size()) - 1; }

  // Named unit-power presets: "h_A" (severe ISI), "h_B" (mild ISI).
  static ChannelModel preset(const std::string& name, double noise_var);
};

// Gray-labeled M-PAM with unit average symbol energy.
struct PamConstellation {
  int order = 2;
  int bits_per_symbol = 1;
  std::vector<double> levels;                          // level index -> amplitude (ascending for M>2)
  std::vector<std::vector<std::uint8_t>> bit_labels;   // level index -> Gray label, MSB first
  std::vector<int> label_to_level;                     // packed label -> level index

  static PamConstellation make(int order);

  int level_index_from_bits(const std::uint8_t* bits) const;
};

// One frame of received samples [z_{n-N2}, ..., z_n, ..., z_{n+N1}].
struct ObservationFrame {
  std::vector<double> samples;
  int n1 = 0;
  int n2 = 0;
  int length() const { return n1 + n2 + 1; }
  double center() const { return samples[static_cast<std::size_t>(n2)]; }
};

struct SymbolBlock {
  std::vector<double> symbols;
  std::vector<std::uint8_t> source_bits;
};

std::vector<std::uint8_t> random_bits(long count, std::uint64_t seed);

SymbolBlock gray_map(const std::vector<std::uint8_t>& bits, const PamConstellation& constellation);

// z_n = sum_i h_i x_{n-i} + w_n for n in [0, Q); x is zero outside the block.
// Noise is drawn only when noise_variance > 0, so a zero-variance channel
// returns the exact convolution.
std::vector<double> apply_channel(const SymbolBlock& block, const ChannelModel& channel, std::uint64_t seed);

// sigma_w^2 = 1 / (2 * code_rate * bits_per_symbol * 10^(ebn0_db/10))
double ebn0_to_noise_variance(double ebn0_db, const PamConstellation& constellation, double code_rate);

// Frame centered on sample n; out-of-range samples are zero-filled.
ObservationFrame extract_frame(const std::vector<double>& z, int n, int n1, int n2);

}  // namespace eqz
