#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "eqz/eqznet.hpp"

namespace eqz {

struct GeometrySpec {
  bool auto_calibrate = false;  // derive N1 = N2 from window calibration
  int n1 = 7;
  int n2 = 7;
};

struct StoppingRule {
  long min_bit_errors = 200;
  long max_bits = 10000000;
};

// EqzNet training recipe for sweeps that train per point.
struct TrainSpec {
  std::string architecture = "knet";  // "knet" | "sum" | "head"
  int k = 2;
  int l = 2;                          // sum / head only
  double alpha = 2.0;
  double w = 1.0;
  std::string init = "lmmse";         // "lmmse" | "random"
  TrainConfig optimizer;
  long dataset_bits = 200000;
};

struct EqualizerSpec {
  std::string type = "lmmse";  // "lmmse" | "bcjr" | "eqznet"
  std::string checkpoint;      // eqznet: load this bank when nonempty
  std::optional<TrainSpec> train;  // eqznet: train per sweep point otherwise
};

struct TurboSpec {
  int iterations = 3;
  std::string first = "eqznet";
  std::string subsequent = "lmmse";
  int decoder_iterations = 30;
  bool interleaver = true;
  std::string code_path;  // alist file
};

struct CalibrationSpec {
  double ebn0_db = 10.0;
  double target_ber_ratio = 1.05;
  int max_window = 31;
  long min_bits = 200000;
  int min_errors = 200;
  long max_bits = 2000000;
  int block_symbols = 1000;
};

struct GainTableSpec {
  double target_ber = 1e-3;
  std::vector<EqualizerSpec> equalizers;  // compared against the LMMSE baseline
};

struct LlrHistSpec {
  long bits = 100000;
};

struct ExperimentConfig {
  std::string channel_label = "h_A";  // "h_A", "h_B", or "custom"
  std::vector<double> channel_taps;
  int modulation = 2;
  std::string mode = "uncoded";  // "uncoded" | "turbo"
  EqualizerSpec equalizer;
  std::vector<double> ebn0_db;
  StoppingRule stopping;
  std::uint64_t seed = 1;
  int block_symbols = 1000;
  GeometrySpec geometry;
  CalibrationSpec calibration;
  std::optional<TurboSpec> turbo;
  GainTableSpec gain_table;
  LlrHistSpec llr_hist;
};

// Strict parse: every key must be known, every value well-typed, and the
// invariants hold (nonempty Eb/N0 grid, min bit errors >= 100, ...).
// Throws std::invalid_argument with the offending key path.
ExperimentConfig parse_config(const std::string& json_text);
ExperimentConfig load_config_file(const std::string& path);

}  // namespace eqz
