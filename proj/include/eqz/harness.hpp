#pragma once

#include <optional>
#include <string>
#include <vector>

#include "eqz/bcjr.hpp"
#include "eqz/checkpoint.hpp"
#include "eqz/config.hpp"

namespace eqz {

struct BerRecord {
  double ebn0_db = 0.0;
  long bits = 0;
  long errors = 0;
  double ber = 0.0;
  std::string equalizer;
  std::string channel;
  int modulation = 2;
  std::string mode;             // "uncoded" | "turbo"
  std::string seed_digest;      // hex fold of the per-block seeds actually counted
  long wall_ms = 0;
  bool max_bits_reached = false;  // stopped by the bit cap before reaching min errors
};

// Fixed, versioned schema; golden-file tested.
std::string ber_csv_header();
std::string ber_csv_row(const BerRecord& record);
void write_ber_csv(const std::vector<BerRecord>& records, const std::string& path);

// One record per Eb/N0 point.  Blocks are seeded by index from the master
// seed, dispatched in waves of `workers`, and reduced in block order with the
// stopping rule evaluated after every block — so worker count cannot change
// any count or digest.  EqzNet equalizers with a training spec are trained
// fresh at every point (one model per channel, M, and SNR).
std::vector<BerRecord> run_sweep(const ExperimentConfig& config, int workers);

// Label used in records and file names: "lmmse", "bcjr", "eqznet-k2",
// "eqznet-sum-6-2", "eqznet-head-6-2", with "+<subsequent>" appended for
// turbo schedules.
std::string equalizer_label(const ExperimentConfig& config);

// Realizes a training spec at one operating point: builds the labeled
// dataset at the point's noise variance, runs the staged recipe (pretrain
// the K block; for sum/head also pretrain a 2-wide block, compose, and
// fine-tune everything), one network per bit position.  Deterministic per
// (config, spec, ebn0).
struct TrainedEqualizer {
  EqzNetBank bank;
  std::vector<std::vector<double>> traces;  // final-stage per-epoch loss, one row per bit net
};
TrainedEqualizer train_equalizer(const ExperimentConfig& config, const TrainSpec& spec,
                                 double ebn0_db, double code_rate);

// Trains at every grid point and persists one checkpoint + one loss-trace
// CSV per point into out_dir.  Returns the file paths.
struct TrainingOutput {
  std::vector<std::string> checkpoints;
  std::vector<std::string> traces;
};
TrainingOutput run_training(const ExperimentConfig& config, const std::string& out_dir);

// Window calibration for the configured channel and modulation; the chosen
// window fixes the symmetric frame geometry N1 = N2 = (window-1)/2.
struct CalibrationOutput {
  int n1 = 0;
  int n2 = 0;
  WindowCalibration result;
};
CalibrationOutput run_calibration(const ExperimentConfig& config);
std::string write_calibration_report(const CalibrationOutput& out, const ExperimentConfig& config,
                                     const std::string& out_dir);

// Eb/N0 at which a measured curve crosses the target BER, by log-linear
// interpolation between adjacent grid points; nullopt when the target lies
// outside the curve's measured range.
std::optional<double> ebn0_at_ber(const std::vector<BerRecord>& curve, double target_ber);

struct GainCurve {
  std::string label;
  std::vector<BerRecord> records;
  std::optional<double> op_count;  // multiply-accumulates per output, when defined
};

struct GainRow {
  std::string equalizer;
  double ebn0_at_target = 0.0;
  double gain_db = 0.0;
  std::optional<double> complexity_factor;
  bool in_range = false;  // false rows carry no interpolated numbers
};

std::vector<GainRow> compute_gain_table(const GainCurve& lmmse_baseline,
                                        const std::vector<GainCurve>& curves, double target_ber);

// Sweeps the LMMSE baseline plus every configured comparison equalizer over
// the grid, then interpolates the gain table.  Curves are returned through
// `curves_out` when given (baseline first).
std::vector<GainRow> run_gain_table(const ExperimentConfig& config, int workers,
                                    std::vector<GainCurve>* curves_out = nullptr);
void write_gain_csv(const std::vector<GainRow>& rows, const std::string& path);

// Output-LLR histogram: fixed bins of width 0.5 spanning [-40, 40], one
// series per true bit value; boundary values fold into the edge bins.
struct LlrHistogram {
  double ebn0_db = 0.0;
  std::vector<long> bit0;  // 160 counts
  std::vector<long> bit1;
  long samples0 = 0;
  long samples1 = 0;
};
std::vector<LlrHistogram> run_llr_histogram(const ExperimentConfig& config);
void write_llr_csv(const std::vector<LlrHistogram>& histograms, const std::string& path);

// Run manifest: config digest, seed, workers, and the artifact list.
void write_manifest(const std::string& out_dir, const std::string& command,
                    const std::string& config_text, std::uint64_t seed, int workers,
                    const std::vector<std::string>& outputs);

}  // namespace eqz
