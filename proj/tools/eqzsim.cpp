#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <optional>
#include <sstream>
#include <string>

#include <CLI11.hpp>

#include "eqz/harness.hpp"

namespace {

std::string slurp(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw std::runtime_error("cannot open config file: " + path);
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

struct CommonArgs {
  std::string config_path;
  std::string out_dir = ".";
  std::optional<std::uint64_t> seed;
  int workers = 1;
};

void add_common(CLI::App* cmd, CommonArgs& args, bool with_workers = true) {
  cmd->add_option("--config", args.config_path, "experiment config (JSON)")->required();
  cmd->add_option("--out", args.out_dir, "output directory");
  cmd->add_option("--seed", args.seed, "override the config seed");
  if (with_workers) cmd->add_option("--workers", args.workers, "parallel block workers")
      ->check(CLI::PositiveNumber);
}

struct LoadedConfig {
  eqz::ExperimentConfig config;
  std::string text;
};

LoadedConfig load(const CommonArgs& args) {
  LoadedConfig lc;
  lc.text = slurp(args.config_path);
  lc.config = eqz::parse_config(lc.text);
  if (args.seed) lc.config.seed = *args.seed;
  return lc;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Monte-Carlo BER simulator for LMMSE, MAP, and EqzNet equalizers"};
  app.require_subcommand(1);

  CommonArgs sweep_args, train_args, cal_args, gain_args, hist_args;
  CLI::App* sweep = app.add_subcommand("sweep", "run a BER sweep over the Eb/N0 grid");
  add_common(sweep, sweep_args);
  CLI::App* train = app.add_subcommand("train", "train EqzNet checkpoints over the grid");
  add_common(train, train_args, false);
  CLI::App* cal = app.add_subcommand("calibrate-window", "choose the MAP window / frame geometry");
  add_common(cal, cal_args, false);
  CLI::App* gain = app.add_subcommand("gain-table", "gain vs LMMSE at a target BER");
  add_common(gain, gain_args);
  CLI::App* hist = app.add_subcommand("llr-hist", "histogram the equalizer output LLRs");
  add_common(hist, hist_args, false);

  CLI11_PARSE(app, argc, argv);

  try {
    if (sweep->parsed()) {
      const LoadedConfig lc = load(sweep_args);
      const auto records = eqz::run_sweep(lc.config, sweep_args.workers);
      std::filesystem::create_directories(sweep_args.out_dir);
      const std::string path = sweep_args.out_dir + "/ber.csv";
      eqz::write_ber_csv(records, path);
      eqz::write_manifest(sweep_args.out_dir, "sweep", lc.text, lc.config.seed,
                          sweep_args.workers, {path});
      for (const auto& r : records) std::cout << eqz::ber_csv_row(r) << '\n';
    } else if (train->parsed()) {
      const LoadedConfig lc = load(train_args);
      const auto out = eqz::run_training(lc.config, train_args.out_dir);
      std::vector<std::string> outputs = out.checkpoints;
      outputs.insert(outputs.end(), out.traces.begin(), out.traces.end());
      eqz::write_manifest(train_args.out_dir, "train", lc.text, lc.config.seed, 1, outputs);
      for (const auto& p : outputs) std::cout << p << '\n';
    } else if (cal->parsed()) {
      const LoadedConfig lc = load(cal_args);
      const auto out = eqz::run_calibration(lc.config);
      const std::string path = eqz::write_calibration_report(out, lc.config, cal_args.out_dir);
      eqz::write_manifest(cal_args.out_dir, "calibrate-window", lc.text, lc.config.seed, 1, {path});
      std::cout << "window " << out.result.window << " (N1 = N2 = " << out.n1 << ")\n";
    } else if (gain->parsed()) {
      const LoadedConfig lc = load(gain_args);
      std::vector<eqz::GainCurve> curves;
      const auto rows = eqz::run_gain_table(lc.config, gain_args.workers, &curves);
      std::filesystem::create_directories(gain_args.out_dir);
      std::vector<std::string> outputs;
      const std::string gain_path = gain_args.out_dir + "/gain.csv";
      eqz::write_gain_csv(rows, gain_path);
      outputs.push_back(gain_path);
      for (const auto& c : curves) {
        const std::string p = gain_args.out_dir + "/ber_" + c.label + ".csv";
        eqz::write_ber_csv(c.records, p);
        outputs.push_back(p);
      }
      eqz::write_manifest(gain_args.out_dir, "gain-table", lc.text, lc.config.seed,
                          gain_args.workers, outputs);
      for (const auto& r : rows)
        std::cout << r.equalizer << (r.in_range ? " gain " + std::to_string(r.gain_db) + " dB"
                                                : " out of range")
                  << '\n';
    } else if (hist->parsed()) {
      const LoadedConfig lc = load(hist_args);
      const auto histograms = eqz::run_llr_histogram(lc.config);
      std::filesystem::create_directories(hist_args.out_dir);
      const std::string path = hist_args.out_dir + "/llr_hist.csv";
      eqz::write_llr_csv(histograms, path);
      eqz::write_manifest(hist_args.out_dir, "llr-hist", lc.text, lc.config.seed, 1, {path});
      std::cout << path << '\n';
    }
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return 1;
  }
  return 0;
}
