#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <filesystem>
#include <fstream>
#include <sstream>

#include "eqz/harness.hpp"

using namespace eqz;

namespace {

ExperimentConfig tiny_lmmse_config() {
  return parse_config(R"({
    "channel": "h_B",
    "equalizer": {"type": "lmmse"},
    "ebn0_db": [4, 6],
    "stopping": {"min_bit_errors": 100, "max_bits": 40000},
    "seed": 11,
    "block_symbols": 400,
    "geometry": {"n1": 5, "n2": 5}
  })");
}

bool same_counts(const BerRecord& a, const BerRecord& b) {
  return a.ebn0_db == b.ebn0_db && a.bits == b.bits && a.errors == b.errors && a.ber == b.ber &&
         a.equalizer == b.equalizer && a.channel == b.channel && a.modulation == b.modulation &&
         a.mode == b.mode && a.seed_digest == b.seed_digest;
}

std::string slurp(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  REQUIRE(in.good());
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

std::string temp_dir(const char* name) {
  const auto d = std::filesystem::temp_directory_path() / name;
  std::filesystem::remove_all(d);
  std::filesystem::create_directories(d);
  return d.string();
}

}  // namespace

TEST_CASE("the BER CSV schema is pinned") {
  CHECK(ber_csv_header() == "ebn0_db,bits,errors,ber,equalizer,channel,M,mode,seed_digest,wall_ms");
  BerRecord r;
  r.ebn0_db = 7.5;
  r.bits = 100000;
  r.errors = 123;
  r.ber = 1.23e-3;
  r.equalizer = "lmmse";
  r.channel = "h_A";
  r.modulation = 2;
  r.mode = "uncoded";
  r.seed_digest = "00000000deadbeef";
  r.wall_ms = 42;
  CHECK(ber_csv_row(r) == "7.5,100000,123,1.230000000e-03,lmmse,h_A,2,uncoded,00000000deadbeef,42");
}

TEST_CASE("sweeps are reproducible and worker-count independent") {
  const ExperimentConfig cfg = tiny_lmmse_config();
  const auto serial = run_sweep(cfg, 1);
  const auto parallel = run_sweep(cfg, 8);
  REQUIRE(serial.size() == 2);
  REQUIRE(parallel.size() == 2);
  for (std::size_t i = 0; i < serial.size(); ++i) {
    CHECK(same_counts(serial[i], parallel[i]));
    CHECK(serial[i].errors >= 100);
    CHECK(serial[i].ber > 0.0);
    CHECK(serial[i].ber < 0.5);
    CHECK_FALSE(serial[i].max_bits_reached);
  }
  const auto again = run_sweep(cfg, 3);
  for (std::size_t i = 0; i < serial.size(); ++i) CHECK(same_counts(serial[i], again[i]));
  ExperimentConfig other = cfg;
  other.seed = 12;
  const auto moved = run_sweep(other, 1);
  CHECK(moved[0].seed_digest != serial[0].seed_digest);
}

TEST_CASE("the bit cap flags points that never reach the error floor") {
  ExperimentConfig cfg = tiny_lmmse_config();
  cfg.ebn0_db = {20.0};  // nearly error free on h_B
  cfg.stopping.max_bits = 4000;
  const auto records = run_sweep(cfg, 2);
  REQUIRE(records.size() == 1);
  CHECK(records[0].bits >= 4000);
  CHECK(records[0].max_bits_reached);
}

TEST_CASE("BCJR sweeps beat LMMSE sweeps on severe ISI") {
  ExperimentConfig cfg = parse_config(R"({
    "channel": "h_A",
    "equalizer": {"type": "bcjr"},
    "ebn0_db": [7],
    "stopping": {"min_bit_errors": 100, "max_bits": 60000},
    "seed": 5,
    "block_symbols": 500
  })");
  const auto bcjr = run_sweep(cfg, 4);
  cfg.equalizer.type = "lmmse";
  const auto lmmse = run_sweep(cfg, 4);
  CHECK(bcjr[0].equalizer == "bcjr");
  CHECK(lmmse[0].equalizer == "lmmse");
  CHECK(bcjr[0].ber < lmmse[0].ber);
}

TEST_CASE("curve interpolation is log-linear with exact hits honored") {
  std::vector<BerRecord> curve(3);
  curve[0].ebn0_db = 0.0;
  curve[0].ber = 1e-2;
  curve[1].ebn0_db = 2.0;
  curve[1].ber = 1e-4;
  curve[2].ebn0_db = 4.0;
  curve[2].ber = 0.0;  // unmeasurable tail point must be skipped
  auto x = ebn0_at_ber(curve, 1e-3);
  REQUIRE(x.has_value());
  CHECK(*x == doctest::Approx(1.0).epsilon(1e-12));
  x = ebn0_at_ber(curve, 1e-2);
  REQUIRE(x.has_value());
  CHECK(*x == 0.0);
  CHECK_FALSE(ebn0_at_ber(curve, 1e-6).has_value());
  CHECK_FALSE(ebn0_at_ber(curve, 0.5).has_value());
  CHECK_THROWS(ebn0_at_ber(curve, 0.0));
}

TEST_CASE("gain tables reference the LMMSE baseline") {
  GainCurve baseline;
  baseline.label = "lmmse";
  baseline.op_count = 15.0;
  baseline.records.resize(2);
  baseline.records[0].ebn0_db = 10.0;
  baseline.records[0].ber = 1e-2;
  baseline.records[1].ebn0_db = 14.0;
  baseline.records[1].ber = 1e-4;

  GainCurve better;
  better.label = "eqznet-k2";
  better.op_count = 32.0;
  better.records.resize(2);
  better.records[0].ebn0_db = 8.0;
  better.records[0].ber = 1e-2;
  better.records[1].ebn0_db = 12.0;
  better.records[1].ber = 1e-4;

  GainCurve outside;
  outside.label = "bcjr";
  outside.records.resize(2);
  outside.records[0].ebn0_db = 4.0;
  outside.records[0].ber = 5e-4;
  outside.records[1].ebn0_db = 6.0;
  outside.records[1].ber = 1e-5;

  const auto rows = compute_gain_table(baseline, {better, outside}, 1e-3);
  REQUIRE(rows.size() == 3);
  CHECK(rows[0].equalizer == "lmmse");
  CHECK(rows[0].gain_db == 0.0);
  CHECK(rows[0].in_range);
  REQUIRE(rows[0].complexity_factor.has_value());
  CHECK(*rows[0].complexity_factor == 1.0);
  CHECK(rows[1].equalizer == "eqznet-k2");
  CHECK(rows[1].in_range);
  CHECK(rows[1].gain_db == doctest::Approx(2.0).epsilon(1e-9));
  REQUIRE(rows[1].complexity_factor.has_value());
  CHECK(*rows[1].complexity_factor == doctest::Approx(32.0 / 15.0));
  CHECK(rows[2].equalizer == "bcjr");
  CHECK_FALSE(rows[2].in_range);  // its curve never spans the target

  const std::string dir = temp_dir("eqz_gain_csv");
  write_gain_csv(rows, dir + "/gain.csv");
  const std::string text = slurp(dir + "/gain.csv");
  CHECK(text.find("equalizer,ebn0_at_target_db,gain_db,complexity_factor,in_range") == 0);
  CHECK(text.find("bcjr,,,,0") != std::string::npos);
}

TEST_CASE("training runs produce reloadable checkpoints and full traces") {
  const std::string dir = temp_dir("eqz_train_out");
  const ExperimentConfig cfg = parse_config(R"({
    "channel": "h_B",
    "equalizer": {"type": "eqznet",
                  "train": {"architecture": "knet", "k": 2,
                            "optimizer": {"epochs": 3, "batch_size": 128, "seed": 2},
                            "dataset_bits": 4000}},
    "ebn0_db": [8],
    "seed": 21,
    "geometry": {"n1": 4, "n2": 4}
  })");
  const TrainingOutput out = run_training(cfg, dir);
  REQUIRE(out.checkpoints.size() == 1);
  REQUIRE(out.traces.size() == 1);

  const Checkpoint ckpt = load_checkpoint(out.checkpoints[0]);
  CHECK(ckpt.meta.channel_label == "h_B");
  CHECK(ckpt.meta.ebn0_db == 8.0);
  CHECK(ckpt.meta.seed == 21);
  CHECK(ckpt.meta.init == "lmmse");
  REQUIRE(ckpt.bank.nets.size() == 1);
  CHECK(ckpt.bank.nets[0].arch == EqzArch::KNet);
  CHECK(ckpt.bank.nets[0].n1 == 4);

  const std::string trace = slurp(out.traces[0]);
  CHECK(trace.find("epoch,bit,loss") == 0);
  int rows = 0;
  for (char c : trace) rows += c == '\n';
  CHECK(rows == 1 + 3);  // header + one row per epoch for the single bit net

  // Bit-identical rerun.
  const std::string dir2 = temp_dir("eqz_train_out2");
  const TrainingOutput out2 = run_training(cfg, dir2);
  CHECK(slurp(out.checkpoints[0]) == slurp(out2.checkpoints[0]));

  // The trained sweep path accepts the persisted bank.
  ExperimentConfig use = parse_config(R"({
    "channel": "h_B",
    "equalizer": {"type": "eqznet", "checkpoint": "PLACEHOLDER"},
    "ebn0_db": [8],
    "stopping": {"min_bit_errors": 100, "max_bits": 20000},
    "seed": 30,
    "block_symbols": 400
  })");
  use.equalizer.checkpoint = out.checkpoints[0];
  const auto records = run_sweep(use, 2);
  CHECK(records[0].equalizer == "eqznet-k2");
  CHECK(records[0].bits > 0);
}

TEST_CASE("per-point training inside a sweep is reproducible") {
  const ExperimentConfig cfg = parse_config(R"({
    "channel": "h_B",
    "equalizer": {"type": "eqznet",
                  "train": {"architecture": "knet", "k": 2,
                            "optimizer": {"epochs": 2, "batch_size": 128, "seed": 3},
                            "dataset_bits": 3000}},
    "ebn0_db": [7],
    "stopping": {"min_bit_errors": 100, "max_bits": 20000},
    "seed": 44,
    "block_symbols": 300,
    "geometry": {"n1": 4, "n2": 4}
  })");
  const auto one = run_sweep(cfg, 1);
  const auto eight = run_sweep(cfg, 8);
  REQUIRE(one.size() == 1);
  CHECK(same_counts(one[0], eight[0]));
  CHECK(one[0].equalizer == "eqznet-k2");
}

TEST_CASE("calibration reports the probed windows") {
  const ExperimentConfig cfg = parse_config(R"({
    "channel": {"taps": [1.0]},
    "equalizer": {"type": "lmmse"},
    "ebn0_db": [4],
    "seed": 9,
    "calibration": {"ebn0_db": 4, "max_window": 5, "min_bits": 10000,
                    "min_errors": 50, "max_bits": 30000, "block_symbols": 500}
  })");
  const CalibrationOutput out = run_calibration(cfg);
  CHECK(out.result.window == 1);
  CHECK(out.n1 == 0);
  CHECK(out.n2 == 0);
  const std::string dir = temp_dir("eqz_cal_out");
  const std::string path = write_calibration_report(out, cfg, dir);
  const std::string text = slurp(path);
  CHECK(text.find("window,ber,chosen") == 0);
  CHECK(text.find("full,") != std::string::npos);
  CHECK(text.find(",1\n") != std::string::npos);  // some row is marked chosen
}

TEST_CASE("the LLR histogram bins cover [-40, 40] in half-unit steps") {
  ExperimentConfig cfg = parse_config(R"({
    "channel": "h_B",
    "equalizer": {"type": "lmmse"},
    "ebn0_db": [6],
    "seed": 13,
    "block_symbols": 500,
    "llr_hist": {"bits": 4000}
  })");
  const auto hists = run_llr_histogram(cfg);
  REQUIRE(hists.size() == 1);
  const LlrHistogram& h = hists[0];
  REQUIRE(h.bit0.size() == 160);
  REQUIRE(h.bit1.size() == 160);
  long total = 0;
  for (long c : h.bit0) total += c;
  for (long c : h.bit1) total += c;
  CHECK(total == h.samples0 + h.samples1);
  CHECK(total >= 4000);
  const std::string dir = temp_dir("eqz_hist_out");
  write_llr_csv(hists, dir + "/llr_hist.csv");
  const std::string text = slurp(dir + "/llr_hist.csv");
  CHECK(text.find("ebn0_db,true_bit,bin_low,bin_high,count") == 0);
  CHECK(text.find("6,0,-40,-39.5,") != std::string::npos);
}

TEST_CASE("manifests record the run identity") {
  const std::string dir = temp_dir("eqz_manifest_out");
  write_manifest(dir, "sweep", "{\"channel\": \"h_A\"}", 77, 4, {"ber.csv", "extra.csv"});
  const std::string text = slurp(dir + "/manifest.txt");
  CHECK(text.find("command: sweep") != std::string::npos);
  CHECK(text.find("config_digest: ") != std::string::npos);
  CHECK(text.find("seed: 77") != std::string::npos);
  CHECK(text.find("workers: 4") != std::string::npos);
  CHECK(text.find("output: ber.csv") != std::string::npos);
  CHECK(text.find("output: extra.csv") != std::string::npos);
  write_manifest(dir, "sweep", "{\"channel\": \"h_A\"}", 77, 4, {"ber.csv", "extra.csv"});
  CHECK(slurp(dir + "/manifest.txt") == text);
}

TEST_CASE("equalizer labels name the architecture and schedule") {
  ExperimentConfig cfg = tiny_lmmse_config();
  CHECK(equalizer_label(cfg) == "lmmse");
  cfg.equalizer.type = "bcjr";
  CHECK(equalizer_label(cfg) == "bcjr");
  cfg = parse_config(R"({
    "channel": "h_A",
    "equalizer": {"type": "eqznet", "train": {"architecture": "head", "k": 6, "l": 2}},
    "ebn0_db": [8]
  })");
  CHECK(equalizer_label(cfg) == "eqznet-head-6-2");
  cfg = parse_config(R"({
    "channel": "h_A",
    "mode": "turbo",
    "equalizer": {"type": "eqznet", "train": {"architecture": "knet", "k": 2}},
    "ebn0_db": [8],
    "turbo": {"first": "eqznet", "subsequent": "lmmse", "code": "c.alist"}
  })");
  CHECK(equalizer_label(cfg) == "eqznet-k2+lmmse");
}
