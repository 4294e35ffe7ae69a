#include "eqz/harness.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <functional>
#include <future>
#include <sstream>
#include <stdexcept>

#include "eqz/ldpc.hpp"
#include "eqz/llr.hpp"
#include "eqz/rng.hpp"
#include "eqz/turbo.hpp"

namespace eqz {

namespace {

std::string format_db(double x) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%g", x);
  return buf;
}

std::uint64_t fnv1a64(const std::string& text) {
  std::uint64_t h = 1469598103934665603ULL;
  for (unsigned char c : text) {
    h ^= c;
    h *= 1099511628211ULL;
  }
  return h;
}

std::string hex64(std::uint64_t v) {
  char buf[17];
  std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(v));
  return buf;
}

// Everything a sweep needs that does not depend on the Eb/N0 point.
struct Operating {
  ChannelModel channel;  // noise_variance left at zero; set per point
  PamConstellation cons;
  int n1 = 0;
  int n2 = 0;
  std::optional<LdpcCode> code;
  double code_rate = 1.0;
  std::vector<int> interleave;  // transmitted position -> code bit (turbo only)
};

Operating resolve_operating(const ExperimentConfig& cfg) {
  Operating op;
  op.channel = ChannelModel(cfg.channel_taps, 0.0);
  op.cons = PamConstellation::make(cfg.modulation);
  if (cfg.geometry.auto_calibrate) {
    const CalibrationOutput cal = run_calibration(cfg);
    op.n1 = cal.n1;
    op.n2 = cal.n2;
  } else {
    op.n1 = cfg.geometry.n1;
    op.n2 = cfg.geometry.n2;
  }
  if (cfg.mode == "turbo") {
    if (!cfg.turbo) throw std::invalid_argument("turbo mode needs a turbo section");
    op.code = load_alist_file(cfg.turbo->code_path);
    op.code_rate = op.code->rate();
    if (op.code->n % op.cons.bits_per_symbol != 0)
      throw std::invalid_argument("code length is not a whole number of symbols");
    if (cfg.turbo->interleaver)
      op.interleave = make_interleaver(op.code->n, derive_seed(cfg.seed, 0x17EA));
  }
  return op;
}

std::string arch_tag(const EqzNetParams& p) {
  switch (p.arch) {
    case EqzArch::KNet: return "eqznet-k" + std::to_string(p.block_a.width());
    case EqzArch::Sum:
      return "eqznet-sum-" + std::to_string(p.block_a.width()) + "-" +
             std::to_string(p.block_b.width());
    case EqzArch::Head:
      return "eqznet-head-" + std::to_string(p.block_a.width()) + "-" +
             std::to_string(p.block_b.width());
  }
  throw std::logic_error("unreachable");
}

std::string spec_tag(const TrainSpec& spec) {
  if (spec.architecture == "knet") return "eqznet-k" + std::to_string(spec.k);
  return "eqznet-" + spec.architecture + "-" + std::to_string(spec.k) + "-" +
         std::to_string(spec.l);
}

// Staged training of one network for one bit position of the center symbol.
// Returns the trained parameters and the final-stage loss trace.
std::pair<EqzNetParams, std::vector<double>> train_single(
    const TrainSpec& spec, const std::vector<LabeledFrame>& dataset, const LmmseFilter& filter,
    int n1, int n2, int bit_index, std::uint64_t seed_base) {
  const bool lmmse_init = spec.init == "lmmse";
  auto block_init = [&](int width, std::uint64_t salt) {
    return lmmse_init ? init_k_eqznet(filter, width, spec.alpha, spec.w)
                      : random_k_eqznet(n1, n2, width, derive_seed(seed_base, salt));
  };

  TrainConfig opt = spec.optimizer;
  if (spec.architecture == "knet") {
    opt.seed = derive_seed(seed_base, 1);
    TrainResult r = train(block_init(spec.k, 11), dataset, opt, bit_index);
    return {std::move(r.params), std::move(r.epoch_losses)};
  }

  TrainConfig opt_k = spec.optimizer;
  opt_k.seed = derive_seed(seed_base, 1);
  const EqzNetParams k_net = train(block_init(spec.k, 11), dataset, opt_k, bit_index).params;

  TrainConfig opt_l = spec.optimizer;
  opt_l.seed = derive_seed(seed_base, 2);
  const EqzNetParams l_net = train(block_init(spec.l, 12), dataset, opt_l, bit_index).params;

  EqzNetParams composed = spec.architecture == "sum"
                              ? compose_sum(k_net, l_net)
                              : compose_head(k_net, l_net, derive_seed(seed_base, 3));
  TrainConfig opt_f = spec.optimizer;
  opt_f.seed = derive_seed(seed_base, 4);
  TrainResult r = train(composed, dataset, opt_f, bit_index);
  return {std::move(r.params), std::move(r.epoch_losses)};
}

TrainedEqualizer train_with_operating(const Operating& op, const ExperimentConfig& cfg,
                                      const TrainSpec& spec, double ebn0_db, double code_rate) {
  ChannelModel channel = op.channel;
  channel.noise_variance = ebn0_to_noise_variance(ebn0_db, op.cons, code_rate);
  const LmmseFilter filter = design_filter(channel, op.n1, op.n2);
  const std::uint64_t seed_root = derive_seed(cfg.seed, spec.optimizer.seed);
  const std::vector<LabeledFrame> dataset =
      build_dataset(channel, op.cons, spec.dataset_bits, op.n1, op.n2, derive_seed(seed_root, 500));

  TrainedEqualizer out;
  for (int m = 0; m < op.cons.bits_per_symbol; ++m) {
    auto [params, trace] =
        train_single(spec, dataset, filter, op.n1, op.n2, m, derive_seed(seed_root, 1000 + m));
    out.bank.nets.push_back(std::move(params));
    out.traces.push_back(std::move(trace));
  }
  return out;
}

// The equalizer as realized for one sweep point.
struct PointEqualizer {
  std::string type;  // "lmmse" | "bcjr" | "eqznet"
  TrellisSpec trellis;
  EqzNetBank bank;
  std::string label;
  int n1 = 0;
  int n2 = 0;
};

PointEqualizer realize_equalizer(const Operating& op, const ExperimentConfig& cfg,
                                 const EqualizerSpec& spec, double ebn0_db) {
  PointEqualizer eq;
  eq.type = spec.type;
  eq.label = spec.type;
  eq.n1 = op.n1;
  eq.n2 = op.n2;
  if (spec.type == "bcjr") {
    eq.trellis = build_trellis(op.channel, op.cons);
  } else if (spec.type == "eqznet") {
    if (!spec.checkpoint.empty()) {
      const Checkpoint ckpt = load_checkpoint(spec.checkpoint);
      eq.bank = ckpt.bank;
    } else {
      eq.bank = train_with_operating(op, cfg, *spec.train, ebn0_db, op.code_rate).bank;
    }
    if (static_cast<int>(eq.bank.nets.size()) != op.cons.bits_per_symbol)
      throw std::invalid_argument("bank width does not match the modulation");
    eq.n1 = eq.bank.nets.front().n1;  // frames must match the trained geometry
    eq.n2 = eq.bank.nets.front().n2;
    eq.label = arch_tag(eq.bank.nets.front());
  }
  return eq;
}

// Per-bit LLRs over a whole uncoded block.
std::vector<double> equalize_block(const Operating& op, const PointEqualizer& eq,
                                   const std::vector<double>& z, double sigma2) {
  const int q_sym = static_cast<int>(z.size());
  const int q = op.cons.bits_per_symbol;
  if (eq.type == "bcjr") return map_equalize(z, eq.trellis, sigma2).bit_llrs.values;
  if (eq.type == "lmmse") {
    ChannelModel ch = op.channel;
    ch.noise_variance = sigma2;
    const std::vector<double> zero_priors(static_cast<std::size_t>(q_sym) * q, 0.0);
    return lmmse_with_priors(z, ch, op.cons, zero_priors, eq.n1, eq.n2);
  }
  std::vector<double> llrs(static_cast<std::size_t>(q_sym) * q);
  for (int n = 0; n < q_sym; ++n) {
    const ObservationFrame frame = extract_frame(z, n, eq.n1, eq.n2);
    const std::vector<double> out = bank_forward(eq.bank, frame);
    for (int m = 0; m < q; ++m) llrs[static_cast<std::size_t>(n) * q + m] = out[m];
  }
  return llrs;
}

struct BlockOutcome {
  long bits = 0;
  long errors = 0;
};

BlockOutcome simulate_uncoded_block(const Operating& op, const PointEqualizer& eq, double sigma2,
                                    int block_symbols, std::uint64_t block_seed) {
  const int q = op.cons.bits_per_symbol;
  const std::vector<std::uint8_t> bits =
      random_bits(static_cast<long>(block_symbols) * q, derive_seed(block_seed, 1));
  const SymbolBlock block = gray_map(bits, op.cons);
  ChannelModel ch = op.channel;
  ch.noise_variance = sigma2;
  const std::vector<double> z = apply_channel(block, ch, derive_seed(block_seed, 2));
  const std::vector<double> llrs = equalize_block(op, eq, z, sigma2);

  BlockOutcome out;
  out.bits = static_cast<long>(bits.size());
  for (std::size_t i = 0; i < bits.size(); ++i) {
    const std::uint8_t decided = llrs[i] < 0.0 ? 1 : 0;
    if (decided != bits[i]) ++out.errors;
  }
  return out;
}

BlockOutcome simulate_turbo_block(const Operating& op, const PointEqualizer& eq,
                                  const ExperimentConfig& cfg, double sigma2,
                                  std::uint64_t block_seed) {
  const LdpcCode& code = *op.code;
  const std::vector<std::uint8_t> message = random_bits(code.k, derive_seed(block_seed, 1));
  const std::vector<std::uint8_t> codeword = encode(code, message);
  std::vector<std::uint8_t> transmitted = codeword;
  if (!op.interleave.empty()) {
    for (int i = 0; i < code.n; ++i) transmitted[i] = codeword[op.interleave[i]];
  }
  const SymbolBlock block = gray_map(transmitted, op.cons);
  ChannelModel ch = op.channel;
  ch.noise_variance = sigma2;
  const std::vector<double> z = apply_channel(block, ch, derive_seed(block_seed, 2));

  TurboConfig tc;
  tc.iterations = cfg.turbo->iterations;
  tc.decoder_iterations = cfg.turbo->decoder_iterations;
  tc.n1 = eq.n1;
  tc.n2 = eq.n2;
  auto to_eq = [](const std::string& s) {
    if (s == "eqznet") return TurboEq::EqzNet;
    if (s == "bcjr") return TurboEq::Bcjr;
    return TurboEq::Lmmse;
  };
  tc.first = to_eq(cfg.turbo->first);
  tc.subsequent = to_eq(cfg.turbo->subsequent);
  if (cfg.turbo->interleaver) tc.interleaver_seed = derive_seed(cfg.seed, 0x17EA);

  const TurboResult res = turbo_equalize(z, code, ch, op.cons,
                                         eq.bank.nets.empty() ? nullptr : &eq.bank, tc);
  BlockOutcome out;
  out.bits = code.k;
  for (int j = 0; j < code.k; ++j)
    if (res.decoded_bits[j] != message[j]) ++out.errors;
  return out;
}

struct PointStats {
  long bits = 0;
  long errors = 0;
  long blocks = 0;
  std::uint64_t digest = 0;
};

// Waves of `workers` blocks; reduction strictly in block order with the
// stopping rule checked after every block, so results cannot depend on the
// worker count.  Blocks computed past the stopping point are discarded.
PointStats run_point(const std::function<BlockOutcome(std::uint64_t)>& simulate,
                     const StoppingRule& stop, std::uint64_t point_seed, int workers) {
  if (workers < 1) throw std::invalid_argument("workers must be >= 1");
  PointStats st;
  long next_block = 0;
  bool done = false;
  while (!done) {
    std::vector<std::uint64_t> seeds(workers);
    std::vector<std::future<BlockOutcome>> futures;
    futures.reserve(workers);
    for (int i = 0; i < workers; ++i) {
      seeds[i] = derive_seed(point_seed, next_block + i);
      futures.push_back(std::async(std::launch::async, simulate, seeds[i]));
    }
    for (int i = 0; i < workers; ++i) {
      const BlockOutcome out = futures[i].get();
      if (done) continue;
      st.bits += out.bits;
      st.errors += out.errors;
      st.blocks += 1;
      st.digest ^= splitmix64(seeds[i]);
      if (st.errors >= stop.min_bit_errors || st.bits >= stop.max_bits) done = true;
    }
    next_block += workers;
  }
  return st;
}

}  // namespace

std::string ber_csv_header() {
  return "ebn0_db,bits,errors,ber,equalizer,channel,M,mode,seed_digest,wall_ms";
}

std::string ber_csv_row(const BerRecord& r) {
  char buf[64];
  std::ostringstream out;
  out << format_db(r.ebn0_db) << ',' << r.bits << ',' << r.errors << ',';
  std::snprintf(buf, sizeof buf, "%.9e", r.ber);
  out << buf << ',' << r.equalizer << ',' << r.channel << ',' << r.modulation << ',' << r.mode
      << ',' << r.seed_digest << ',' << r.wall_ms;
  return out.str();
}

void write_ber_csv(const std::vector<BerRecord>& records, const std::string& path) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw std::runtime_error("cannot open output file: " + path);
  out << ber_csv_header() << '\n';
  for (const auto& r : records) out << ber_csv_row(r) << '\n';
}

std::string equalizer_label(const ExperimentConfig& cfg) {
  std::string base = cfg.equalizer.type;
  if (cfg.equalizer.type == "eqznet") {
    if (cfg.equalizer.train) {
      base = spec_tag(*cfg.equalizer.train);
    } else {
      base = arch_tag(load_checkpoint(cfg.equalizer.checkpoint).bank.nets.front());
    }
  }
  if (cfg.mode == "turbo" && cfg.turbo) base += "+" + cfg.turbo->subsequent;
  return base;
}

std::vector<BerRecord> run_sweep(const ExperimentConfig& cfg, int workers) {
  const Operating op = resolve_operating(cfg);
  std::vector<BerRecord> records;
  for (std::size_t point = 0; point < cfg.ebn0_db.size(); ++point) {
    const double ebn0 = cfg.ebn0_db[point];
    const auto t0 = std::chrono::steady_clock::now();
    const double sigma2 = ebn0_to_noise_variance(ebn0, op.cons, op.code_rate);
    const PointEqualizer eq = realize_equalizer(op, cfg, cfg.equalizer, ebn0);
    const std::uint64_t point_seed = derive_seed(cfg.seed, static_cast<std::uint64_t>(point));

    std::function<BlockOutcome(std::uint64_t)> simulate;
    if (cfg.mode == "turbo") {
      simulate = [&](std::uint64_t bseed) { return simulate_turbo_block(op, eq, cfg, sigma2, bseed); };
    } else {
      simulate = [&](std::uint64_t bseed) {
        return simulate_uncoded_block(op, eq, sigma2, cfg.block_symbols, bseed);
      };
    }
    const PointStats st = run_point(simulate, cfg.stopping, point_seed, workers);

    BerRecord rec;
    rec.ebn0_db = ebn0;
    rec.bits = st.bits;
    rec.errors = st.errors;
    rec.ber = st.bits > 0 ? static_cast<double>(st.errors) / static_cast<double>(st.bits) : 0.0;
    rec.equalizer = eq.label;
    if (cfg.mode == "turbo" && cfg.turbo) rec.equalizer += "+" + cfg.turbo->subsequent;
    rec.channel = cfg.channel_label;
    rec.modulation = cfg.modulation;
    rec.mode = cfg.mode;
    rec.seed_digest = hex64(st.digest);
    rec.wall_ms = std::chrono::duration_cast<std::chrono::milliseconds>(
                      std::chrono::steady_clock::now() - t0)
                      .count();
    rec.max_bits_reached = st.errors < cfg.stopping.min_bit_errors;
    records.push_back(std::move(rec));
  }
  return records;
}

TrainedEqualizer train_equalizer(const ExperimentConfig& cfg, const TrainSpec& spec,
                                 double ebn0_db, double code_rate) {
  const Operating op = resolve_operating(cfg);
  return train_with_operating(op, cfg, spec, ebn0_db, code_rate);
}

TrainingOutput run_training(const ExperimentConfig& cfg, const std::string& out_dir) {
  if (cfg.equalizer.type != "eqznet" || !cfg.equalizer.train)
    throw std::invalid_argument("training needs an eqznet equalizer with a train spec");
  const TrainSpec& spec = *cfg.equalizer.train;
  const Operating op = resolve_operating(cfg);
  std::filesystem::create_directories(out_dir);

  TrainingOutput out;
  for (double ebn0 : cfg.ebn0_db) {
    const TrainedEqualizer trained = train_with_operating(op, cfg, spec, ebn0, op.code_rate);
    Checkpoint ckpt;
    ckpt.meta.channel_label = cfg.channel_label;
    ckpt.meta.channel_taps = cfg.channel_taps;
    ckpt.meta.modulation_order = cfg.modulation;
    ckpt.meta.ebn0_db = ebn0;
    ckpt.meta.code_rate = op.code_rate;
    ckpt.meta.seed = cfg.seed;
    ckpt.meta.init = spec.init;
    ckpt.meta.train = spec.optimizer;
    ckpt.bank = trained.bank;

    const std::string stem = spec_tag(spec) + "_" + cfg.channel_label + "_" + format_db(ebn0) + "dB";
    const std::string ckpt_path = out_dir + "/checkpoint_" + stem + ".json";
    save_checkpoint(ckpt, ckpt_path);
    out.checkpoints.push_back(ckpt_path);

    const std::string trace_path = out_dir + "/trace_" + stem + ".csv";
    std::ofstream trace(trace_path, std::ios::binary);
    if (!trace) throw std::runtime_error("cannot open output file: " + trace_path);
    trace << "epoch,bit,loss\n";
    for (std::size_t m = 0; m < trained.traces.size(); ++m)
      for (std::size_t e = 0; e < trained.traces[m].size(); ++e)
        trace << e << ',' << m << ',' << trained.traces[m][e] << '\n';
    out.traces.push_back(trace_path);
  }
  return out;
}

CalibrationOutput run_calibration(const ExperimentConfig& cfg) {
  const ChannelModel channel(cfg.channel_taps, 0.0);
  const PamConstellation cons = PamConstellation::make(cfg.modulation);
  CalibrationOptions opts;
  opts.min_bits = cfg.calibration.min_bits;
  opts.min_errors = cfg.calibration.min_errors;
  opts.max_bits = cfg.calibration.max_bits;
  opts.max_window = cfg.calibration.max_window;
  opts.block_symbols = cfg.calibration.block_symbols;
  opts.seed = cfg.seed;
  CalibrationOutput out;
  out.result = calibrate_window(channel, cons, cfg.calibration.ebn0_db,
                                cfg.calibration.target_ber_ratio, opts);
  out.n1 = (out.result.window - 1) / 2;
  out.n2 = out.n1;
  return out;
}

std::string write_calibration_report(const CalibrationOutput& out, const ExperimentConfig& cfg,
                                     const std::string& out_dir) {
  std::filesystem::create_directories(out_dir);
  const std::string path = out_dir + "/calibration_" + cfg.channel_label + "_M" +
                           std::to_string(cfg.modulation) + ".csv";
  std::ofstream f(path, std::ios::binary);
  if (!f) throw std::runtime_error("cannot open output file: " + path);
  f << "window,ber,chosen\n";
  char buf[64];
  std::snprintf(buf, sizeof buf, "%.9e", out.result.reference_ber);
  f << "full," << buf << ",0\n";
  for (const auto& [w, ber] : out.result.ber_by_window) {
    std::snprintf(buf, sizeof buf, "%.9e", ber);
    f << w << ',' << buf << ',' << (w == out.result.window ? 1 : 0) << '\n';
  }
  return path;
}

std::optional<double> ebn0_at_ber(const std::vector<BerRecord>& curve, double target_ber) {
  if (!(target_ber > 0.0)) throw std::invalid_argument("target BER must be positive");
  std::vector<std::pair<double, double>> pts;
  for (const auto& r : curve) pts.push_back({r.ebn0_db, r.ber});
  std::sort(pts.begin(), pts.end());
  for (const auto& [x, b] : pts)
    if (b == target_ber) return x;
  for (std::size_t i = 0; i + 1 < pts.size(); ++i) {
    const auto [x0, b0] = pts[i];
    const auto [x1, b1] = pts[i + 1];
    if (b0 <= 0.0 || b1 <= 0.0) continue;
    if ((b0 > target_ber) != (b1 > target_ber)) {
      const double t = (std::log(target_ber) - std::log(b0)) / (std::log(b1) - std::log(b0));
      return x0 + t * (x1 - x0);
    }
  }
  return std::nullopt;
}

std::vector<GainRow> compute_gain_table(const GainCurve& lmmse_baseline,
                                        const std::vector<GainCurve>& curves, double target_ber) {
  const std::optional<double> base = ebn0_at_ber(lmmse_baseline.records, target_ber);
  std::vector<GainRow> rows;

  GainRow self;
  self.equalizer = lmmse_baseline.label;
  self.in_range = base.has_value();
  if (base) {
    self.ebn0_at_target = *base;
    self.gain_db = *base - *base;
    self.complexity_factor = 1.0;
  }
  rows.push_back(self);

  for (const auto& curve : curves) {
    GainRow row;
    row.equalizer = curve.label;
    const std::optional<double> x = ebn0_at_ber(curve.records, target_ber);
    row.in_range = base.has_value() && x.has_value();
    if (row.in_range) {
      row.ebn0_at_target = *x;
      row.gain_db = *base - *x;
      if (curve.op_count && lmmse_baseline.op_count)
        row.complexity_factor = *curve.op_count / *lmmse_baseline.op_count;
    }
    rows.push_back(row);
  }
  return rows;
}

namespace {

double spec_op_count(const TrainSpec& spec, int n1, int n2) {
  // Realized through the same counting routine the networks use.
  const EqzNetParams k = random_k_eqznet(n1, n2, spec.k, 0);
  if (spec.architecture == "knet") return static_cast<double>(operation_count(k));
  const EqzNetParams l = random_k_eqznet(n1, n2, spec.l, 0);
  if (spec.architecture == "sum") return static_cast<double>(operation_count(compose_sum(k, l)));
  return static_cast<double>(operation_count(compose_head(k, l, 0)));
}

}  // namespace

std::vector<GainRow> run_gain_table(const ExperimentConfig& cfg, int workers,
                                    std::vector<GainCurve>* curves_out) {
  const Operating op = resolve_operating(cfg);
  const double lmmse_ops = op.n1 + op.n2 + 1;

  ExperimentConfig base_cfg = cfg;
  base_cfg.equalizer = EqualizerSpec{};  // plain lmmse
  GainCurve baseline{"lmmse", run_sweep(base_cfg, workers), lmmse_ops};

  std::vector<GainCurve> curves;
  for (const auto& espec : cfg.gain_table.equalizers) {
    ExperimentConfig c = cfg;
    c.equalizer = espec;
    GainCurve curve;
    curve.records = run_sweep(c, workers);
    curve.label = curve.records.empty() ? espec.type : curve.records.front().equalizer;
    if (espec.type == "eqznet") {
      if (espec.train) {
        curve.op_count = spec_op_count(*espec.train, op.n1, op.n2);
      } else {
        curve.op_count =
            static_cast<double>(operation_count(load_checkpoint(espec.checkpoint).bank.nets.front()));
      }
    } else if (espec.type == "lmmse") {
      curve.op_count = lmmse_ops;
    }
    curves.push_back(std::move(curve));
  }

  const std::vector<GainRow> rows = compute_gain_table(baseline, curves, cfg.gain_table.target_ber);
  if (curves_out) {
    curves_out->clear();
    curves_out->push_back(std::move(baseline));
    for (auto& c : curves) curves_out->push_back(std::move(c));
  }
  return rows;
}

void write_gain_csv(const std::vector<GainRow>& rows, const std::string& path) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw std::runtime_error("cannot open output file: " + path);
  out << "equalizer,ebn0_at_target_db,gain_db,complexity_factor,in_range\n";
  for (const auto& r : rows) {
    out << r.equalizer << ',';
    if (r.in_range) {
      char buf[64];
      std::snprintf(buf, sizeof buf, "%.6f", r.ebn0_at_target);
      out << buf << ',';
      std::snprintf(buf, sizeof buf, "%.6f", r.gain_db);
      out << buf << ',';
      if (r.complexity_factor) {
        std::snprintf(buf, sizeof buf, "%.4f", *r.complexity_factor);
        out << buf;
      }
      out << ",1\n";
    } else {
      out << ",,,0\n";
    }
  }
}

std::vector<LlrHistogram> run_llr_histogram(const ExperimentConfig& cfg) {
  const Operating op = resolve_operating(cfg);
  if (cfg.mode != "uncoded")
    throw std::invalid_argument("LLR histograms are collected on uncoded runs");
  std::vector<LlrHistogram> out;
  for (std::size_t point = 0; point < cfg.ebn0_db.size(); ++point) {
    const double ebn0 = cfg.ebn0_db[point];
    const double sigma2 = ebn0_to_noise_variance(ebn0, op.cons, op.code_rate);
    const PointEqualizer eq = realize_equalizer(op, cfg, cfg.equalizer, ebn0);
    const std::uint64_t point_seed = derive_seed(cfg.seed, static_cast<std::uint64_t>(point));

    LlrHistogram hist;
    hist.ebn0_db = ebn0;
    hist.bit0.assign(160, 0);
    hist.bit1.assign(160, 0);
    long seen = 0;
    long block_index = 0;
    const int q = op.cons.bits_per_symbol;
    while (seen < cfg.llr_hist.bits) {
      const std::uint64_t bseed = derive_seed(point_seed, block_index++);
      const std::vector<std::uint8_t> bits =
          random_bits(static_cast<long>(cfg.block_symbols) * q, derive_seed(bseed, 1));
      const SymbolBlock block = gray_map(bits, op.cons);
      ChannelModel ch = op.channel;
      ch.noise_variance = sigma2;
      const std::vector<double> z = apply_channel(block, ch, derive_seed(bseed, 2));
      const std::vector<double> llrs = equalize_block(op, eq, z, sigma2);
      for (std::size_t i = 0; i < bits.size(); ++i) {
        const int bin = std::clamp(static_cast<int>(std::floor((llrs[i] + 40.0) * 2.0)), 0, 159);
        if (bits[i]) {
          ++hist.bit1[bin];
          ++hist.samples1;
        } else {
          ++hist.bit0[bin];
          ++hist.samples0;
        }
      }
      seen += static_cast<long>(bits.size());
    }
    out.push_back(std::move(hist));
  }
  return out;
}

void write_llr_csv(const std::vector<LlrHistogram>& histograms, const std::string& path) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw std::runtime_error("cannot open output file: " + path);
  out << "ebn0_db,true_bit,bin_low,bin_high,count\n";
  for (const auto& h : histograms) {
    for (int series = 0; series < 2; ++series) {
      const auto& counts = series == 0 ? h.bit0 : h.bit1;
      for (int b = 0; b < 160; ++b) {
        const double lo = -40.0 + 0.5 * b;
        out << format_db(h.ebn0_db) << ',' << series << ',' << lo << ',' << lo + 0.5 << ','
            << counts[b] << '\n';
      }
    }
  }
}

void write_manifest(const std::string& out_dir, const std::string& command,
                    const std::string& config_text, std::uint64_t seed, int workers,
                    const std::vector<std::string>& outputs) {
  std::filesystem::create_directories(out_dir);
  std::ofstream out(out_dir + "/manifest.txt", std::ios::binary);
  if (!out) throw std::runtime_error("cannot open manifest in " + out_dir);
  out << "tool: eqzsim 1.0\n";
  out << "command: " << command << '\n';
  out << "config_digest: " << hex64(fnv1a64(config_text)) << '\n';
  out << "seed: " << seed << '\n';
  out << "workers: " << workers << '\n';
  for (const auto& o : outputs) out << "output: " << o << '\n';
}

}  // namespace eqz
