#include "eqz/config.hpp"

#include <fstream>
#include <initializer_list>
#include <stdexcept>

#include <json.hpp>

#include "eqz/txchain.hpp"

namespace eqz {

namespace {

using nlohmann::json;

[[noreturn]] void fail(const std::string& where, const std::string& what) {
  throw std::invalid_argument("config: " + where + ": " + what);
}

void check_keys(const json& obj, const std::string& where,
                std::initializer_list<const char*> allowed) {
  if (!obj.is_object()) fail(where, "expected an object");
  for (const auto& [key, value] : obj.items()) {
    (void)value;
    bool known = false;
    for (const char* a : allowed)
      if (key == a) {
        known = true;
        break;
      }
    if (!known) fail(where, "unknown key '" + key + "'");
  }
}

double get_number(const json& obj, const std::string& where, const char* key) {
  if (!obj.contains(key)) fail(where, std::string("missing key '") + key + "'");
  const json& v = obj.at(key);
  if (!v.is_number()) fail(where + "." + key, "expected a number");
  return v.get<double>();
}

double get_number_or(const json& obj, const std::string& where, const char* key, double fallback) {
  if (!obj.contains(key)) return fallback;
  const json& v = obj.at(key);
  if (!v.is_number()) fail(where + "." + key, "expected a number");
  return v.get<double>();
}

long get_integer_or(const json& obj, const std::string& where, const char* key, long fallback) {
  if (!obj.contains(key)) return fallback;
  const json& v = obj.at(key);
  if (!v.is_number_integer()) fail(where + "." + key, "expected an integer");
  return v.get<long>();
}

std::uint64_t get_u64_or(const json& obj, const std::string& where, const char* key,
                         std::uint64_t fallback) {
  if (!obj.contains(key)) return fallback;
  const json& v = obj.at(key);
  if (!v.is_number_unsigned() && !v.is_number_integer()) fail(where + "." + key, "expected an integer");
  if (v.is_number_integer() && v.get<long long>() < 0) fail(where + "." + key, "must be >= 0");
  return v.get<std::uint64_t>();
}

std::string get_string(const json& obj, const std::string& where, const char* key) {
  if (!obj.contains(key)) fail(where, std::string("missing key '") + key + "'");
  const json& v = obj.at(key);
  if (!v.is_string()) fail(where + "." + key, "expected a string");
  return v.get<std::string>();
}

std::string get_string_or(const json& obj, const std::string& where, const char* key,
                          const std::string& fallback) {
  if (!obj.contains(key)) return fallback;
  const json& v = obj.at(key);
  if (!v.is_string()) fail(where + "." + key, "expected a string");
  return v.get<std::string>();
}

bool get_bool_or(const json& obj, const std::string& where, const char* key, bool fallback) {
  if (!obj.contains(key)) return fallback;
  const json& v = obj.at(key);
  if (!v.is_boolean()) fail(where + "." + key, "expected true or false");
  return v.get<bool>();
}

TrainConfig parse_optimizer(const json& obj, const std::string& where) {
  check_keys(obj, where,
             {"learning_rate", "beta1", "beta2", "epsilon", "batch_size", "epochs", "seed"});
  TrainConfig t;
  t.learning_rate = get_number_or(obj, where, "learning_rate", t.learning_rate);
  t.beta1 = get_number_or(obj, where, "beta1", t.beta1);
  t.beta2 = get_number_or(obj, where, "beta2", t.beta2);
  t.epsilon = get_number_or(obj, where, "epsilon", t.epsilon);
  t.batch_size = static_cast<int>(get_integer_or(obj, where, "batch_size", t.batch_size));
  t.epochs = static_cast<int>(get_integer_or(obj, where, "epochs", t.epochs));
  t.seed = get_u64_or(obj, where, "seed", t.seed);
  if (t.learning_rate < 0.0) fail(where, "learning_rate must be >= 0");
  if (t.batch_size < 1) fail(where, "batch_size must be >= 1");
  if (t.epochs < 0) fail(where, "epochs must be >= 0");
  return t;
}

TrainSpec parse_train(const json& obj, const std::string& where) {
  check_keys(obj, where,
             {"architecture", "k", "l", "alpha", "w", "init", "optimizer", "dataset_bits"});
  TrainSpec t;
  t.architecture = get_string_or(obj, where, "architecture", t.architecture);
  if (t.architecture != "knet" && t.architecture != "sum" && t.architecture != "head")
    fail(where + ".architecture", "must be 'knet', 'sum', or 'head'");
  t.k = static_cast<int>(get_integer_or(obj, where, "k", t.k));
  t.l = static_cast<int>(get_integer_or(obj, where, "l", t.l));
  if (t.k < 2 || t.k % 2 != 0) fail(where + ".k", "must be even and >= 2");
  if (t.architecture != "knet" && (t.l < 2 || t.l % 2 != 0))
    fail(where + ".l", "must be even and >= 2");
  t.alpha = get_number_or(obj, where, "alpha", t.alpha);
  t.w = get_number_or(obj, where, "w", t.w);
  if (!(t.alpha > 1.0)) fail(where + ".alpha", "must be > 1");
  if (!(t.w > 0.0)) fail(where + ".w", "must be > 0");
  t.init = get_string_or(obj, where, "init", t.init);
  if (t.init != "lmmse" && t.init != "random") fail(where + ".init", "must be 'lmmse' or 'random'");
  if (obj.contains("optimizer")) t.optimizer = parse_optimizer(obj.at("optimizer"), where + ".optimizer");
  t.optimizer.alpha = t.alpha;
  t.optimizer.w_init = t.w;
  t.dataset_bits = get_integer_or(obj, where, "dataset_bits", t.dataset_bits);
  if (t.dataset_bits < 1) fail(where + ".dataset_bits", "must be >= 1");
  return t;
}

EqualizerSpec parse_equalizer(const json& obj, const std::string& where) {
  check_keys(obj, where, {"type", "checkpoint", "train"});
  EqualizerSpec e;
  e.type = get_string(obj, where, "type");
  if (e.type != "lmmse" && e.type != "bcjr" && e.type != "eqznet")
    fail(where + ".type", "must be 'lmmse', 'bcjr', or 'eqznet'");
  e.checkpoint = get_string_or(obj, where, "checkpoint", "");
  if (obj.contains("train")) e.train = parse_train(obj.at("train"), where + ".train");
  if (e.type == "eqznet") {
    if (e.checkpoint.empty() && !e.train)
      fail(where, "an eqznet equalizer needs either 'checkpoint' or 'train'");
    if (!e.checkpoint.empty() && e.train)
      fail(where, "'checkpoint' and 'train' are mutually exclusive");
  } else if (!e.checkpoint.empty() || e.train) {
    fail(where, "'checkpoint'/'train' only apply to the eqznet type");
  }
  return e;
}

}  // namespace

ExperimentConfig parse_config(const std::string& json_text) {
  json root;
  try {
    root = json::parse(json_text);
  } catch (const json::parse_error& e) {
    throw std::invalid_argument(std::string("config is not valid JSON: ") + e.what());
  }
  check_keys(root, "top level",
             {"channel", "modulation", "mode", "equalizer", "ebn0_db", "stopping", "seed",
              "block_symbols", "geometry", "calibration", "turbo", "gain_table", "llr_hist"});

  ExperimentConfig cfg;

  if (!root.contains("channel")) fail("top level", "missing key 'channel'");
  const json& ch = root.at("channel");
  if (ch.is_string()) {
    cfg.channel_label = ch.get<std::string>();
    cfg.channel_taps = ChannelModel::preset(cfg.channel_label, 0.0).taps;
  } else if (ch.is_object()) {
    check_keys(ch, "channel", {"taps"});
    if (!ch.contains("taps") || !ch.at("taps").is_array() || ch.at("taps").empty())
      fail("channel.taps", "expected a nonempty array of numbers");
    for (const json& t : ch.at("taps")) {
      if (!t.is_number()) fail("channel.taps", "expected a nonempty array of numbers");
      cfg.channel_taps.push_back(t.get<double>());
    }
    cfg.channel_label = "custom";
    ChannelModel(cfg.channel_taps, 0.0);  // validates the taps
  } else {
    fail("channel", "expected a preset name or {\"taps\": [...]}");
  }

  cfg.modulation = static_cast<int>(get_integer_or(root, "top level", "modulation", 2));
  PamConstellation::make(cfg.modulation);  // validates the order

  cfg.mode = get_string_or(root, "top level", "mode", "uncoded");
  if (cfg.mode != "uncoded" && cfg.mode != "turbo")
    fail("mode", "must be 'uncoded' or 'turbo'");

  if (!root.contains("equalizer")) fail("top level", "missing key 'equalizer'");
  cfg.equalizer = parse_equalizer(root.at("equalizer"), "equalizer");

  if (!root.contains("ebn0_db") || !root.at("ebn0_db").is_array() || root.at("ebn0_db").empty())
    fail("ebn0_db", "expected a nonempty array of numbers");
  for (const json& v : root.at("ebn0_db")) {
    if (!v.is_number()) fail("ebn0_db", "expected a nonempty array of numbers");
    cfg.ebn0_db.push_back(v.get<double>());
  }

  if (root.contains("stopping")) {
    const json& st = root.at("stopping");
    check_keys(st, "stopping", {"min_bit_errors", "max_bits"});
    cfg.stopping.min_bit_errors =
        get_integer_or(st, "stopping", "min_bit_errors", cfg.stopping.min_bit_errors);
    cfg.stopping.max_bits = get_integer_or(st, "stopping", "max_bits", cfg.stopping.max_bits);
  }
  if (cfg.stopping.min_bit_errors < 100) fail("stopping.min_bit_errors", "must be >= 100");
  if (cfg.stopping.max_bits < 1) fail("stopping.max_bits", "must be >= 1");

  cfg.seed = get_u64_or(root, "top level", "seed", cfg.seed);
  cfg.block_symbols = static_cast<int>(get_integer_or(root, "top level", "block_symbols", cfg.block_symbols));
  if (cfg.block_symbols < 1) fail("block_symbols", "must be >= 1");

  if (root.contains("geometry")) {
    const json& g = root.at("geometry");
    if (g.is_string()) {
      if (g.get<std::string>() != "auto") fail("geometry", "expected 'auto' or {\"n1\":..., \"n2\":...}");
      cfg.geometry.auto_calibrate = true;
    } else {
      check_keys(g, "geometry", {"n1", "n2"});
      cfg.geometry.n1 = static_cast<int>(get_number(g, "geometry", "n1"));
      cfg.geometry.n2 = static_cast<int>(get_number(g, "geometry", "n2"));
      if (cfg.geometry.n1 < 0 || cfg.geometry.n2 < 0) fail("geometry", "n1 and n2 must be >= 0");
    }
  }

  if (root.contains("calibration")) {
    const json& c = root.at("calibration");
    check_keys(c, "calibration",
               {"ebn0_db", "target_ber_ratio", "max_window", "min_bits", "min_errors", "max_bits",
                "block_symbols"});
    cfg.calibration.ebn0_db = get_number_or(c, "calibration", "ebn0_db", cfg.calibration.ebn0_db);
    cfg.calibration.target_ber_ratio =
        get_number_or(c, "calibration", "target_ber_ratio", cfg.calibration.target_ber_ratio);
    cfg.calibration.max_window =
        static_cast<int>(get_integer_or(c, "calibration", "max_window", cfg.calibration.max_window));
    cfg.calibration.min_bits = get_integer_or(c, "calibration", "min_bits", cfg.calibration.min_bits);
    cfg.calibration.min_errors =
        static_cast<int>(get_integer_or(c, "calibration", "min_errors", cfg.calibration.min_errors));
    cfg.calibration.max_bits = get_integer_or(c, "calibration", "max_bits", cfg.calibration.max_bits);
    cfg.calibration.block_symbols = static_cast<int>(
        get_integer_or(c, "calibration", "block_symbols", cfg.calibration.block_symbols));
    if (!(cfg.calibration.target_ber_ratio >= 1.0)) fail("calibration.target_ber_ratio", "must be >= 1");
  }

  if (root.contains("turbo")) {
    const json& t = root.at("turbo");
    check_keys(t, "turbo",
               {"iterations", "first", "subsequent", "decoder_iterations", "interleaver", "code"});
    TurboSpec ts;
    ts.iterations = static_cast<int>(get_integer_or(t, "turbo", "iterations", ts.iterations));
    if (ts.iterations < 1) fail("turbo.iterations", "must be >= 1");
    ts.first = get_string_or(t, "turbo", "first", ts.first);
    ts.subsequent = get_string_or(t, "turbo", "subsequent", ts.subsequent);
    if (ts.first != "eqznet" && ts.first != "lmmse" && ts.first != "bcjr")
      fail("turbo.first", "must be 'eqznet', 'lmmse', or 'bcjr'");
    if (ts.subsequent != "lmmse" && ts.subsequent != "bcjr")
      fail("turbo.subsequent", "must be 'lmmse' or 'bcjr'");
    ts.decoder_iterations =
        static_cast<int>(get_integer_or(t, "turbo", "decoder_iterations", ts.decoder_iterations));
    if (ts.decoder_iterations < 1) fail("turbo.decoder_iterations", "must be >= 1");
    ts.interleaver = get_bool_or(t, "turbo", "interleaver", ts.interleaver);
    ts.code_path = get_string(t, "turbo", "code");
    cfg.turbo = ts;
  }
  if (cfg.mode == "turbo" && !cfg.turbo) fail("turbo", "turbo mode needs a 'turbo' section");

  if (root.contains("gain_table")) {
    const json& g = root.at("gain_table");
    check_keys(g, "gain_table", {"target_ber", "equalizers"});
    cfg.gain_table.target_ber = get_number_or(g, "gain_table", "target_ber", cfg.gain_table.target_ber);
    if (!(cfg.gain_table.target_ber > 0.0 && cfg.gain_table.target_ber < 1.0))
      fail("gain_table.target_ber", "must be in (0, 1)");
    if (g.contains("equalizers")) {
      if (!g.at("equalizers").is_array()) fail("gain_table.equalizers", "expected an array");
      int at = 0;
      for (const json& e : g.at("equalizers"))
        cfg.gain_table.equalizers.push_back(
            parse_equalizer(e, "gain_table.equalizers[" + std::to_string(at++) + "]"));
    }
  }

  if (root.contains("llr_hist")) {
    const json& h = root.at("llr_hist");
    check_keys(h, "llr_hist", {"bits"});
    cfg.llr_hist.bits = get_integer_or(h, "llr_hist", "bits", cfg.llr_hist.bits);
    if (cfg.llr_hist.bits < 1) fail("llr_hist.bits", "must be >= 1");
  }

  return cfg;
}

ExperimentConfig load_config_file(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw std::runtime_error("cannot open config file: " + path);
  std::string text((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());
  return parse_config(text);
}

}  // namespace eqz
