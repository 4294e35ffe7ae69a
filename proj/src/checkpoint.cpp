#include "eqz/checkpoint.hpp"

#include <cmath>
#include <fstream>
#include <stdexcept>

#include <json.hpp>

namespace eqz {

namespace {

using nlohmann::json;

void require_finite(double x) {
  if (!std::isfinite(x)) throw std::invalid_argument("checkpoint contains a non-finite value");
}

json matrix_to_json(const Eigen::MatrixXd& m) {
  json j;
  j["rows"] = m.rows();
  j["cols"] = m.cols();
  std::vector<double> data;
  data.reserve(m.size());
  for (int r = 0; r < m.rows(); ++r)
    for (int c = 0; c < m.cols(); ++c) {
      require_finite(m(r, c));
      data.push_back(m(r, c));
    }
  j["data"] = data;
  return j;
}

Eigen::MatrixXd matrix_from_json(const json& j) {
  const long rows = j.at("rows").get<long>();
  const long cols = j.at("cols").get<long>();
  const auto data = j.at("data").get<std::vector<double>>();
  if (rows < 0 || cols < 0 || static_cast<long>(data.size()) != rows * cols)
    throw std::invalid_argument("matrix dimensions do not match the data length");
  Eigen::MatrixXd m(rows, cols);
  long at = 0;
  for (long r = 0; r < rows; ++r)
    for (long c = 0; c < cols; ++c) m(r, c) = data[at++];
  return m;
}

json vector_to_json(const Eigen::VectorXd& v) {
  std::vector<double> data(v.size());
  for (int i = 0; i < v.size(); ++i) {
    require_finite(v(i));
    data[i] = v(i);
  }
  return json(data);
}

Eigen::VectorXd vector_from_json(const json& j) {
  const auto data = j.get<std::vector<double>>();
  Eigen::VectorXd v(static_cast<long>(data.size()));
  for (std::size_t i = 0; i < data.size(); ++i) v(static_cast<long>(i)) = data[i];
  return v;
}

json block_to_json(const EqzBlock& b) {
  json j;
  j["w1"] = matrix_to_json(b.w1);
  j["b1"] = vector_to_json(b.b1);
  j["w2"] = vector_to_json(b.w2);
  return j;
}

EqzBlock block_from_json(const json& j) {
  EqzBlock b;
  b.w1 = matrix_from_json(j.at("w1"));
  b.b1 = vector_from_json(j.at("b1"));
  b.w2 = vector_from_json(j.at("w2"));
  if (b.w1.rows() != b.b1.size() || b.w1.rows() != b.w2.size())
    throw std::invalid_argument("block layer sizes disagree");
  return b;
}

std::string arch_name(EqzArch a) {
  switch (a) {
    case EqzArch::KNet: return "knet";
    case EqzArch::Sum: return "sum";
    case EqzArch::Head: return "head";
  }
  throw std::logic_error("unreachable");
}

EqzArch arch_from_name(const std::string& s) {
  if (s == "knet") return EqzArch::KNet;
  if (s == "sum") return EqzArch::Sum;
  if (s == "head") return EqzArch::Head;
  throw std::invalid_argument("unknown architecture tag: " + s);
}

json net_to_json(const EqzNetParams& p) {
  json j;
  j["arch"] = arch_name(p.arch);
  j["n1"] = p.n1;
  j["n2"] = p.n2;
  j["k"] = p.block_a.width();
  j["block_a"] = block_to_json(p.block_a);
  if (p.arch != EqzArch::KNet) {
    j["l"] = p.block_b.width();
    j["block_b"] = block_to_json(p.block_b);
  }
  if (p.arch == EqzArch::Head) {
    j["head"] = {{"w", matrix_to_json(p.head_w)},
                 {"b", vector_to_json(p.head_b)},
                 {"w2", vector_to_json(p.head_w2)}};
  }
  return j;
}

EqzNetParams net_from_json(const json& j) {
  EqzNetParams p;
  p.arch = arch_from_name(j.at("arch").get<std::string>());
  p.n1 = j.at("n1").get<int>();
  p.n2 = j.at("n2").get<int>();
  if (p.n1 < 0 || p.n2 < 0) throw std::invalid_argument("negative frame geometry");
  p.block_a = block_from_json(j.at("block_a"));
  if (j.at("k").get<int>() != p.block_a.width())
    throw std::invalid_argument("declared K does not match block width");
  if (p.block_a.w1.cols() != p.frame_length())
    throw std::invalid_argument("block width does not match the frame geometry");
  if (p.arch != EqzArch::KNet) {
    p.block_b = block_from_json(j.at("block_b"));
    if (j.at("l").get<int>() != p.block_b.width())
      throw std::invalid_argument("declared L does not match block width");
    if (p.block_b.w1.cols() != p.frame_length())
      throw std::invalid_argument("block width does not match the frame geometry");
  }
  if (p.arch == EqzArch::Head) {
    const json& h = j.at("head");
    p.head_w = matrix_from_json(h.at("w"));
    p.head_b = vector_from_json(h.at("b"));
    p.head_w2 = vector_from_json(h.at("w2"));
    if (p.head_w.rows() != 2 || p.head_w.cols() != 2 || p.head_b.size() != 2 ||
        p.head_w2.size() != 2)
      throw std::invalid_argument("head layer must be 2x2 with 2-vectors");
  }
  return p;
}

json train_to_json(const TrainConfig& t) {
  json j;
  j["learning_rate"] = t.learning_rate;
  j["beta1"] = t.beta1;
  j["beta2"] = t.beta2;
  j["epsilon"] = t.epsilon;
  j["batch_size"] = t.batch_size;
  j["epochs"] = t.epochs;
  j["seed"] = t.seed;
  j["alpha"] = t.alpha;
  j["w_init"] = t.w_init;
  return j;
}

TrainConfig train_from_json(const json& j) {
  TrainConfig t;
  t.learning_rate = j.at("learning_rate").get<double>();
  t.beta1 = j.at("beta1").get<double>();
  t.beta2 = j.at("beta2").get<double>();
  t.epsilon = j.at("epsilon").get<double>();
  t.batch_size = j.at("batch_size").get<int>();
  t.epochs = j.at("epochs").get<int>();
  t.seed = j.at("seed").get<std::uint64_t>();
  t.alpha = j.at("alpha").get<double>();
  t.w_init = j.at("w_init").get<double>();
  return t;
}

}  // namespace

std::string checkpoint_to_json(const Checkpoint& ckpt) {
  json j;
  j["format"] = "eqznet-checkpoint";
  j["version"] = 1;
  json meta;
  meta["channel_label"] = ckpt.meta.channel_label;
  for (double t : ckpt.meta.channel_taps) require_finite(t);
  meta["channel_taps"] = ckpt.meta.channel_taps;
  meta["modulation_order"] = ckpt.meta.modulation_order;
  meta["ebn0_db"] = ckpt.meta.ebn0_db;
  meta["code_rate"] = ckpt.meta.code_rate;
  meta["seed"] = ckpt.meta.seed;
  meta["init"] = ckpt.meta.init;
  meta["train"] = train_to_json(ckpt.meta.train);
  j["meta"] = meta;
  json nets = json::array();
  for (const auto& p : ckpt.bank.nets) nets.push_back(net_to_json(p));
  j["networks"] = nets;
  return j.dump(2) + "\n";
}

Checkpoint checkpoint_from_json(const std::string& text) {
  json j;
  try {
    j = json::parse(text);
  } catch (const json::parse_error& e) {
    throw std::invalid_argument(std::string("checkpoint is not valid JSON: ") + e.what());
  }
  if (j.value("format", "") != "eqznet-checkpoint")
    throw std::invalid_argument("not an eqznet checkpoint file");
  if (j.value("version", -1) != 1)
    throw std::invalid_argument("unsupported checkpoint version");
  Checkpoint c;
  const json& meta = j.at("meta");
  c.meta.channel_label = meta.at("channel_label").get<std::string>();
  c.meta.channel_taps = meta.at("channel_taps").get<std::vector<double>>();
  c.meta.modulation_order = meta.at("modulation_order").get<int>();
  c.meta.ebn0_db = meta.at("ebn0_db").get<double>();
  c.meta.code_rate = meta.at("code_rate").get<double>();
  c.meta.seed = meta.at("seed").get<std::uint64_t>();
  c.meta.init = meta.at("init").get<std::string>();
  c.meta.train = train_from_json(meta.at("train"));
  for (const json& net : j.at("networks")) c.bank.nets.push_back(net_from_json(net));
  if (c.bank.nets.empty()) throw std::invalid_argument("checkpoint holds no networks");
  return c;
}

void save_checkpoint(const Checkpoint& ckpt, const std::string& path) {
  const std::string text = checkpoint_to_json(ckpt);
  std::ofstream out(path, std::ios::binary);
  if (!out) throw std::runtime_error("cannot open checkpoint file for writing: " + path);
  out << text;
  if (!out) throw std::runtime_error("write failed: " + path);
}

Checkpoint load_checkpoint(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw std::runtime_error("cannot open checkpoint file: " + path);
  std::string text((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());
  return checkpoint_from_json(text);
}

}  // namespace eqz
