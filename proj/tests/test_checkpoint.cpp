#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cstdio>
#include <filesystem>
#include <fstream>

#include "eqz/checkpoint.hpp"
#include "eqz/lmmse.hpp"

using namespace eqz;

namespace {

Checkpoint sample_checkpoint() {
  const ChannelModel ch = ChannelModel::preset("h_A", 0.05);
  const LmmseFilter f = design_filter(ch, 7, 7);
  Checkpoint c;
  c.meta.channel_label = "h_A";
  c.meta.channel_taps = ch.taps;
  c.meta.modulation_order = 2;
  c.meta.ebn0_db = 9.5;
  c.meta.code_rate = 1.0;
  c.meta.seed = 77;
  c.meta.init = "lmmse";
  c.meta.train.learning_rate = 2.5e-4;
  c.meta.train.epochs = 17;
  c.meta.train.seed = 5;
  c.bank.nets.push_back(compose_head(init_k_eqznet(f, 6, 2.0, 1.0), init_k_eqznet(f, 2, 2.0, 1.0), 3));
  return c;
}

std::string temp_path(const char* name) {
  return (std::filesystem::temp_directory_path() / name).string();
}

}  // namespace

TEST_CASE("checkpoints round trip bit-exactly through JSON") {
  const Checkpoint c = sample_checkpoint();
  const std::string text = checkpoint_to_json(c);
  const Checkpoint back = checkpoint_from_json(text);
  CHECK(back.meta.channel_label == c.meta.channel_label);
  CHECK(back.meta.channel_taps == c.meta.channel_taps);
  CHECK(back.meta.modulation_order == 2);
  CHECK(back.meta.ebn0_db == 9.5);
  CHECK(back.meta.seed == 77);
  CHECK(back.meta.init == "lmmse");
  CHECK(back.meta.train.learning_rate == 2.5e-4);
  CHECK(back.meta.train.epochs == 17);
  REQUIRE(back.bank.nets.size() == 1);
  CHECK(flatten(back.bank.nets[0]) == flatten(c.bank.nets[0]));
  CHECK(back.bank.nets[0].n1 == c.bank.nets[0].n1);
  CHECK(back.bank.nets[0].n2 == c.bank.nets[0].n2);
}

TEST_CASE("checkpoint files round trip") {
  const Checkpoint c = sample_checkpoint();
  const std::string path = temp_path("eqz_ckpt_roundtrip.json");
  save_checkpoint(c, path);
  const Checkpoint back = load_checkpoint(path);
  CHECK(flatten(back.bank.nets[0]) == flatten(c.bank.nets[0]));
  std::remove(path.c_str());
}

TEST_CASE("identical saves produce identical bytes") {
  const Checkpoint c = sample_checkpoint();
  CHECK(checkpoint_to_json(c) == checkpoint_to_json(c));
}

TEST_CASE("non-finite parameters are rejected") {
  Checkpoint c = sample_checkpoint();
  c.bank.nets[0].block_a.w1(0, 0) = std::numeric_limits<double>::quiet_NaN();
  CHECK_THROWS(checkpoint_to_json(c));
  Checkpoint inf = sample_checkpoint();
  inf.bank.nets[0].head_w2(0) = std::numeric_limits<double>::infinity();
  CHECK_THROWS(checkpoint_to_json(inf));
}

TEST_CASE("malformed payloads are rejected") {
  const std::string good = checkpoint_to_json(sample_checkpoint());
  CHECK_THROWS(checkpoint_from_json("{"));
  CHECK_THROWS(checkpoint_from_json("{}"));
  std::string wrong_format = good;
  const auto at = wrong_format.find("eqznet-checkpoint");
  wrong_format.replace(at, 17, "something-else-x1");
  CHECK_THROWS(checkpoint_from_json(wrong_format));
  // Declared width no longer matches the stored matrix.
  std::string wrong_shape = good;
  const auto kpos = wrong_shape.find("\"k\": 6");
  REQUIRE(kpos != std::string::npos);
  wrong_shape.replace(kpos, 6, "\"k\": 4");
  CHECK_THROWS(checkpoint_from_json(wrong_shape));
}

TEST_CASE("loading a missing file fails cleanly") {
  CHECK_THROWS(load_checkpoint(temp_path("eqz_ckpt_does_not_exist.json")));
}
