#pragma once

#include <string>
#include <vector>

#include "eqz/eqznet.hpp"

namespace eqz {

// Provenance of a trained network bank: what it was trained for and how.
struct CheckpointMeta {
  std::string channel_label;  // "h_A", "h_B", or "custom"
  std::vector<double> channel_taps;
  int modulation_order = 2;
  double ebn0_db = 0.0;
  double code_rate = 1.0;
  std::uint64_t seed = 0;
  std::string init = "lmmse";  // "lmmse" or "random"
  TrainConfig train;
};

struct Checkpoint {
  CheckpointMeta meta;
  EqzNetBank bank;  // one network per bit position of the center symbol
};

// JSON container, format "eqznet-checkpoint" version 1.  Matrices are stored
// row-major with declared dimensions; doubles round-trip bit-exactly (saving
// a non-finite parameter is an error).
std::string checkpoint_to_json(const Checkpoint& ckpt);
Checkpoint checkpoint_from_json(const std::string& text);

void save_checkpoint(const Checkpoint& ckpt, const std::string& path);
Checkpoint load_checkpoint(const std::string& path);

}  // namespace eqz
