#pragma once

#include <Eigen/Dense>
#include <cstdint>
#include <vector>

#include "eqz/lmmse.hpp"
#include "eqz/txchain.hpp"

namespace eqz {

enum class EqzArch { KNet, Sum, Head };

// One first-layer block: `width` tanh neurons over the frame, combined by one
// signed output weight per neuron (the minus signs of the corrector neurons
// live in the stored values, the forward pass is a plain inner product).
struct EqzBlock {
  Eigen::MatrixXd w1;  // width x N
  Eigen::VectorXd b1;  // width
  Eigen::VectorXd w2;  // width
  int width() const { return static_cast<int>(w2.size()); }
};

struct EqzNetParams {
  EqzArch arch = EqzArch::KNet;
  int n1 = 0;
  int n2 = 0;
  EqzBlock block_a;
  EqzBlock block_b;        // Sum / Head only
  Eigen::MatrixXd head_w;  // 2 x 2, Head only
  Eigen::VectorXd head_b;  // 2
  Eigen::VectorXd head_w2; // 2
  int frame_length() const { return n1 + n2 + 1; }
};

struct LabeledFrame {
  ObservationFrame frame;
  Eigen::VectorXd target_llrs;  // one label per bit of the center symbol
};

struct TrainConfig {
  double learning_rate = 1e-3;
  double beta1 = 0.9;
  double beta2 = 0.999;
  double epsilon = 1e-8;
  int batch_size = 256;
  int epochs = 10;
  std::uint64_t seed = 1;
  double alpha = 2.0;   // gain of the first (estimator) neuron at init
  double w_init = 1.0;  // magnitude of the corrector output weights at init
};

// First layer [f, f, f_{-(K-2)/2}, ..., f_{+(K-2)/2}] (skipping the zero
// shift), zero biases, output weights [alpha*w, -w, ..., -w].  K even, >= 2.
EqzNetParams init_k_eqznet(const LmmseFilter& filter, int k, double alpha, double w);

// Ablation twin: all weights standard normal, biases zero.
EqzNetParams random_k_eqznet(int n1, int n2, int k, std::uint64_t seed);

double forward(const EqzNetParams& params, const ObservationFrame& frame);

// Flat parameter order (fixed; it also fixes the checkpoint layout):
// block_a W1 row-major, b1, w2; block_b likewise; head W row-major, b, w2.
Eigen::VectorXd flatten(const EqzNetParams& params);
void unflatten(EqzNetParams& params, const Eigen::VectorXd& theta);

// Mean-squared-error gradient over the batch against target bit
// `bit_index`, shaped like the parameters.
EqzNetParams gradient(const EqzNetParams& params, const std::vector<LabeledFrame>& batch,
                      int bit_index = 0);

double loss(const EqzNetParams& params, const std::vector<LabeledFrame>& dataset, int bit_index = 0);

struct TrainResult {
  EqzNetParams params;
  std::vector<double> epoch_losses;
};

// Adam over shuffled mini-batches; fully deterministic per (params, dataset,
// config) on one platform.
TrainResult train(const EqzNetParams& initial, const std::vector<LabeledFrame>& dataset,
                  const TrainConfig& config, int bit_index = 0);

// Output = sum of the two sub-network outputs; both remain trainable.
EqzNetParams compose_sum(const EqzNetParams& k_net, const EqzNetParams& pretrained_l);

// Two-neuron tanh head over the two sub-network outputs; head weights drawn
// from 0.1 * N(0,1) with zero biases, deterministically per head_seed.
EqzNetParams compose_head(const EqzNetParams& k_net, const EqzNetParams& l_net,
                          std::uint64_t head_seed);

// Simulates seeded blocks, labels every center symbol with full-block MAP
// bit LLRs (clamped), and extracts the centered frames.  The channel's
// noise_variance is authoritative (set it from Eb/N0 upstream).
std::vector<LabeledFrame> build_dataset(const ChannelModel& channel, const PamConstellation& constellation,
                                        long bit_count, int n1, int n2, std::uint64_t seed,
                                        int block_symbols = 2048);

// One independently trained network per bit position of the center symbol.
struct EqzNetBank {
  std::vector<EqzNetParams> nets;
};

EqzNetBank train_bank(const std::vector<EqzNetParams>& initial, const std::vector<LabeledFrame>& dataset,
                      const TrainConfig& config, std::vector<std::vector<double>>* traces = nullptr);

// q LLRs for the center symbol of the frame (clamped).
std::vector<double> bank_forward(const EqzNetBank& bank, const ObservationFrame& frame);

// Multiply-accumulate count per equalized output.
long operation_count(const EqzNetParams& params);

}  // namespace eqz
