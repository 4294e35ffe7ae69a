#pragma once

#include <cstdint>
#include <optional>
#include <vector>

#include "eqz/eqznet.hpp"
#include "eqz/ldpc.hpp"
#include "eqz/lmmse.hpp"
#include "eqz/txchain.hpp"

namespace eqz {

enum class TurboEq { EqzNet, Lmmse, Bcjr };

struct TurboConfig {
  int iterations = 3;                   // outer equalize/decode rounds, >= 1
  TurboEq first = TurboEq::Lmmse;       // equalizer for round one
  TurboEq subsequent = TurboEq::Lmmse;  // rounds two onward (Lmmse or Bcjr)
  int decoder_iterations = 30;          // inner belief-propagation cap
  std::optional<std::uint64_t> interleaver_seed;  // engaged when set
  int n1 = 7;                           // frame geometry for LMMSE / EqzNet
  int n2 = 7;
};

// Seeded uniform permutation: position i of the transmitted stream carries
// code bit perm[i].
std::vector<int> make_interleaver(int length, std::uint64_t seed);
std::vector<double> permute(const std::vector<double>& x, const std::vector<int>& perm);
std::vector<double> unpermute(const std::vector<double>& x, const std::vector<int>& perm);

// Soft-interference-cancellation LMMSE: symbol means/variances from the
// prior LLRs, prior-mean ISI subtracted around each frame (never the center
// symbol itself), one time-invariant filter built from the average residual
// variance, Gaussian per-bit demapping excluding the own-bit prior.  With
// all-zero priors this reduces bit-exactly to the plain filter LLR.
// Output is extrinsic and unclamped.
std::vector<double> lmmse_with_priors(const std::vector<double>& z, const ChannelModel& channel,
                                      const PamConstellation& constellation,
                                      const std::vector<double>& prior_llrs, int n1, int n2);

struct TurboResult {
  std::vector<std::uint8_t> decoded_bits;              // message estimate, length k
  std::vector<std::vector<std::uint8_t>> per_iteration_bits;  // one message estimate per round
  bool converged = false;
  int iterations_run = 0;
};

// Receiver for one coded block: equalize -> deinterleave -> decode ->
// re-interleave decoder extrinsic as the next equalizer priors.  Round one
// uses config.first (an EqzNet bank forwards each frame and its output is
// taken as extrinsic); later rounds use config.subsequent with the decoder
// feedback as priors.  Stops early once the decoder hits a zero syndrome;
// per_iteration_bits then repeats the final estimate so its length always
// equals config.iterations.
TurboResult turbo_equalize(const std::vector<double>& z, const LdpcCode& code,
                           const ChannelModel& channel, const PamConstellation& constellation,
                           const EqzNetBank* bank, const TurboConfig& config);

}  // namespace eqz
