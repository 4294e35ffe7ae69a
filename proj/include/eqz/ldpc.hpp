#pragma once

#include <cstdint>
#include <string>
#include <vector>

namespace eqz {

// Binary LDPC code defined by its parity-check matrix.  The systematic
// encoder comes from Gauss-Jordan elimination over GF(2); the pivot columns
// carry parity and the free columns carry the message (the recorded column
// permutation).  Requires full row rank.
struct LdpcCode {
  int n = 0;  // block length
  int k = 0;  // message length = n - checks
  std::vector<std::vector<int>> check_vars;  // per check: variable indices, ascending
  std::vector<std::vector<int>> var_checks;  // per variable: check indices, ascending
  std::vector<int> info_positions;    // k free columns, ascending
  std::vector<int> parity_positions;  // one pivot column per reduced row
  // Reduced rows restricted to the free columns, packed 64 bits per word:
  // parity at parity_positions[i] = <parity_map[i], message>.
  std::vector<std::vector<std::uint64_t>> parity_map;

  int checks() const { return n - k; }
  double rate() const { return static_cast<double>(k) / n; }
};

// Standard alist layout: "n m", max degrees, per-column and per-row degrees,
// then 1-based index lists (padded with zeros or unpadded; both parse).
// Throws std::invalid_argument with a line number on malformed input and on
// rank-deficient parity checks.
LdpcCode load_alist(const std::string& text);
LdpcCode load_alist_file(const std::string& path);

// Padded standard layout; load_alist(emit_alist(code)) reproduces the matrix.
std::string emit_alist(const LdpcCode& code);

std::vector<std::uint8_t> encode(const LdpcCode& code, const std::vector<std::uint8_t>& message);

// H c^T over GF(2); all-zero means valid codeword.
std::vector<std::uint8_t> syndrome(const LdpcCode& code, const std::vector<std::uint8_t>& word);

struct DecodeResult {
  std::vector<double> posterior;  // channel + extrinsic, bit-exactly
  std::vector<double> extrinsic;  // sum of check-to-variable messages, clamped
  std::vector<std::uint8_t> hard_bits;
  bool converged = false;
  int iterations = 0;
};

// Flooding sum-product with the tanh rule; messages clamped to +/-40; stops
// early once the hard decision has zero syndrome.
DecodeResult decode(const LdpcCode& code, const std::vector<double>& channel_llrs,
                    int max_iterations);

// Deterministic progressive-edge-growth construction: column weight `column_weight`,
// rows filled to the exact regular degree n*column_weight/(n-k).  Retries internally
// derived seeds until the parity checks have full row rank.
LdpcCode make_regular_code(int n, int k, int column_weight, std::uint64_t seed);

}  // namespace eqz
