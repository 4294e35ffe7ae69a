#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <set>
#include <string>

#include "eqz/ldpc.hpp"
#include "eqz/rng.hpp"
#include "eqz/txchain.hpp"

using namespace eqz;

namespace {

const char* kToyPath = EQZ_TEST_DATA_DIR "/toy_6_3.alist";
const char* kFixturePath = EQZ_CODES_DIR "/peg_1998_1776.alist";

bool is_zero(const std::vector<std::uint8_t>& v) {
  for (auto b : v)
    if (b) return false;
  return true;
}

}  // namespace

TEST_CASE("the toy code parses with the expected structure") {
  const LdpcCode code = load_alist_file(kToyPath);
  CHECK(code.n == 6);
  CHECK(code.k == 3);
  CHECK(code.checks() == 3);
  CHECK(code.rate() == doctest::Approx(0.5));
  REQUIRE(code.check_vars.size() == 3);
  CHECK(code.check_vars[0] == std::vector<int>{0, 1, 3});
  CHECK(code.check_vars[1] == std::vector<int>{1, 2, 4});
  CHECK(code.check_vars[2] == std::vector<int>{0, 2, 5});
  REQUIRE(code.var_checks.size() == 6);
  CHECK(code.var_checks[0] == std::vector<int>{0, 2});
  CHECK(code.var_checks[3] == std::vector<int>{0});
  CHECK(code.info_positions.size() == 3);
  CHECK(code.parity_positions.size() == 3);
}

TEST_CASE("every encoded toy message is a codeword carrying the message") {
  const LdpcCode code = load_alist_file(kToyPath);
  for (int m = 0; m < 8; ++m) {
    std::vector<std::uint8_t> msg = {static_cast<std::uint8_t>(m & 1),
                                     static_cast<std::uint8_t>((m >> 1) & 1),
                                     static_cast<std::uint8_t>((m >> 2) & 1)};
    const auto cw = encode(code, msg);
    REQUIRE(cw.size() == 6);
    CHECK(is_zero(syndrome(code, cw)));
    for (int i = 0; i < 3; ++i) CHECK(cw[code.info_positions[i]] == msg[i]);
  }
  CHECK_THROWS(encode(code, {0, 1}));  // wrong message length
}

TEST_CASE("distinct messages encode to distinct codewords") {
  const LdpcCode code = load_alist_file(kToyPath);
  std::set<std::vector<std::uint8_t>> words;
  for (int m = 0; m < 8; ++m)
    words.insert(encode(code, {static_cast<std::uint8_t>(m & 1),
                               static_cast<std::uint8_t>((m >> 1) & 1),
                               static_cast<std::uint8_t>((m >> 2) & 1)}));
  CHECK(words.size() == 8);
}

TEST_CASE("alist emit and reload reproduce the matrix") {
  const LdpcCode code = load_alist_file(kToyPath);
  const std::string text = emit_alist(code);
  const LdpcCode again = load_alist(text);
  CHECK(again.check_vars == code.check_vars);
  CHECK(again.var_checks == code.var_checks);
  CHECK(again.info_positions == code.info_positions);
  CHECK(emit_alist(again) == text);
}

TEST_CASE("unpadded alist files parse to the same code") {
  // Same toy matrix with the zero padding stripped from the short columns.
  const std::string unpadded =
      "6 3\n2 3\n2 2 2 1 1 1\n3 3 3\n"
      "1 3\n1 2\n2 3\n1\n2\n3\n"
      "1 2 4\n2 3 5\n1 3 6\n";
  const LdpcCode a = load_alist(unpadded);
  const LdpcCode b = load_alist_file(kToyPath);
  CHECK(a.check_vars == b.check_vars);
  CHECK(a.var_checks == b.var_checks);
}

TEST_CASE("malformed alist inputs fail with a diagnostic") {
  CHECK_THROWS(load_alist(""));
  CHECK_THROWS(load_alist("6\n"));
  // variable index out of range
  CHECK_THROWS(load_alist("2 1\n1 2\n1 1\n2\n1\n1\n1 3\n"));
  // duplicate variable in a row
  CHECK_THROWS(load_alist("2 1\n1 2\n1 1\n2\n1\n1\n1 1\n"));
  // row list inconsistent with column lists
  CHECK_THROWS(load_alist("2 1\n1 2\n1 1\n2\n1\n1\n2 2\n"));
  // rank-deficient: two identical checks
  CHECK_THROWS(load_alist("3 2\n2 2\n2 2 0\n2 2\n1 2\n1 2\n0 0\n1 2\n1 2\n"));
  CHECK_THROWS(load_alist_file(EQZ_TEST_DATA_DIR "/does_not_exist.alist"));
}

TEST_CASE("decoding clean strong LLRs converges immediately") {
  const LdpcCode code = load_alist_file(kToyPath);
  const auto cw = encode(code, {1, 0, 1});
  std::vector<double> llrs(6);
  for (int i = 0; i < 6; ++i) llrs[i] = cw[i] ? -8.0 : 8.0;
  const DecodeResult r = decode(code, llrs, 20);
  CHECK(r.converged);
  CHECK(r.hard_bits == cw);
  CHECK(r.iterations <= 1);
}

TEST_CASE("decoding corrects a weakly flipped bit") {
  const LdpcCode code = load_alist_file(kToyPath);
  const auto cw = encode(code, {0, 1, 1});
  std::vector<double> llrs(6);
  for (int i = 0; i < 6; ++i) llrs[i] = cw[i] ? -6.0 : 6.0;
  llrs[1] = -llrs[1] * 0.2;  // weak flip
  const DecodeResult r = decode(code, llrs, 30);
  CHECK(r.converged);
  CHECK(r.hard_bits == cw);
}

TEST_CASE("posterior equals channel plus extrinsic bit-exactly") {
  const LdpcCode code = load_alist_file(kToyPath);
  auto gen = make_engine(5);
  std::normal_distribution<double> d(0.0, 3.0);
  std::vector<double> llrs(6);
  for (auto& v : llrs) v = d(gen);
  const DecodeResult r = decode(code, llrs, 5);
  for (int i = 0; i < 6; ++i) {
    CHECK(r.posterior[i] == llrs[i] + r.extrinsic[i]);
    CHECK(std::abs(r.extrinsic[i]) <= 40.0);
    CHECK(r.hard_bits[i] == (r.posterior[i] < 0.0 ? 1 : 0));
  }
}

TEST_CASE("the shipped fixture is the regular code the receiver expects") {
  const LdpcCode code = load_alist_file(kFixturePath);
  CHECK(code.n == 1998);
  CHECK(code.k == 1776);
  CHECK(code.checks() == 222);
  for (const auto& checks : code.var_checks) CHECK(checks.size() == 3);
  for (const auto& vars : code.check_vars) CHECK(vars.size() == 27);
  // No two checks share more than one variable: the Tanner graph is 4-cycle free.
  for (int c1 = 0; c1 < code.checks(); ++c1)
    for (int c2 = c1 + 1; c2 < code.checks(); ++c2) {
      int shared = 0;
      std::size_t i = 0, j = 0;
      const auto& a = code.check_vars[c1];
      const auto& b = code.check_vars[c2];
      while (i < a.size() && j < b.size()) {
        if (a[i] == b[j]) ++shared, ++i, ++j;
        else if (a[i] < b[j]) ++i;
        else ++j;
      }
      CHECK(shared <= 1);
    }
  const auto msg = random_bits(code.k, 99);
  const auto cw = encode(code, msg);
  CHECK(is_zero(syndrome(code, cw)));
  for (int i = 0; i < code.k; ++i) CHECK(cw[code.info_positions[i]] == msg[i]);
}

TEST_CASE("the fixture decodes noisy blocks at high SNR") {
  const LdpcCode code = load_alist_file(kFixturePath);
  const auto msg = random_bits(code.k, 123);
  const auto cw = encode(code, msg);
  // BPSK over AWGN at sigma^2 = 0.18 (~5 dB Eb/N0 at rate 8/9): raw BER ~1%,
  // comfortably above the belief-propagation threshold of a (3,27) code.
  const double var = 0.18;
  auto gen = make_engine(7);
  std::normal_distribution<double> noise(0.0, std::sqrt(var));
  std::vector<double> llrs(code.n);
  for (int i = 0; i < code.n; ++i) {
    const double x = cw[i] ? -1.0 : 1.0;
    llrs[i] = 2.0 * (x + noise(gen)) / var;
  }
  const DecodeResult r = decode(code, llrs, 50);
  CHECK(r.converged);
  CHECK(r.hard_bits == cw);
}

TEST_CASE("the generator is deterministic and seed-sensitive") {
  const LdpcCode a = make_regular_code(60, 40, 3, 11);
  const LdpcCode b = make_regular_code(60, 40, 3, 11);
  CHECK(emit_alist(a) == emit_alist(b));
  const LdpcCode c = make_regular_code(60, 40, 3, 12);
  CHECK(emit_alist(c) != emit_alist(a));
  CHECK(a.n == 60);
  CHECK(a.k == 40);
  for (const auto& checks : a.var_checks) CHECK(checks.size() == 3);
  for (const auto& vars : a.check_vars) CHECK(vars.size() == 9);
  CHECK_THROWS(make_regular_code(10, 6, 3, 1));  // 30 edges cannot split evenly over 4 checks
}
