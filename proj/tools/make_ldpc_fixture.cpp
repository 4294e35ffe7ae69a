#include <fstream>
#include <iostream>
#include <string>

#include <CLI11.hpp>

#include "eqz/ldpc.hpp"

// Deterministically regenerates the shipped parity-check fixture.
int main(int argc, char** argv) {
  CLI::App app{"emit a progressive-edge-growth regular LDPC code as alist"};
  int n = 1998;
  int k = 1776;
  int column_weight = 3;
  std::uint64_t seed = 7;
  std::string out = "peg_1998_1776.alist";
  app.add_option("--n", n, "code length");
  app.add_option("--k", k, "message length");
  app.add_option("--column-weight", column_weight, "variable node degree");
  app.add_option("--seed", seed, "construction seed");
  app.add_option("--out", out, "output alist path");
  CLI11_PARSE(app, argc, argv);

  try {
    const eqz::LdpcCode code = eqz::make_regular_code(n, k, column_weight, seed);
    std::ofstream f(out, std::ios::binary);
    if (!f) throw std::runtime_error("cannot open " + out);
    f << eqz::emit_alist(code);
    std::cout << out << ": n=" << code.n << " k=" << code.k << " checks=" << code.checks() << '\n';
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return 1;
  }
  return 0;
}
