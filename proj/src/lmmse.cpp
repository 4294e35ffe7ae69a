#include "eqz/lmmse.hpp"

#include <cmath>
#include <stdexcept>

namespace eqz {

ConvolutionMatrix make_convolution_matrix(const ChannelModel& ch, int n1, int n2) {
  if (n1 < 0 || n2 < 0) throw std::invalid_argument("frame extents must be >= 0");
  const int n = n1 + n2 + 1;
  const int mh = ch.memory();
  ConvolutionMatrix cm;
  cm.mat = Eigen::MatrixXd::Zero(n, n + mh);
  for (int r = 0; r < n; ++r)
    for (int j = 0; j <= mh; ++j) cm.mat(r, r + j) = ch.taps[mh - j];
  cm.selected_column = mh + n2;
  return cm;
}

LmmseFilter design_filter_with_variances(const ChannelModel& ch, int n1, int n2,
                                         const Eigen::VectorXd& symbol_variances) {
  const ConvolutionMatrix cm = make_convolution_matrix(ch, n1, n2);
  const int n = n1 + n2 + 1;
  if (symbol_variances.size() != cm.mat.cols())
    throw std::invalid_argument("symbol variance vector length mismatch");
  Eigen::MatrixXd a = cm.mat * symbol_variances.asDiagonal() * cm.mat.transpose();
  a.diagonal().array() += ch.noise_variance;
  const Eigen::VectorXd hn = cm.mat.col(cm.selected_column);
  Eigen::LLT<Eigen::MatrixXd> llt(a);
  if (llt.info() != Eigen::Success)
    throw std::runtime_error("LMMSE system not positive definite (zero noise with rank-deficient H H^T)");
  const Eigen::VectorXd f = llt.solve(hn);
  if (!f.allFinite()) throw std::runtime_error("LMMSE solve produced non-finite taps");
  LmmseFilter out;
  out.taps.assign(f.data(), f.data() + n);
  out.n1 = n1;
  out.n2 = n2;
  out.reliability_constant = 1.0 - hn.dot(f);
  return out;
}

LmmseFilter design_filter(const ChannelModel& ch, int n1, int n2) {
  const int cols = n1 + n2 + 1 + ch.memory();
  return design_filter_with_variances(ch, n1, n2, Eigen::VectorXd::Ones(cols));
}

double estimate_symbol(const LmmseFilter& filter, const ObservationFrame& frame) {
  if (filter.n1 != frame.n1 || filter.n2 != frame.n2)
    throw std::invalid_argument("filter/frame geometry mismatch");
  const auto n = static_cast<Eigen::Index>(filter.taps.size());
  return Eigen::Map<const Eigen::VectorXd>(filter.taps.data(), n)
      .dot(Eigen::Map<const Eigen::VectorXd>(frame.samples.data(), n));
}

double llr(const LmmseFilter& filter, const ObservationFrame& frame) {
  const double c = filter.reliability_constant;
  if (!(c > 0.0) || !(c < 1.0)) throw std::invalid_argument("reliability constant outside (0, 1)");
  return 2.0 * estimate_symbol(filter, frame) / c;
}

double soft_bit(double llr_value) { return std::tanh(llr_value / 2.0); }

std::vector<double> shifted_filter(const LmmseFilter& filter, int k) {
  const int n = filter.length();
  if (k <= -n || k >= n) throw std::invalid_argument("shift magnitude must be < filter length");
  std::vector<double> out(n);
  for (int i = 0; i < n; ++i) out[i] = filter.taps[((i + k) % n + n) % n];
  return out;
}

LmmseFilter general_lmmse_oracle(const ChannelModel& ch, int n1, int n2) {
  if (n1 < 0 || n2 < 0) throw std::invalid_argument("frame extents must be >= 0");
  const int n = n1 + n2 + 1;
  const int mh = ch.memory();
  const int cols = n + mh;
  const int sel = mh + n2;

  // Assemble H from the scalar channel equation: row r is the observation
  // z_{n-N2+r} = sum_i h_i x_{n-N2+r-i}; column c holds the symbol
  // x_{n-N2-M_h+c}, so coefficient h_i lands at column r - i + M_h.
  std::vector<std::vector<double>> h(n, std::vector<double>(cols, 0.0));
  for (int r = 0; r < n; ++r)
    for (int i = 0; i <= mh; ++i) h[r][r - i + mh] = ch.taps[i];

  // Cov(z, z) = H E[x x^T] H^T + sigma^2 I with E[x x^T] = I under IUD
  // unit-energy symbols; Cov(x_n, z) is the selected column of H.
  std::vector<std::vector<double>> czz(n, std::vector<double>(n, 0.0));
  for (int r = 0; r < n; ++r)
    for (int s = 0; s < n; ++s) {
      double acc = 0.0;
      for (int c = 0; c < cols; ++c) acc += h[r][c] * h[s][c];
      if (r == s) acc += ch.noise_variance;
      czz[r][s] = acc;
    }
  std::vector<double> cxz(n);
  for (int r = 0; r < n; ++r) cxz[r] = h[r][sel];

  // Gauss-Jordan with partial pivoting on [Czz | Cxz].
  std::vector<std::vector<double>> aug = czz;
  std::vector<double> rhs = cxz;
  for (int col = 0; col < n; ++col) {
    int piv = col;
    for (int r = col + 1; r < n; ++r)
      if (std::fabs(aug[r][col]) > std::fabs(aug[piv][col])) piv = r;
    if (std::fabs(aug[piv][col]) < 1e-300) throw std::runtime_error("covariance matrix is singular");
    std::swap(aug[piv], aug[col]);
    std::swap(rhs[piv], rhs[col]);
    for (int r = 0; r < n; ++r) {
      if (r == col) continue;
      const double factor = aug[r][col] / aug[col][col];
      if (factor == 0.0) continue;
      for (int c = col; c < n; ++c) aug[r][c] -= factor * aug[col][c];
      rhs[r] -= factor * rhs[col];
    }
  }
  LmmseFilter out;
  out.n1 = n1;
  out.n2 = n2;
  out.taps.resize(n);
  for (int r = 0; r < n; ++r) out.taps[r] = rhs[r] / aug[r][r];
  double hf = 0.0;
  for (int r = 0; r < n; ++r) hf += cxz[r] * out.taps[r];
  out.reliability_constant = 1.0 - hf;
  return out;
}

}  // namespace eqz
