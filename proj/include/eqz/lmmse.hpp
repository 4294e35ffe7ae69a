#pragma once

#include <Eigen/Dense>
#include <vector>

#include "eqz/txchain.hpp"

namespace eqz {

// Time-invariant linear MMSE estimator for the center symbol of a frame.
// Taps are stored in frame order: taps[j] multiplies samples[j], i.e.
// [f_{N2}, ..., f_0, ..., f_{-N1}].
struct LmmseFilter {
  std::vector<double> taps;
  int n1 = 0;
  int n2 = 0;
  double reliability_constant = 0.0;  // C = 1 - h_n^T f, in (0, 1) for sigma_w^2 > 0
  int length() const { return n1 + n2 + 1; }
};

// H maps the symbol window [x_{n-N2-M_h}, ..., x_{n+N1}] to the frame:
// row r carries [0...0, h_{M_h}, ..., h_0, 0...0] starting at column r.
// The center symbol x_n lives in column M_h + N2.
struct ConvolutionMatrix {
  Eigen::MatrixXd mat;  // N x (N + M_h)
  int selected_column = 0;
};

ConvolutionMatrix make_convolution_matrix(const ChannelModel& channel, int n1, int n2);

// f = (sigma_w^2 I + H H^T)^{-1} h_n via Cholesky (no explicit inverse).
LmmseFilter design_filter(const ChannelModel& channel, int n1, int n2);

// Same solve with a per-symbol variance on the window columns:
// f = (sigma_w^2 I + H V H^T)^{-1} h_n.  Shared with the soft-interference-
// cancellation path, which passes residual variances with the center at 1.
LmmseFilter design_filter_with_variances(const ChannelModel& channel, int n1, int n2,
                                         const Eigen::VectorXd& symbol_variances);

double estimate_symbol(const LmmseFilter& filter, const ObservationFrame& frame);

// L = 2 f^T z / C (binary antipodal signaling), unclamped.
double llr(const LmmseFilter& filter, const ObservationFrame& frame);

double soft_bit(double llr_value);

// Cyclic shift aligning the filter with the symbol k positions before the
// center: result[i] = taps[(i + k) mod N].  Requires |k| < N.
std::vector<double> shifted_filter(const LmmseFilter& filter, int k);

// Independent reference: assembles Cov(z_n, z_n) and Cov(x_n, z_n) from the
// scalar channel equation under unit-variance IUD symbols and solves by
// Gaussian elimination.  Kept free of the production code paths on purpose.
LmmseFilter general_lmmse_oracle(const ChannelModel& channel, int n1, int n2);

}  // namespace eqz
