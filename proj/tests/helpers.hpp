#pragma once

// Small builders shared by the unit and acceptance suites.

#include <string>
#include <vector>

#include "rmtl/contrasts.hpp"
#include "rmtl/estimators.hpp"

namespace rmtl::testing {

/// Summary with the given stacked estimate and covariance; group bookkeeping
/// is filled with placeholders (inference only reads mu_hat, sigma_hat, n).
inline RmtlSummary synthetic_summary(const Eigen::VectorXd& mu, const Eigen::MatrixXd& sigma,
                                     int n, int k = 0, int num_causes = 1) {
  RmtlSummary s;
  s.mu_hat = mu;
  s.sigma_hat = SymMatrix(sigma);
  s.n = n;
  s.k = k > 0 ? k : static_cast<int>(mu.size());
  s.num_causes = num_causes;
  s.tau = 1.0;
  for (int i = 0; i < s.k; ++i) s.n_per_group.push_back(n / s.k);
  s.group_warnings.resize(static_cast<std::size_t>(s.k));
  return s;
}

/// Contrast spec whose blocks are the rows of H, offsets zero.
inline ContrastSpec rows_as_blocks(const Eigen::MatrixXd& h) {
  ContrastSpec spec;
  spec.H = h;
  spec.c = Eigen::VectorXd::Zero(h.rows());
  for (int r = 0; r < h.rows(); ++r) {
    spec.block_starts.push_back(r);
    spec.labels.push_back("H" + std::to_string(r + 1));
  }
  return spec;
}

/// Single-block spec covering the whole matrix.
inline ContrastSpec single_block(const Eigen::MatrixXd& h, const Eigen::VectorXd& c,
                                 const std::string& label = "global") {
  ContrastSpec spec;
  spec.H = h;
  spec.c = c;
  spec.block_starts = {0};
  spec.labels = {label};
  return spec;
}

}  // namespace rmtl::testing
