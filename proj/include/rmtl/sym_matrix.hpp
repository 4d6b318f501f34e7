#pragma once

#include <Eigen/Dense>

namespace rmtl {

/// Relative eigenvalue threshold for rank decisions and pseudo-inversion.
inline constexpr double kRankTolerance = 1e-10;

/// Symmetric real matrix; symmetrized on construction so the stored
/// entries satisfy A(i,j) == A(j,i) exactly.
class SymMatrix {
 public:
  SymMatrix() = default;
  explicit SymMatrix(const Eigen::MatrixXd& m);

  static SymMatrix zero(Eigen::Index dim);
  static SymMatrix identity(Eigen::Index dim);

  Eigen::Index dim() const { return mat_.rows(); }
  double operator()(Eigen::Index i, Eigen::Index j) const { return mat_(i, j); }
  const Eigen::MatrixXd& mat() const { return mat_; }

 private:
  Eigen::MatrixXd mat_;
};

/// Moore-Penrose inverse via symmetric eigendecomposition.  Eigenvalues with
/// |lambda| <= tol * max|lambda| are inverted to zero.
SymMatrix pseudo_inverse(const SymMatrix& a, double tol = kRankTolerance);

/// Number of eigenvalues with |lambda| > tol * max|lambda| (0 for the zero matrix).
int numeric_rank(const SymMatrix& a, double tol = kRankTolerance);

/// Rank of a general rectangular matrix (column-pivoted QR).
int matrix_rank(const Eigen::MatrixXd& m);

/// Symmetric PSD square root.  Eigenvalues in [-tol * max|lambda|, 0) are
/// clamped to zero; anything materially below that throws std::domain_error.
SymMatrix psd_sqrt(const SymMatrix& a, double tol = kRankTolerance);

}  // namespace rmtl
