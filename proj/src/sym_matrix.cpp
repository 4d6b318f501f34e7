#include "rmtl/sym_matrix.hpp"

#include <cmath>
#include <stdexcept>

namespace rmtl {

SymMatrix::SymMatrix(const Eigen::MatrixXd& m) {
  if (m.rows() != m.cols()) {
    throw std::invalid_argument("SymMatrix: matrix must be square");
  }
  mat_ = 0.5 * (m + m.transpose());
}

SymMatrix SymMatrix::zero(Eigen::Index dim) {
  return SymMatrix(Eigen::MatrixXd::Zero(dim, dim));
}

SymMatrix SymMatrix::identity(Eigen::Index dim) {
  return SymMatrix(Eigen::MatrixXd::Identity(dim, dim));
}

namespace {

Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> decompose(const SymMatrix& a) {
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> solver(a.mat());
  if (solver.info() != Eigen::Success) {
    throw std::runtime_error("symmetric eigendecomposition failed");
  }
  return solver;
}

}  // namespace

SymMatrix pseudo_inverse(const SymMatrix& a, double tol) {
  if (a.dim() == 0) return a;
  auto solver = decompose(a);
  const Eigen::VectorXd& lambda = solver.eigenvalues();
  const double cutoff = tol * lambda.cwiseAbs().maxCoeff();
  Eigen::VectorXd inv = Eigen::VectorXd::Zero(lambda.size());
  for (Eigen::Index i = 0; i < lambda.size(); ++i) {
    if (std::abs(lambda[i]) > cutoff) inv[i] = 1.0 / lambda[i];
  }
  return SymMatrix(solver.eigenvectors() * inv.asDiagonal() *
                   solver.eigenvectors().transpose());
}

int numeric_rank(const SymMatrix& a, double tol) {
  if (a.dim() == 0) return 0;
  auto solver = decompose(a);
  const Eigen::VectorXd& lambda = solver.eigenvalues();
  const double cutoff = tol * lambda.cwiseAbs().maxCoeff();
  int rank = 0;
  for (Eigen::Index i = 0; i < lambda.size(); ++i) {
    if (std::abs(lambda[i]) > cutoff) ++rank;
  }
  return rank;
}

int matrix_rank(const Eigen::MatrixXd& m) {
  if (m.size() == 0) return 0;
  return static_cast<int>(m.colPivHouseholderQr().rank());
}

SymMatrix psd_sqrt(const SymMatrix& a, double tol) {
  if (a.dim() == 0) return a;
  auto solver = decompose(a);
  Eigen::VectorXd lambda = solver.eigenvalues();
  const double cutoff = tol * lambda.cwiseAbs().maxCoeff();
  Eigen::VectorXd root = Eigen::VectorXd::Zero(lambda.size());
  for (Eigen::Index i = 0; i < lambda.size(); ++i) {
    if (lambda[i] < -cutoff) {
      throw std::domain_error("psd_sqrt: matrix has a materially negative eigenvalue");
    }
    root[i] = lambda[i] > 0.0 ? std::sqrt(lambda[i]) : 0.0;
  }
  return SymMatrix(solver.eigenvectors() * root.asDiagonal() *
                   solver.eigenvectors().transpose());
}

}  // namespace rmtl
