#include "rmtl/contrasts.hpp"

#include <cmath>
#include <stdexcept>

#include "rmtl/sym_matrix.hpp"

namespace rmtl {

namespace {
constexpr double kContrastTolerance = 1e-12;
}

int ContrastSpec::block_size(int blk) const {
  const int next = blk + 1 < num_blocks() ? block_starts[static_cast<std::size_t>(blk) + 1] : rows();
  return next - block_starts[static_cast<std::size_t>(blk)];
}

Eigen::MatrixXd ContrastSpec::block(int blk) const {
  return H.middleRows(block_begin(blk), block_size(blk));
}

Eigen::VectorXd ContrastSpec::block_offset(int blk) const {
  return c.segment(block_begin(blk), block_size(blk));
}

std::vector<std::string> validate(const ContrastSpec& spec, int k, int num_causes) {
  std::vector<std::string> violations;
  const int r = spec.rows();
  const int km = k * num_causes;

  if (r == 0 || spec.H.cols() != km) {
    violations.push_back("H must be r x (k*M) = r x " + std::to_string(km) + " with r >= 1, got " +
                         std::to_string(r) + " x " + std::to_string(spec.H.cols()));
    return violations;
  }
  if (spec.c.size() != r) {
    violations.push_back("offset c has length " + std::to_string(spec.c.size()) +
                         ", expected " + std::to_string(r));
  }
  if (spec.H.cwiseAbs().maxCoeff() == 0.0) {
    violations.push_back("H is the zero matrix");
  }

  // Contrast property across groups: H (1_k kron e_m) = 0 for every cause m.
  for (int m = 0; m < num_causes; ++m) {
    for (int row = 0; row < r; ++row) {
      double sum = 0.0;
      for (int i = 0; i < k; ++i) sum += spec.H(row, i * num_causes + m);
      if (std::abs(sum) > kContrastTolerance) {
        violations.push_back("contrast property violated at row " + std::to_string(row + 1) +
                             ", cause " + std::to_string(m + 1) + ": group coefficients sum to " +
                             std::to_string(sum));
      }
    }
  }

  // Block partition: disjoint, covering, in order, each of rank >= 1.
  const int L = spec.num_blocks();
  if (L == 0) {
    violations.push_back("block partition is empty");
    return violations;
  }
  if (spec.block_starts.front() != 0) {
    violations.push_back("first block must start at row 0");
  }
  for (int l = 1; l < L; ++l) {
    if (spec.block_starts[static_cast<std::size_t>(l)] <= spec.block_starts[static_cast<std::size_t>(l) - 1]) {
      violations.push_back("block starts must be strictly increasing");
      return violations;
    }
  }
  if (spec.block_starts.back() >= r) {
    violations.push_back("last block starts beyond the end of H");
    return violations;
  }
  if (spec.labels.size() != static_cast<std::size_t>(L)) {
    violations.push_back("expected " + std::to_string(L) + " block labels, got " +
                         std::to_string(spec.labels.size()));
  }
  for (int l = 0; l < L; ++l) {
    if (matrix_rank(spec.block(l)) < 1) {
      violations.push_back("block " + std::to_string(l + 1) + " (rows " +
                           std::to_string(spec.block_begin(l) + 1) + "..." +
                           std::to_string(spec.block_begin(l) + spec.block_size(l)) +
                           ") has rank 0");
    }
  }
  return violations;
}

void require_valid(const ContrastSpec& spec, int k, int num_causes) {
  const auto violations = validate(spec, k, num_causes);
  if (violations.empty()) return;
  std::string message = "invalid contrast specification:";
  for (const auto& v : violations) message += "\n  - " + v;
  throw std::invalid_argument(message);
}

Eigen::MatrixXd dunnett(int k) {
  if (k < 2) throw std::invalid_argument("dunnett: requires k >= 2");
  Eigen::MatrixXd h = Eigen::MatrixXd::Zero(k - 1, k);
  for (int i = 0; i < k - 1; ++i) {
    h(i, 0) = -1.0;
    h(i, i + 1) = 1.0;
  }
  return h;
}

Eigen::MatrixXd tukey(int k) {
  if (k < 2) throw std::invalid_argument("tukey: requires k >= 2");
  Eigen::MatrixXd h = Eigen::MatrixXd::Zero(k * (k - 1) / 2, k);
  int row = 0;
  for (int i = 0; i < k - 1; ++i) {
    for (int j = i + 1; j < k; ++j, ++row) {
      h(row, i) = -1.0;
      h(row, j) = 1.0;
    }
  }
  return h;
}

Eigen::MatrixXd factorial_2x2() {
  Eigen::MatrixXd h(3, 4);
  h << 1, 1, -1, -1,   // main effect A
       1, -1, 1, -1,   // main effect B
       1, -1, -1, 1;   // interaction
  return h;
}

std::vector<std::string> factorial_2x2_labels() { return {"A", "B", "AB"}; }

ContrastSpec expand(const Eigen::MatrixXd& group_matrix, int num_causes, ExpandMode mode,
                    const std::vector<int>& selected_causes,
                    const std::vector<std::string>& row_labels) {
  if (group_matrix.rows() == 0 || num_causes < 1) {
    throw std::invalid_argument("expand: empty group matrix or no event types");
  }
  const int rows_g = static_cast<int>(group_matrix.rows());
  const int k = static_cast<int>(group_matrix.cols());
  const int M = num_causes;

  std::vector<std::string> names(row_labels);
  if (names.empty()) {
    for (int l = 0; l < rows_g; ++l) names.push_back("H" + std::to_string(l + 1));
  }
  if (names.size() != static_cast<std::size_t>(rows_g)) {
    throw std::invalid_argument("expand: one label per group-matrix row required");
  }

  std::vector<int> causes;
  if (mode == ExpandMode::SelectedEvents) {
    causes = selected_causes;
    if (causes.empty()) throw std::invalid_argument("expand: empty cause selection");
    for (int m : causes) {
      if (m < 1 || m > M) throw std::invalid_argument("expand: selected cause out of range");
    }
  } else {
    for (int m = 1; m <= M; ++m) causes.push_back(m);
  }

  ContrastSpec spec;
  if (mode == ExpandMode::AllEvents) {
    spec.H = Eigen::MatrixXd::Zero(rows_g * M, k * M);
    for (int l = 0; l < rows_g; ++l) {
      for (int m = 0; m < M; ++m) {
        for (int i = 0; i < k; ++i) {
          spec.H(l * M + m, i * M + m) = group_matrix(l, i);
        }
      }
      spec.block_starts.push_back(l * M);
      spec.labels.push_back(names[static_cast<std::size_t>(l)]);
    }
  } else {
    const int n_causes = static_cast<int>(causes.size());
    spec.H = Eigen::MatrixXd::Zero(rows_g * n_causes, k * M);
    int row = 0;
    for (int l = 0; l < rows_g; ++l) {
      for (int m : causes) {
        for (int i = 0; i < k; ++i) {
          spec.H(row, i * M + (m - 1)) = group_matrix(l, i);
        }
        spec.block_starts.push_back(row);
        spec.labels.push_back(names[static_cast<std::size_t>(l)] + ":cause" + std::to_string(m));
        ++row;
      }
    }
  }
  spec.c = Eigen::VectorXd::Zero(spec.rows());
  return spec;
}

}  // namespace rmtl
