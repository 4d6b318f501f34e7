#pragma once

#include <string>
#include <vector>

#include <Eigen/Dense>

namespace rmtl {

/// Hypothesis matrix H (r x kM), offset c and a partition of the rows into
/// L contiguous blocks H_1..H_L with one label per block.
struct ContrastSpec {
  Eigen::MatrixXd H;
  Eigen::VectorXd c;
  std::vector<int> block_starts;     // first row of each block; begins with 0
  std::vector<std::string> labels;   // one per block

  int rows() const { return static_cast<int>(H.rows()); }
  int num_blocks() const { return static_cast<int>(block_starts.size()); }
  int block_begin(int block) const { return block_starts[static_cast<std::size_t>(block)]; }
  int block_size(int block) const;
  Eigen::MatrixXd block(int block) const;
  Eigen::VectorXd block_offset(int block) const;
};

/// How a group-level contrast matrix is expanded over event types.
enum class ExpandMode {
  AllEvents,       // block l is h_l kron I_M
  PerEvent,        // one single-row block h_l kron e_m' per (l, m)
  SelectedEvents,  // PerEvent restricted to a cause subset
};

/// Checks dimensions, H != 0, the group contrast property
/// H (1_k kron e_m) = 0 for every cause m, and per-block rank >= 1.
/// Returns one message per violation; empty means valid.
std::vector<std::string> validate(const ContrastSpec& spec, int k, int num_causes);

/// Throwing variant of validate.
void require_valid(const ContrastSpec& spec, int k, int num_causes);

/// Many-to-one (k-1) x k contrast matrix [-1, I].
Eigen::MatrixXd dunnett(int k);

/// All-pairs k(k-1)/2 x k contrast matrix, pairs ordered (1,2), (1,3), ...
Eigen::MatrixXd tukey(int k);

/// Group-level rows for the 2x2 design: main effect A, main effect B and
/// the interaction, as a 3 x 4 matrix with labels {"A", "B", "AB"}.
Eigen::MatrixXd factorial_2x2();
std::vector<std::string> factorial_2x2_labels();

/// Expands a group-level contrast matrix over M event types.
/// `selected_causes` (1-based) applies to SelectedEvents only.
/// `row_labels` names the group-level rows (defaults to "H1", "H2", ...).
ContrastSpec expand(const Eigen::MatrixXd& group_matrix, int num_causes, ExpandMode mode,
                    const std::vector<int>& selected_causes = {},
                    const std::vector<std::string>& row_labels = {});

}  // namespace rmtl
