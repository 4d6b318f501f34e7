#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "rmtl/contrasts.hpp"
#include "rmtl/estimators.hpp"

namespace rmtl {

struct WaldResult {
  double statistic = 0.0;
  int rank = 0;  // numeric rank of H Sigma H^T
};

/// Wald-type statistic n (H mu - c)^T (H Sigma H^T)^+ (H mu - c).
WaldResult wald_statistic(const RmtlSummary& summary, const Eigen::MatrixXd& H,
                          const Eigen::VectorXd& c);

struct Interval {
  double lo = 0.0;
  double hi = 0.0;
};

/// Interval H mu_hat +/- sqrt(H Sigma H^T / n * critical) for a single
/// contrast row; `critical` is the permutation quantile or a chi-squared
/// quantile depending on the calibration.  Throws for multi-row H (the
/// confidence region is then the sublevel set of the Wald statistic and is
/// probed through wald_statistic directly).
Interval contrast_interval(const RmtlSummary& summary, const Eigen::MatrixXd& H_row,
                           double critical);

struct GlobalTestResult {
  double statistic = 0.0;
  int df = 0;  // rank(H): degrees of freedom used for calibration
  double critical_value = 0.0;
  double p_value = 1.0;
  std::string method;  // "asymptotic" or "permutation"
  bool rejected = false;
  double alpha = 0.0;
  int B_used = 0;  // permutation only
  bool rank_mismatch = false;  // numeric rank of H Sigma H^T differs from rank(H)
};

/// Chi-squared calibrated Wald test of H mu = c.  Throws when H Sigma H^T
/// has rank 0 (nothing testable).
GlobalTestResult asymptotic_global_test(const RmtlSummary& summary, const ContrastSpec& spec,
                                        double alpha);

/// Studentized permutation test: pooled observations are reassigned to
/// groups of the original sizes B times; each replicate recomputes the
/// statistic with offset zero and re-estimated covariance.  The critical
/// value is the ceil((1-alpha)(B+1))-th order statistic of the replicate
/// statistics and the p-value is (1 + #{W_b >= W_obs}) / (B + 1).
GlobalTestResult permutation_global_test(const std::vector<GroupSample>& samples,
                                         const ContrastSpec& spec, double tau, double alpha,
                                         int B, std::uint64_t seed, unsigned threads = 1);

struct LocalLevelResult {
  double beta = 0.0;               // calibrated local level
  Eigen::MatrixXd statistics;      // B x L Monte Carlo statistics
  std::vector<int> ranks;          // rank(H_l Sigma H_l^T), used inside the calibration
  std::vector<double> min_pvalues; // per replicate, min over blocks
};

/// Monte Carlo local level: draws Y^(b) ~ N(0, I), forms the block
/// statistics (H_l Sigma^(1/2) Y)^T (H_l Sigma H_l^T)^+ (H_l Sigma^(1/2) Y)
/// and returns the largest grid value beta in {0, 1/B, ..., (B-1)/B} whose
/// estimated familywise error stays at or below alpha.  Throws when every
/// block is degenerate.
LocalLevelResult local_level(const RmtlSummary& summary, const ContrastSpec& spec, double alpha,
                             int B, std::uint64_t seed, unsigned threads = 1);

struct BlockTestResult {
  std::string label;
  double statistic = 0.0;
  int rank = 0;  // rank(H_l): degrees of freedom used for the threshold
  double critical_value = 0.0;
  bool rejected = false;
  double p_value = 1.0;   // marginal
  double adjusted_p = 1.0;
  bool has_interval = false;
  Interval interval;  // simultaneous, single-row blocks only
  bool rank_mismatch = false;
};

struct MultipleTestResult {
  std::vector<BlockTestResult> blocks;
  double local_level_beta = 0.0;  // beta_n(alpha), or alpha/L for Bonferroni
  double alpha = 0.0;
  int B_used = 0;
  std::string method;  // "multiple", "asymptotic_bonf", "permutation_bonf"

  bool any_rejection() const;
};

/// Multiple contrast test at the Monte-Carlo-calibrated local level, with
/// single-step min-p adjusted p-values and simultaneous confidence
/// intervals for single-row blocks.
MultipleTestResult multiple_asymptotic_test(const RmtlSummary& summary, const ContrastSpec& spec,
                                            double alpha, int B, std::uint64_t seed,
                                            unsigned threads = 1);

/// Bonferroni baseline: each block tested by the asymptotic global test at
/// level alpha/L; adjusted p-values are min(1, L p_l).  Degenerate blocks
/// (zero covariance) are reported as non-rejections with a rank warning.
MultipleTestResult bonferroni_asymptotic_test(const RmtlSummary& summary,
                                              const ContrastSpec& spec, double alpha);

/// Bonferroni baseline with a shared permutation stream: one set of B
/// permutations evaluates every block statistic, each tested at alpha/L.
MultipleTestResult bonferroni_permutation_test(const std::vector<GroupSample>& samples,
                                               const ContrastSpec& spec, double tau, double alpha,
                                               int B, std::uint64_t seed, unsigned threads = 1);

namespace detail {

/// B x L matrix of permutation statistics for the given hypothesis matrices
/// (offsets zero).  Replicate b draws its permutation from stream (seed, b).
Eigen::MatrixXd permutation_statistics(const std::vector<GroupSample>& samples, double tau,
                                       const std::vector<Eigen::MatrixXd>& matrices, int B,
                                       std::uint64_t seed, unsigned threads);

/// Order-statistic index (1-based) for the upper permutation quantile:
/// ceil((1 - level) * (B + 1)), capped at B.
int permutation_quantile_index(int B, double level);

}  // namespace detail

}  // namespace rmtl
