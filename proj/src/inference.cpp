#include "rmtl/inference.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <stdexcept>

#include "rmtl/distributions.hpp"
#include "rmtl/parallel.hpp"
#include "rmtl/rng.hpp"

namespace rmtl {

namespace {

void check_alpha(double alpha) {
  if (!(alpha > 0.0) || !(alpha < 1.0)) {
    throw std::invalid_argument("alpha must lie in (0, 1)");
  }
}

void check_replicates(int B) {
  if (B < 1) throw std::invalid_argument("resampling iterations B must be >= 1");
}

// Eigendecomposition-based pseudo-inverse and rank in one pass.
struct PinvRank {
  Eigen::MatrixXd pinv;
  int rank = 0;
};

PinvRank pinv_and_rank(const Eigen::MatrixXd& s) {
  PinvRank out;
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> solver(s);
  if (solver.info() != Eigen::Success) {
    throw std::runtime_error("eigendecomposition failed in Wald statistic");
  }
  const Eigen::VectorXd& lambda = solver.eigenvalues();
  const double cutoff = kRankTolerance * lambda.cwiseAbs().maxCoeff();
  Eigen::VectorXd inv = Eigen::VectorXd::Zero(lambda.size());
  for (Eigen::Index i = 0; i < lambda.size(); ++i) {
    if (std::abs(lambda[i]) > cutoff) {
      inv[i] = 1.0 / lambda[i];
      ++out.rank;
    }
  }
  out.pinv = solver.eigenvectors() * inv.asDiagonal() * solver.eigenvectors().transpose();
  return out;
}

double marginal_p(int rank, double statistic) {
  return rank > 0 ? 1.0 - chi2_cdf(rank, statistic) : 1.0;
}

}  // namespace

WaldResult wald_statistic(const RmtlSummary& summary, const Eigen::MatrixXd& H,
                          const Eigen::VectorXd& c) {
  if (H.cols() != summary.mu_hat.size() || c.size() != H.rows()) {
    throw std::invalid_argument("wald_statistic: dimension mismatch");
  }
  const Eigen::VectorXd diff = H * summary.mu_hat - c;
  if (H.rows() == 1) {
    const double s = (H * summary.sigma_hat.mat() * H.transpose())(0, 0);
    if (s <= 0.0) return {0.0, 0};
    return {summary.n * diff[0] * diff[0] / s, 1};
  }
  const Eigen::MatrixXd s = H * summary.sigma_hat.mat() * H.transpose();
  const PinvRank pr = pinv_and_rank(0.5 * (s + s.transpose()));
  const double statistic = summary.n * diff.dot(pr.pinv * diff);
  return {std::max(0.0, statistic), pr.rank};
}

Interval contrast_interval(const RmtlSummary& summary, const Eigen::MatrixXd& H_row,
                           double critical) {
  if (H_row.rows() != 1 || H_row.cols() != summary.mu_hat.size()) {
    throw std::invalid_argument("contrast_interval: requires a single row of length k*M");
  }
  const double center = (H_row * summary.mu_hat)(0, 0);
  const double variance = (H_row * summary.sigma_hat.mat() * H_row.transpose())(0, 0) / summary.n;
  const double half = std::sqrt(std::max(0.0, variance * critical));
  return {center - half, center + half};
}

GlobalTestResult asymptotic_global_test(const RmtlSummary& summary, const ContrastSpec& spec,
                                        double alpha) {
  check_alpha(alpha);
  const auto wald = wald_statistic(summary, spec.H, spec.c);
  if (wald.rank == 0) {
    throw std::runtime_error(
        "asymptotic_global_test: H Sigma H^T has rank 0, the test is degenerate");
  }
  GlobalTestResult out;
  out.method = "asymptotic";
  out.alpha = alpha;
  out.statistic = wald.statistic;
  out.df = matrix_rank(spec.H);
  out.rank_mismatch = wald.rank != out.df;
  out.critical_value = chi2_quantile(out.df, 1.0 - alpha);
  out.p_value = 1.0 - chi2_cdf(out.df, wald.statistic);
  out.rejected = wald.statistic > out.critical_value;
  return out;
}

namespace detail {

int permutation_quantile_index(int B, double level) {
  const int idx = static_cast<int>(std::ceil((1.0 - level) * (B + 1) - 1e-9));
  return std::min(std::max(idx, 1), B);
}

Eigen::MatrixXd permutation_statistics(const std::vector<GroupSample>& samples, double tau,
                                       const std::vector<Eigen::MatrixXd>& matrices, int B,
                                       std::uint64_t seed, unsigned threads) {
  const int M = samples.front().num_causes;
  std::vector<double> pooled_times;
  std::vector<int> pooled_statuses;
  std::vector<std::size_t> sizes;
  for (const auto& s : samples) {
    s.validate();
    pooled_times.insert(pooled_times.end(), s.times.begin(), s.times.end());
    pooled_statuses.insert(pooled_statuses.end(), s.statuses.begin(), s.statuses.end());
    sizes.push_back(s.times.size());
  }
  const std::size_t n = pooled_times.size();
  const int L = static_cast<int>(matrices.size());

  Eigen::MatrixXd stats(B, L);
  parallel_for(static_cast<std::size_t>(B), threads, [&](std::size_t b) {
    RngStream rng(seed, b);
    std::vector<std::uint32_t> perm(n);
    for (std::size_t i = 0; i < n; ++i) perm[i] = static_cast<std::uint32_t>(i);
    rng.shuffle(perm);

    std::vector<GroupSample> shuffled(samples.size());
    std::size_t offset = 0;
    for (std::size_t g = 0; g < sizes.size(); ++g) {
      auto& grp = shuffled[g];
      grp.num_causes = M;
      grp.times.resize(sizes[g]);
      grp.statuses.resize(sizes[g]);
      for (std::size_t j = 0; j < sizes[g]; ++j) {
        const std::uint32_t src = perm[offset + j];
        grp.times[j] = pooled_times[src];
        grp.statuses[j] = pooled_statuses[src];
      }
      offset += sizes[g];
    }
    const RmtlSummary summary = fit_all(shuffled, tau);
    for (int l = 0; l < L; ++l) {
      const Eigen::VectorXd zeros = Eigen::VectorXd::Zero(matrices[static_cast<std::size_t>(l)].rows());
      stats(static_cast<Eigen::Index>(b), l) =
          wald_statistic(summary, matrices[static_cast<std::size_t>(l)], zeros).statistic;
    }
  });
  return stats;
}

}  // namespace detail

GlobalTestResult permutation_global_test(const std::vector<GroupSample>& samples,
                                         const ContrastSpec& spec, double tau, double alpha,
                                         int B, std::uint64_t seed, unsigned threads) {
  check_alpha(alpha);
  check_replicates(B);
  if (samples.empty()) throw std::invalid_argument("permutation_global_test: no data");

  const RmtlSummary summary = fit_all(samples, tau);
  const auto wald = wald_statistic(summary, spec.H, spec.c);

  const Eigen::MatrixXd stats =
      detail::permutation_statistics(samples, tau, {spec.H}, B, seed, threads);
  std::vector<double> sorted(stats.col(0).data(), stats.col(0).data() + B);
  std::sort(sorted.begin(), sorted.end());
  const int idx = detail::permutation_quantile_index(B, alpha);
  const double quantile = sorted[static_cast<std::size_t>(idx) - 1];

  int count_ge = 0;
  for (double w : sorted) {
    if (w >= wald.statistic) ++count_ge;
  }

  GlobalTestResult out;
  out.method = "permutation";
  out.alpha = alpha;
  out.B_used = B;
  out.statistic = wald.statistic;
  out.df = matrix_rank(spec.H);
  out.rank_mismatch = wald.rank != out.df;
  out.critical_value = quantile;
  out.p_value = static_cast<double>(1 + count_ge) / (B + 1);
  out.rejected = wald.statistic > quantile;
  return out;
}

LocalLevelResult local_level(const RmtlSummary& summary, const ContrastSpec& spec, double alpha,
                             int B, std::uint64_t seed, unsigned threads) {
  check_alpha(alpha);
  check_replicates(B);
  const int L = spec.num_blocks();
  const int dim = static_cast<int>(summary.mu_hat.size());

  const Eigen::MatrixXd sqrt_sigma = psd_sqrt(summary.sigma_hat).mat();

  // Per block: T = |root_l Y|^2 with root_l = (H_l Sigma H_l^T)^{+1/2} H_l Sigma^{1/2}.
  std::vector<Eigen::MatrixXd> roots;
  LocalLevelResult out;
  bool any_nondegenerate = false;
  for (int l = 0; l < L; ++l) {
    const Eigen::MatrixXd h = spec.block(l);
    const Eigen::MatrixXd s = h * summary.sigma_hat.mat() * h.transpose();
    const SymMatrix sym(s);
    const int rank = numeric_rank(sym);
    out.ranks.push_back(rank);
    if (rank > 0) any_nondegenerate = true;
    roots.push_back(psd_sqrt(pseudo_inverse(sym)).mat() * (h * sqrt_sigma));
  }
  if (!any_nondegenerate) {
    throw std::runtime_error("local_level: every block is degenerate (H Sigma H^T rank 0)");
  }

  out.statistics.resize(B, L);
  out.min_pvalues.assign(static_cast<std::size_t>(B), 1.0);
  parallel_for(static_cast<std::size_t>(B), threads, [&](std::size_t b) {
    RngStream rng(seed, b);
    const Eigen::VectorXd y = standard_normal_vector(dim, rng);
    double min_p = 1.0;
    for (int l = 0; l < L; ++l) {
      const double t = (roots[static_cast<std::size_t>(l)] * y).squaredNorm();
      out.statistics(static_cast<Eigen::Index>(b), l) = t;
      min_p = std::min(min_p, marginal_p(out.ranks[static_cast<std::size_t>(l)], t));
    }
    out.min_pvalues[b] = min_p;
  });

  // Largest grid value beta with #(min p < beta) <= floor(alpha B): the
  // (a+1)-th smallest minimum bounds the admissible betas from above.
  const auto a = static_cast<std::size_t>(std::floor(alpha * B + 1e-9));
  std::vector<double> sorted(out.min_pvalues);
  std::sort(sorted.begin(), sorted.end());
  const double bound = sorted[std::min(a, sorted.size() - 1)];
  const double grid_max = static_cast<double>(B - 1) / B;
  out.beta = std::min(std::floor(B * bound) / B, grid_max);
  return out;
}

bool MultipleTestResult::any_rejection() const {
  for (const auto& b : blocks) {
    if (b.rejected) return true;
  }
  return false;
}

MultipleTestResult multiple_asymptotic_test(const RmtlSummary& summary, const ContrastSpec& spec,
                                            double alpha, int B, std::uint64_t seed,
                                            unsigned threads) {
  const LocalLevelResult ll = local_level(summary, spec, alpha, B, seed, threads);
  std::vector<double> sorted_min(ll.min_pvalues);
  std::sort(sorted_min.begin(), sorted_min.end());

  MultipleTestResult out;
  out.method = "multiple";
  out.alpha = alpha;
  out.B_used = B;
  out.local_level_beta = ll.beta;

  const int L = spec.num_blocks();
  for (int l = 0; l < L; ++l) {
    const Eigen::MatrixXd h = spec.block(l);
    const auto wald = wald_statistic(summary, h, spec.block_offset(l));
    BlockTestResult block;
    block.label = spec.labels[static_cast<std::size_t>(l)];
    block.statistic = wald.statistic;
    block.rank = matrix_rank(h);
    block.rank_mismatch = wald.rank != block.rank;
    block.critical_value = ll.beta > 0.0
                               ? chi2_quantile(block.rank, 1.0 - ll.beta)
                               : std::numeric_limits<double>::infinity();
    block.rejected = wald.statistic > block.critical_value;
    block.p_value = marginal_p(block.rank, wald.statistic);
    const auto count =
        std::upper_bound(sorted_min.begin(), sorted_min.end(), block.p_value) - sorted_min.begin();
    block.adjusted_p = static_cast<double>(count) / B;
    if (h.rows() == 1) {
      block.has_interval = true;
      const double crit = ll.beta > 0.0 ? chi2_quantile(1, 1.0 - ll.beta)
                                        : std::numeric_limits<double>::infinity();
      block.interval = contrast_interval(summary, h, crit);
    }
    out.blocks.push_back(std::move(block));
  }
  return out;
}

MultipleTestResult bonferroni_asymptotic_test(const RmtlSummary& summary,
                                              const ContrastSpec& spec, double alpha) {
  check_alpha(alpha);
  const int L = spec.num_blocks();
  const double level = alpha / L;

  MultipleTestResult out;
  out.method = "asymptotic_bonf";
  out.alpha = alpha;
  out.local_level_beta = level;

  for (int l = 0; l < L; ++l) {
    const Eigen::MatrixXd h = spec.block(l);
    const auto wald = wald_statistic(summary, h, spec.block_offset(l));
    BlockTestResult block;
    block.label = spec.labels[static_cast<std::size_t>(l)];
    block.statistic = wald.statistic;
    block.rank = matrix_rank(h);
    block.rank_mismatch = wald.rank != block.rank;
    block.critical_value = chi2_quantile(block.rank, 1.0 - level);
    block.rejected = wald.statistic > block.critical_value;
    block.p_value = marginal_p(block.rank, wald.statistic);
    block.adjusted_p = std::min(1.0, L * block.p_value);
    if (h.rows() == 1) {
      block.has_interval = true;
      block.interval = contrast_interval(summary, h, chi2_quantile(1, 1.0 - level));
    }
    out.blocks.push_back(std::move(block));
  }
  return out;
}

MultipleTestResult bonferroni_permutation_test(const std::vector<GroupSample>& samples,
                                               const ContrastSpec& spec, double tau, double alpha,
                                               int B, std::uint64_t seed, unsigned threads) {
  check_alpha(alpha);
  check_replicates(B);
  const RmtlSummary summary = fit_all(samples, tau);
  const int L = spec.num_blocks();
  const double level = alpha / L;

  std::vector<Eigen::MatrixXd> matrices;
  for (int l = 0; l < L; ++l) matrices.push_back(spec.block(l));
  const Eigen::MatrixXd stats =
      detail::permutation_statistics(samples, tau, matrices, B, seed, threads);
  const int idx = detail::permutation_quantile_index(B, level);

  MultipleTestResult out;
  out.method = "permutation_bonf";
  out.alpha = alpha;
  out.B_used = B;
  out.local_level_beta = level;

  for (int l = 0; l < L; ++l) {
    const auto wald = wald_statistic(summary, matrices[static_cast<std::size_t>(l)],
                                     spec.block_offset(l));
    std::vector<double> sorted(stats.col(l).data(), stats.col(l).data() + B);
    std::sort(sorted.begin(), sorted.end());
    const double quantile = sorted[static_cast<std::size_t>(idx) - 1];
    int count_ge = 0;
    for (double w : sorted) {
      if (w >= wald.statistic) ++count_ge;
    }
    BlockTestResult block;
    block.label = spec.labels[static_cast<std::size_t>(l)];
    block.statistic = wald.statistic;
    block.rank = matrix_rank(matrices[static_cast<std::size_t>(l)]);
    block.rank_mismatch = wald.rank != block.rank;
    block.critical_value = quantile;
    block.rejected = wald.statistic > quantile;
    block.p_value = static_cast<double>(1 + count_ge) / (B + 1);
    block.adjusted_p = std::min(1.0, L * block.p_value);
    if (matrices[static_cast<std::size_t>(l)].rows() == 1) {
      block.has_interval = true;
      block.interval = contrast_interval(summary, matrices[static_cast<std::size_t>(l)], quantile);
    }
    out.blocks.push_back(std::move(block));
  }
  return out;
}

}  // namespace rmtl
