#include <doctest.h>

#include <cmath>
#include <limits>
#include <stdexcept>

#include "helpers.hpp"
#include "rmtl/distributions.hpp"
#include "rmtl/inference.hpp"
#include "rmtl/rng.hpp"

using namespace rmtl;
using rmtl::testing::rows_as_blocks;
using rmtl::testing::single_block;
using rmtl::testing::synthetic_summary;

namespace {

Eigen::MatrixXd random_full_rank_psd(int dim, RngStream& rng) {
  Eigen::MatrixXd g(dim, dim);
  for (int i = 0; i < dim; ++i) {
    for (int j = 0; j < dim; ++j) g(i, j) = rng.normal();
  }
  return g * g.transpose() + 0.1 * Eigen::MatrixXd::Identity(dim, dim);
}

Eigen::MatrixXd random_matrix(int rows, int cols, RngStream& rng) {
  Eigen::MatrixXd m(rows, cols);
  for (int i = 0; i < rows; ++i) {
    for (int j = 0; j < cols; ++j) m(i, j) = rng.normal();
  }
  return m;
}

std::vector<GroupSample> two_small_groups() {
  GroupSample a;
  a.times = {1.0, 2.0, 2.0, 3.5, 4.0, 5.0, 6.0, 7.5};
  a.statuses = {1, 0, 2, 1, 2, 0, 1, 2};
  a.num_causes = 2;
  GroupSample b;
  b.times = {0.5, 1.5, 2.0, 3.0, 4.5, 5.5, 6.5, 8.0};
  b.statuses = {2, 1, 1, 0, 2, 1, 0, 1};
  b.num_causes = 2;
  return {a, b};
}

}  // namespace

TEST_CASE("wald statistic") {
  SUBCASE("centered quadratic form is zero") {
    RngStream rng(1, 0);
    const Eigen::MatrixXd sigma = random_full_rank_psd(4, rng);
    Eigen::VectorXd mu(4);
    mu << 0.3, 0.7, 0.1, 0.5;
    const auto summary = synthetic_summary(mu, sigma, 40);
    const Eigen::MatrixXd h = random_matrix(2, 4, rng);
    const auto wald = wald_statistic(summary, h, h * mu);
    CHECK(wald.statistic == doctest::Approx(0.0).epsilon(1e-12));
  }
  SUBCASE("zero covariance gives zero statistic by pseudo-inverse convention") {
    Eigen::VectorXd mu(2);
    mu << 1.0, 2.0;
    const auto summary = synthetic_summary(mu, Eigen::MatrixXd::Zero(2, 2), 10);
    Eigen::MatrixXd h(1, 2);
    h << -1, 1;
    const auto wald = wald_statistic(summary, h, Eigen::VectorXd::Zero(1));
    CHECK(wald.statistic == 0.0);
    CHECK(wald.rank == 0);
  }
  SUBCASE("hand value") {
    Eigen::VectorXd mu(2);
    mu << 1.0, 2.0;
    const auto summary = synthetic_summary(mu, 2.0 * Eigen::MatrixXd::Identity(2, 2), 2);
    Eigen::MatrixXd h(1, 2);
    h << -1, 1;
    const auto wald = wald_statistic(summary, h, Eigen::VectorXd::Zero(1));
    CHECK(wald.statistic == doctest::Approx(0.5).epsilon(1e-14));
    CHECK(wald.rank == 1);
  }
  SUBCASE("dimension mismatch") {
    Eigen::VectorXd mu(2);
    mu << 1.0, 2.0;
    const auto summary = synthetic_summary(mu, Eigen::MatrixXd::Identity(2, 2), 10);
    CHECK_THROWS_AS(wald_statistic(summary, Eigen::MatrixXd::Ones(1, 3), Eigen::VectorXd::Zero(1)),
                    std::invalid_argument);
  }
}

TEST_CASE("wald statistic invariances") {
  RngStream rng(17, 0);
  for (int trial = 0; trial < 100; ++trial) {
    const int dim = 2 + static_cast<int>(rng.below(5));
    const int r = 1 + static_cast<int>(rng.below(static_cast<std::uint64_t>(dim)));
    const Eigen::MatrixXd sigma = random_full_rank_psd(dim, rng);
    Eigen::VectorXd mu(dim);
    for (int i = 0; i < dim; ++i) mu[i] = rng.normal();
    const auto summary = synthetic_summary(mu, sigma, 25);
    const Eigen::MatrixXd h = random_matrix(r, dim, rng);
    Eigen::VectorXd c(r);
    for (int i = 0; i < r; ++i) c[i] = rng.normal();

    const double base = wald_statistic(summary, h, c).statistic;
    const double scale = rng.uniform(0.1, 5.0) * (trial % 2 == 0 ? 1.0 : -1.0);
    const double scaled = wald_statistic(summary, scale * h, scale * c).statistic;
    CHECK(scaled == doctest::Approx(base).epsilon(1e-8));

    Eigen::MatrixXd transform = random_matrix(r, r, rng);
    transform += 3.0 * Eigen::MatrixXd::Identity(r, r);  // keep it invertible
    const double conjugated = wald_statistic(summary, transform * h, transform * c).statistic;
    CHECK(conjugated == doctest::Approx(base).epsilon(1e-8));
  }
}

TEST_CASE("asymptotic global test") {
  Eigen::VectorXd mu(2);
  mu << 1.0, 2.0;
  const auto summary = synthetic_summary(mu, 2.0 * Eigen::MatrixXd::Identity(2, 2), 2);
  Eigen::MatrixXd h(1, 2);
  h << -1, 1;

  SUBCASE("zero statistic is never rejected") {
    const auto result = asymptotic_global_test(summary, single_block(h, h * mu), 0.05);
    CHECK(result.statistic == doctest::Approx(0.0));
    CHECK(result.p_value == doctest::Approx(1.0));
    CHECK_FALSE(result.rejected);
  }
  SUBCASE("threshold semantics") {
    // place H mu - c just over / under the 95% critical value
    const double crit = chi2_quantile(1, 0.95);
    const double variance = (h * summary.sigma_hat.mat() * h.transpose())(0, 0);
    const double just_over = std::sqrt(1.0001 * crit * variance / summary.n);
    const double just_under = std::sqrt(0.9999 * crit * variance / summary.n);
    Eigen::VectorXd c_over(1), c_under(1);
    c_over << (h * mu)(0) - just_over;
    c_under << (h * mu)(0) - just_under;
    CHECK(asymptotic_global_test(summary, single_block(h, c_over), 0.05).rejected);
    CHECK_FALSE(asymptotic_global_test(summary, single_block(h, c_under), 0.05).rejected);
  }
  SUBCASE("degenerate covariance is an error") {
    const auto degenerate = synthetic_summary(mu, Eigen::MatrixXd::Zero(2, 2), 2);
    CHECK_THROWS_AS(asymptotic_global_test(degenerate, single_block(h, Eigen::VectorXd::Zero(1)), 0.05),
                    std::runtime_error);
  }
  SUBCASE("rank mismatch is flagged") {
    Eigen::MatrixXd ones(2, 2);
    ones << 1, 1, 1, 1;
    const auto singular = synthetic_summary(mu, ones, 2);
    Eigen::MatrixXd h2(2, 2);
    h2 << 1, -1, 1, 1;
    const auto result =
        asymptotic_global_test(singular, rows_as_blocks(h2), 0.05);
    CHECK(result.df == 2);
    CHECK(result.rank_mismatch);
  }
}

TEST_CASE("permutation global test") {
  const auto samples = two_small_groups();
  Eigen::MatrixXd h(2, 4);
  h << -1, 0, 1, 0, 0, -1, 0, 1;  // [-1, 1] kron I_2
  const auto spec = single_block(h, Eigen::VectorXd::Zero(2));

  SUBCASE("deterministic for a fixed seed") {
    const auto a = permutation_global_test(samples, spec, 6.0, 0.05, 199, 42);
    const auto b = permutation_global_test(samples, spec, 6.0, 0.05, 199, 42);
    CHECK(a.critical_value == b.critical_value);
    CHECK(a.p_value == b.p_value);
    CHECK(a.statistic == b.statistic);
    const auto c = permutation_global_test(samples, spec, 6.0, 0.05, 199, 43);
    CHECK(a.critical_value != c.critical_value);
  }
  SUBCASE("identical worker counts agree") {
    const auto a = permutation_global_test(samples, spec, 6.0, 0.05, 199, 42, 1);
    const auto b = permutation_global_test(samples, spec, 6.0, 0.05, 199, 42, 4);
    CHECK(a.critical_value == b.critical_value);
    CHECK(a.p_value == b.p_value);
  }
  SUBCASE("all observations identical") {
    GroupSample flat;
    flat.times = {3.0, 3.0, 3.0};
    flat.statuses = {1, 1, 1};
    flat.num_causes = 1;
    Eigen::MatrixXd h1(1, 2);
    h1 << -1, 1;
    const auto result = permutation_global_test({flat, flat}, single_block(h1, Eigen::VectorXd::Zero(1)),
                                                5.0, 0.05, 99, 7);
    CHECK(result.statistic == 0.0);
    CHECK(result.critical_value == 0.0);
    CHECK(result.p_value == doctest::Approx(1.0));
    CHECK_FALSE(result.rejected);
  }
}

TEST_CASE("contrast intervals") {
  Eigen::VectorXd mu(2);
  mu << 1.0, 0.5;
  // blocks scaled by n/n_i = 2: per-group variance 0.1 each, n1 = n2 = 5
  Eigen::MatrixXd sigma = Eigen::MatrixXd::Zero(2, 2);
  sigma(0, 0) = 2.0 * 0.1;
  sigma(1, 1) = 2.0 * 0.1;
  const auto summary = synthetic_summary(mu, sigma, 10, 2);
  Eigen::MatrixXd h(1, 2);
  h << 1, -1;

  SUBCASE("plug-in example") {
    const auto ci = contrast_interval(summary, h, 4.0);
    CHECK(ci.lo == doctest::Approx(0.1).epsilon(1e-12));
    CHECK(ci.hi == doctest::Approx(0.9).epsilon(1e-12));
  }
  SUBCASE("zero quantile degenerates to the point estimate") {
    const auto ci = contrast_interval(summary, h, 0.0);
    CHECK(ci.lo == doctest::Approx(0.5));
    CHECK(ci.hi == doctest::Approx(0.5));
  }
  SUBCASE("zero variance degenerates to the point estimate") {
    const auto flat = synthetic_summary(mu, Eigen::MatrixXd::Zero(2, 2), 10, 2);
    const auto ci = contrast_interval(flat, h, 4.0);
    CHECK(ci.lo == ci.hi);
  }
  SUBCASE("multi-row matrices are rejected") {
    CHECK_THROWS_AS(contrast_interval(summary, Eigen::MatrixXd::Identity(2, 2), 1.0),
                    std::invalid_argument);
  }
}

TEST_CASE("local level calibration") {
  const int B = 20000;
  SUBCASE("single hypothesis recovers alpha") {
    const auto summary =
        synthetic_summary(Eigen::VectorXd::Zero(1), Eigen::MatrixXd::Identity(1, 1), 10);
    const auto result = local_level(summary, rows_as_blocks(Eigen::MatrixXd::Ones(1, 1)), 0.05, B, 5);
    CHECK(std::abs(result.beta - 0.05) < 0.01);
  }
  SUBCASE("independent blocks recover the Sidak level") {
    Eigen::MatrixXd h(2, 2);
    h << 1, 0, 0, 1;
    const auto summary =
        synthetic_summary(Eigen::VectorXd::Zero(2), Eigen::MatrixXd::Identity(2, 2), 10);
    const auto result = local_level(summary, rows_as_blocks(h), 0.05, B, 6);
    CHECK(std::abs(result.beta - (1.0 - std::sqrt(0.95))) < 0.01);
  }
  SUBCASE("duplicated blocks cost nothing") {
    Eigen::MatrixXd two(2, 2), three(3, 2), indep3(3, 3);
    two << 1, 0, 0, 1;
    three << 1, 0, 0, 1, 1, 0;  // block 3 duplicates block 1
    const auto summary2 =
        synthetic_summary(Eigen::VectorXd::Zero(2), Eigen::MatrixXd::Identity(2, 2), 10);
    const auto base = local_level(summary2, rows_as_blocks(two), 0.05, B, 7);
    const auto with_dup = local_level(summary2, rows_as_blocks(three), 0.05, B, 7);
    CHECK(with_dup.beta == base.beta);  // the min over blocks is unchanged

    indep3 << 1, 0, 0, 0, 1, 0, 0, 0, 1;
    const auto summary3 =
        synthetic_summary(Eigen::VectorXd::Zero(3), Eigen::MatrixXd::Identity(3, 3), 10);
    const auto with_indep = local_level(summary3, rows_as_blocks(indep3), 0.05, B, 7);
    CHECK(with_dup.beta >= with_indep.beta);
  }
  SUBCASE("bonferroni lower bound on random instances") {
    RngStream rng(2718, 0);
    const int B_small = 2000;
    const double alpha = 0.05;
    for (int trial = 0; trial < 20; ++trial) {
      const int dim = 2 + static_cast<int>(rng.below(4));
      const int L = 1 + static_cast<int>(rng.below(4));
      const Eigen::MatrixXd sigma = random_full_rank_psd(dim, rng);
      const auto summary = synthetic_summary(Eigen::VectorXd::Zero(dim), sigma, 20);
      const auto spec = rows_as_blocks(random_matrix(L, dim, rng));
      const auto result = local_level(summary, spec, alpha, B_small, 1000 + trial);

      // Bonferroni calibration on the same Monte Carlo draws: the largest
      // grid beta with sum_l #(p_l < beta) <= floor(alpha B).  Since
      // 1{min_l p_l < beta} <= sum_l 1{p_l < beta} pointwise, the min-p
      // level can never fall below it.
      std::vector<double> pooled;
      for (int b = 0; b < B_small; ++b) {
        for (int l = 0; l < L; ++l) {
          const int rank = result.ranks[static_cast<std::size_t>(l)];
          const double t = result.statistics(b, l);
          pooled.push_back(rank > 0 ? 1.0 - chi2_cdf(rank, t) : 1.0);
        }
      }
      std::sort(pooled.begin(), pooled.end());
      const auto budget = static_cast<std::size_t>(std::floor(alpha * B_small));
      const double bound = pooled[std::min(budget, pooled.size() - 1)];
      const double beta_bonf =
          std::min(std::floor(B_small * bound) / B_small, (B_small - 1.0) / B_small);
      CHECK(result.beta >= beta_bonf);
      // and, with sampling slack, the analytic alpha/L bound
      CHECK(result.beta >= alpha / L - 2.0 / B_small - 3.0 * std::sqrt(alpha / B_small));
    }
  }
  SUBCASE("all blocks degenerate is an error") {
    const auto summary =
        synthetic_summary(Eigen::VectorXd::Zero(2), Eigen::MatrixXd::Zero(2, 2), 10);
    Eigen::MatrixXd h(1, 2);
    h << 1, -1;
    CHECK_THROWS_AS(local_level(summary, rows_as_blocks(h), 0.05, 100, 1), std::runtime_error);
  }
}

TEST_CASE("multiple asymptotic test") {
  SUBCASE("all offsets at the estimate: no rejections, adjusted p-values one") {
    RngStream rng(33, 0);
    const Eigen::MatrixXd sigma = random_full_rank_psd(4, rng);
    Eigen::VectorXd mu(4);
    mu << 0.2, 0.4, 0.6, 0.8;
    const auto summary = synthetic_summary(mu, sigma, 30);
    Eigen::MatrixXd h = random_matrix(3, 4, rng);
    ContrastSpec spec = rows_as_blocks(h);
    spec.c = h * mu;
    const auto result = multiple_asymptotic_test(summary, spec, 0.05, 2000, 9);
    for (const auto& block : result.blocks) {
      CHECK_FALSE(block.rejected);
      CHECK(block.statistic == doctest::Approx(0.0).epsilon(1e-10));
      CHECK(block.adjusted_p == doctest::Approx(1.0));
      CHECK(block.p_value == doctest::Approx(1.0));
    }
  }
  SUBCASE("decisions track adjusted p-values") {
    RngStream rng(35, 0);
    const double alpha = 0.05;
    const int B = 2000;
    int checked = 0, consistent = 0;
    for (int trial = 0; trial < 40; ++trial) {
      const int dim = 3 + static_cast<int>(rng.below(4));
      const int L = 2 + static_cast<int>(rng.below(4));
      const Eigen::MatrixXd sigma = random_full_rank_psd(dim, rng);
      Eigen::VectorXd mu(dim);
      for (int i = 0; i < dim; ++i) mu[i] = rng.normal();
      const auto summary = synthetic_summary(mu, sigma, 50);
      const Eigen::MatrixXd h = random_matrix(L, dim, rng);
      ContrastSpec spec = rows_as_blocks(h);
      spec.c = h * mu;
      for (int l = 0; l < L; ++l) spec.c[l] += 0.3 * rng.normal();
      const auto result = multiple_asymptotic_test(summary, spec, alpha, B, 100 + trial);
      for (const auto& block : result.blocks) {
        ++checked;
        if (block.rejected) {
          // rejections always show a small adjusted p-value
          CHECK(block.adjusted_p <= alpha + 1.0 / B);
          if (block.adjusted_p < alpha + 1.0 / B) ++consistent;
        } else {
          if (block.adjusted_p >= alpha - 1.0 / B) ++consistent;
        }
      }
    }
    // the reverse direction can miss by grid quantization; demand 95%
    CHECK(consistent >= static_cast<int>(0.95 * checked));
  }
  SUBCASE("single-row blocks carry simultaneous intervals") {
    RngStream rng(37, 0);
    const Eigen::MatrixXd sigma = random_full_rank_psd(3, rng);
    Eigen::VectorXd mu(3);
    mu << 1.0, 2.0, 3.0;
    const auto summary = synthetic_summary(mu, sigma, 30);
    const Eigen::MatrixXd h = random_matrix(2, 3, rng);
    const auto result = multiple_asymptotic_test(summary, rows_as_blocks(h), 0.05, 2000, 11);
    for (int l = 0; l < 2; ++l) {
      const auto& block = result.blocks[static_cast<std::size_t>(l)];
      REQUIRE(block.has_interval);
      const double center = (h.row(l) * mu)(0);
      CHECK(block.interval.lo <= center);
      CHECK(block.interval.hi >= center);
    }
  }
}

TEST_CASE("bonferroni baselines") {
  SUBCASE("single block matches the global asymptotic test") {
    RngStream rng(51, 0);
    const Eigen::MatrixXd sigma = random_full_rank_psd(3, rng);
    Eigen::VectorXd mu(3);
    mu << 0.5, 1.0, 1.5;
    const auto summary = synthetic_summary(mu, sigma, 30);
    Eigen::MatrixXd h = random_matrix(2, 3, rng);
    Eigen::VectorXd c = h * mu + 0.4 * Eigen::VectorXd::Ones(2);
    const auto spec = single_block(h, c);
    const auto global = asymptotic_global_test(summary, spec, 0.05);
    const auto bonf = bonferroni_asymptotic_test(summary, spec, 0.05);
    REQUIRE(bonf.blocks.size() == 1);
    CHECK(bonf.blocks[0].rejected == global.rejected);
    CHECK(bonf.blocks[0].statistic == doctest::Approx(global.statistic));
    CHECK(bonf.blocks[0].adjusted_p == doctest::Approx(global.p_value));
  }
  SUBCASE("adjusted p-values multiply by the number of blocks") {
    // nine duplicated single-row hypotheses, each with marginal p = 0.02:
    // W = n (mu1 - mu2)^2 / (H Sigma H^T) = 2 d^2 / 4, so d = sqrt(2 W)
    const int L = 9;
    const double target = chi2_quantile(1, 0.98);
    Eigen::VectorXd mu(2);
    const double diff = 0.5 * std::sqrt(2.0 * target);
    mu << diff, -diff;
    const auto summary = synthetic_summary(mu, 2.0 * Eigen::MatrixXd::Identity(2, 2), 2);
    Eigen::MatrixXd h(L, 2);
    for (int l = 0; l < L; ++l) {
      h(l, 0) = 1;
      h(l, 1) = -1;
    }
    const auto result = bonferroni_asymptotic_test(summary, rows_as_blocks(h), 0.05);
    for (const auto& block : result.blocks) {
      CHECK(block.p_value == doctest::Approx(0.02).epsilon(1e-9));
      CHECK(block.adjusted_p == doctest::Approx(0.18).epsilon(1e-9));
    }
  }
  SUBCASE("bonferroni dominates min-p on the same instance") {
    RngStream rng(53, 0);
    int dominated = 0, total = 0;
    for (int trial = 0; trial < 30; ++trial) {
      const int dim = 4;
      const int L = 3;
      const Eigen::MatrixXd sigma = random_full_rank_psd(dim, rng);
      Eigen::VectorXd mu(dim);
      for (int i = 0; i < dim; ++i) mu[i] = rng.normal();
      const auto summary = synthetic_summary(mu, sigma, 50);
      const Eigen::MatrixXd h = random_matrix(L, dim, rng);
      ContrastSpec spec = rows_as_blocks(h);
      spec.c = h * mu + 0.2 * Eigen::VectorXd::Ones(L) * rng.normal();
      const auto minp = multiple_asymptotic_test(summary, spec, 0.05, 4000, 500 + trial);
      const auto bonf = bonferroni_asymptotic_test(summary, spec, 0.05);
      for (int l = 0; l < L; ++l) {
        ++total;
        if (bonf.blocks[static_cast<std::size_t>(l)].adjusted_p >=
            minp.blocks[static_cast<std::size_t>(l)].adjusted_p - 2e-2) {
          ++dominated;
        }
      }
    }
    CHECK(dominated >= static_cast<int>(0.95 * total));
  }
  SUBCASE("permutation variant is deterministic and consistent") {
    const auto samples = two_small_groups();
    Eigen::MatrixXd h(2, 4);
    h << -1, 0, 1, 0, 0, -1, 0, 1;
    const auto spec = rows_as_blocks(h);
    const auto a = bonferroni_permutation_test(samples, spec, 6.0, 0.05, 199, 77);
    const auto b = bonferroni_permutation_test(samples, spec, 6.0, 0.05, 199, 77, 4);
    REQUIRE(a.blocks.size() == 2);
    for (std::size_t l = 0; l < 2; ++l) {
      CHECK(a.blocks[l].p_value == b.blocks[l].p_value);
      CHECK(a.blocks[l].critical_value == b.blocks[l].critical_value);
      CHECK(a.blocks[l].adjusted_p == doctest::Approx(std::min(1.0, 2.0 * a.blocks[l].p_value)));
      CHECK(a.blocks[l].has_interval);
    }
  }
}

TEST_CASE("permutation quantile index convention") {
  // order statistic ceil((1-alpha)(B+1)), capped at B
  CHECK(detail::permutation_quantile_index(499, 0.05) == 475);
  CHECK(detail::permutation_quantile_index(1999, 0.05) == 1900);
  CHECK(detail::permutation_quantile_index(99, 0.05) == 95);
  CHECK(detail::permutation_quantile_index(10, 0.05) == 10);  // capped
  CHECK(detail::permutation_quantile_index(499, 0.05 / 9) == 498);
}
