#pragma once

#include <vector>

#include <Eigen/Dense>

#include "rmtl/step_function.hpp"
#include "rmtl/sym_matrix.hpp"

namespace rmtl {

/// Right-censored observations of one group.  Status 0 is censoring,
/// statuses 1..num_causes are the competing event types.
struct GroupSample {
  std::vector<double> times;
  std::vector<int> statuses;
  int num_causes = 0;

  /// Throws std::invalid_argument on mismatched lengths, fewer than two
  /// observations, negative times, or statuses outside {0,...,num_causes}.
  void validate() const;
};

/// Distinct ordered observation times with at-risk counts Y(t) and
/// per-cause event counts dN_m(t).
struct RiskTable {
  std::vector<double> distinct_times;
  std::vector<int> at_risk;
  std::vector<int> event_counts;  // row-major, distinct_times.size() x num_causes
  int n = 0;
  int num_causes = 0;

  int events(std::size_t row, int cause) const {
    return event_counts[row * static_cast<std::size_t>(num_causes) + static_cast<std::size_t>(cause - 1)];
  }
  int total_events(std::size_t row) const;
};

/// Flags raised while fitting a group; surfaced in reports because they mark
/// settings where the asymptotic approximations degrade.
struct FitWarnings {
  bool tau_beyond_data = false;        // nobody at risk at tau; curves carried forward
  std::vector<int> zero_event_causes;  // causes with no event in [0, tau]

  bool any() const { return tau_beyond_data || !zero_event_causes.empty(); }
};

/// Per-group estimates: hazards, survival, incidence curves, time lost by
/// cause and the M x M covariance of sqrt(n_i) * mu_hat.
struct GroupFit {
  std::vector<StepFunction> cause_hazards;  // index m-1
  StepFunction total_hazard;
  StepFunction survival;
  std::vector<StepFunction> cifs;
  Eigen::VectorXd rmtl_by_cause;
  SymMatrix covariance;
  double tau = 0.0;
  FitWarnings warnings;
};

/// Stacked estimates over k groups: mu_hat of length k*M ordered group-major
/// (group 1 cause 1..M, then group 2, ...) and the block-diagonal covariance
/// with blocks (n/n_i) * Sigma_i.
struct RmtlSummary {
  Eigen::VectorXd mu_hat;
  SymMatrix sigma_hat;
  std::vector<int> n_per_group;
  int n = 0;
  int k = 0;
  int num_causes = 0;
  double tau = 0.0;
  std::vector<FitWarnings> group_warnings;

  /// Position of (group i, cause m) in mu_hat; group 0-based, cause 1-based.
  int index(int group, int cause) const { return group * num_causes + cause - 1; }

  /// Standard error of mu_hat[index(group, cause)].
  double standard_error(int group, int cause) const;

  bool any_warning() const;
};

RiskTable build_risk_table(const GroupSample& sample);

/// Cause-specific Nelson-Aalen estimator A_m (cause is 1-based).
StepFunction nelson_aalen(const RiskTable& rt, int cause);

/// All-cause Nelson-Aalen estimator.
StepFunction nelson_aalen_all(const RiskTable& rt);

/// Kaplan-Meier survival estimator (product over all causes).
StepFunction kaplan_meier(const RiskTable& rt);

/// Aalen-Johansen cumulative incidence estimator for one cause.
StepFunction aalen_johansen(const RiskTable& rt, int cause);

/// Restricted mean time lost: exact integral of the CIF over [0, tau].
double rmtl_value(const StepFunction& cif, double tau);

/// Covariance matrix of sqrt(n_i) * mu_hat for one group.
///
/// Entry (m, mt) accumulates K_m(u) dSigma(u) K_mt(u)^T over distinct times
/// u <= tau, where dSigma is the multinomial-type covariance increment of
/// the cause-specific Nelson-Aalen estimators,
///   dSigma[m,m]  =  n (1 - dA_m) dA_m / Y,
///   dSigma[m,mt] = -n dA_m dA_mt / Y   (m != mt),
/// and K is the influence kernel of the integrated incidence functions,
///   K[m,m'] = 1{m'=m} (tau-u) S-(u) - g_m(u) / (1 - dA(u)),
///   g_m(u)  = integral_u^tau F_m dt - (tau-u) F_m(u).
/// Times where the whole risk set fails (dA(u) = 1) contribute nothing.
SymMatrix group_covariance(const RiskTable& rt, double tau);

/// Full per-group fit (curves, time lost, covariance, warnings).
GroupFit fit_group(const GroupSample& sample, double tau);

/// Fits every group and stacks the results.
RmtlSummary fit_all(const std::vector<GroupSample>& samples, double tau);

namespace detail {

/// Lean fit used in resampling loops: time lost and covariance only.
struct GroupMoments {
  Eigen::VectorXd mu;     // length M
  Eigen::MatrixXd sigma;  // M x M, symmetric
  FitWarnings warnings;
};

GroupMoments group_moments(const RiskTable& rt, double tau);

}  // namespace detail

}  // namespace rmtl
