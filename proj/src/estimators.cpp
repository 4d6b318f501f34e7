#include "rmtl/estimators.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <stdexcept>

namespace rmtl {

void GroupSample::validate() const {
  if (times.size() != statuses.size()) {
    throw std::invalid_argument("GroupSample: times and statuses differ in length");
  }
  if (times.size() < 2) {
    throw std::invalid_argument("GroupSample: at least two observations required");
  }
  if (num_causes < 1) {
    throw std::invalid_argument("GroupSample: num_causes must be >= 1");
  }
  for (double t : times) {
    if (!(t >= 0.0) || !std::isfinite(t)) {
      throw std::invalid_argument("GroupSample: times must be finite and nonnegative");
    }
  }
  for (int s : statuses) {
    if (s < 0 || s > num_causes) {
      throw std::invalid_argument("GroupSample: statuses must lie in {0,...,num_causes}");
    }
  }
}

int RiskTable::total_events(std::size_t row) const {
  int total = 0;
  for (int m = 1; m <= num_causes; ++m) total += events(row, m);
  return total;
}

RiskTable build_risk_table(const GroupSample& sample) {
  sample.validate();
  const std::size_t n = sample.times.size();

  std::vector<std::size_t> order(n);
  std::iota(order.begin(), order.end(), 0);
  std::sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) {
    return sample.times[a] < sample.times[b];
  });

  RiskTable rt;
  rt.n = static_cast<int>(n);
  rt.num_causes = sample.num_causes;

  std::size_t i = 0;
  int remaining = rt.n;
  while (i < n) {
    const double t = sample.times[order[i]];
    rt.distinct_times.push_back(t);
    rt.at_risk.push_back(remaining);
    rt.event_counts.insert(rt.event_counts.end(), static_cast<std::size_t>(rt.num_causes), 0);
    auto* counts = &rt.event_counts[rt.event_counts.size() - static_cast<std::size_t>(rt.num_causes)];
    while (i < n && sample.times[order[i]] == t) {
      const int status = sample.statuses[order[i]];
      if (status > 0) ++counts[status - 1];
      --remaining;
      ++i;
    }
  }
  return rt;
}

StepFunction nelson_aalen(const RiskTable& rt, int cause) {
  if (cause < 1 || cause > rt.num_causes) {
    throw std::invalid_argument("nelson_aalen: cause out of range");
  }
  StepFunction a(0.0);
  double cumulative = 0.0;
  for (std::size_t d = 0; d < rt.distinct_times.size(); ++d) {
    const int dn = rt.events(d, cause);
    if (dn > 0) {
      cumulative += static_cast<double>(dn) / rt.at_risk[d];
      a.add_jump(rt.distinct_times[d], cumulative);
    }
  }
  return a;
}

StepFunction nelson_aalen_all(const RiskTable& rt) {
  StepFunction a(0.0);
  double cumulative = 0.0;
  for (std::size_t d = 0; d < rt.distinct_times.size(); ++d) {
    const int dn = rt.total_events(d);
    if (dn > 0) {
      cumulative += static_cast<double>(dn) / rt.at_risk[d];
      a.add_jump(rt.distinct_times[d], cumulative);
    }
  }
  return a;
}

StepFunction kaplan_meier(const RiskTable& rt) {
  StepFunction s(1.0);
  double survival = 1.0;
  for (std::size_t d = 0; d < rt.distinct_times.size(); ++d) {
    const int dn = rt.total_events(d);
    if (dn > 0) {
      survival *= static_cast<double>(rt.at_risk[d] - dn) / rt.at_risk[d];
      s.add_jump(rt.distinct_times[d], survival);
    }
  }
  return s;
}

StepFunction aalen_johansen(const RiskTable& rt, int cause) {
  if (cause < 1 || cause > rt.num_causes) {
    throw std::invalid_argument("aalen_johansen: cause out of range");
  }
  StepFunction f(0.0);
  double survival_before = 1.0;
  double cif = 0.0;
  for (std::size_t d = 0; d < rt.distinct_times.size(); ++d) {
    const int dn_cause = rt.events(d, cause);
    const int dn_total = rt.total_events(d);
    if (dn_cause > 0) {
      cif += survival_before * static_cast<double>(dn_cause) / rt.at_risk[d];
      f.add_jump(rt.distinct_times[d], cif);
    }
    if (dn_total > 0) {
      survival_before *= static_cast<double>(rt.at_risk[d] - dn_total) / rt.at_risk[d];
    }
  }
  return f;
}

double rmtl_value(const StepFunction& cif, double tau) {
  if (!(tau > 0.0)) throw std::domain_error("rmtl_value: tau must be positive");
  return integrate_step(cif, 0.0, tau);
}

namespace detail {

GroupMoments group_moments(const RiskTable& rt, double tau) {
  const int M = rt.num_causes;
  const std::size_t D = rt.distinct_times.size();

  GroupMoments out;
  out.mu = Eigen::VectorXd::Zero(M);
  out.sigma = Eigen::MatrixXd::Zero(M, M);
  out.warnings.tau_beyond_data = D == 0 || rt.distinct_times.back() < tau;

  // Number of distinct times inside [0, tau].
  std::size_t d_tau = 0;
  while (d_tau < D && rt.distinct_times[d_tau] <= tau) ++d_tau;
  if (d_tau == 0) {
    for (int m = 1; m <= M; ++m) out.warnings.zero_event_causes.push_back(m);
    return out;
  }

  // Ascending pass: hazard increments, left-limit survival, CIF values.
  Eigen::MatrixXd hazard_inc(d_tau, M);       // dA_m(u)
  Eigen::VectorXd hazard_inc_all(d_tau);      // dA(u)
  Eigen::VectorXd survival_before(d_tau);     // S-(u)
  Eigen::MatrixXd cif_at(d_tau, M);           // F_m(u), post-jump
  std::vector<int> events_within(M, 0);

  double survival = 1.0;
  Eigen::VectorXd cif = Eigen::VectorXd::Zero(M);
  for (std::size_t d = 0; d < d_tau; ++d) {
    const int y = rt.at_risk[d];
    survival_before[d] = survival;
    int dn_total = 0;
    for (int m = 1; m <= M; ++m) {
      const int dn = rt.events(d, m);
      events_within[m - 1] += dn;
      dn_total += dn;
      const double inc = static_cast<double>(dn) / y;
      hazard_inc(d, m - 1) = inc;
      cif[m - 1] += survival * inc;
      cif_at(d, m - 1) = cif[m - 1];
    }
    hazard_inc_all[d] = static_cast<double>(dn_total) / y;
    survival *= static_cast<double>(y - dn_total) / y;
  }
  for (int m = 1; m <= M; ++m) {
    if (events_within[m - 1] == 0) out.warnings.zero_event_causes.push_back(m);
  }

  // Descending pass: suffix integrals G_m(u) = integral_u^tau F_m dt.
  Eigen::MatrixXd suffix(d_tau, M);
  for (std::size_t r = 0; r < d_tau; ++r) {
    const std::size_t d = d_tau - 1 - r;
    const double upper = (d + 1 < d_tau) ? rt.distinct_times[d + 1] : tau;
    for (int j = 0; j < M; ++j) {
      suffix(d, j) = cif_at(d, j) * (upper - rt.distinct_times[d]);
      if (d + 1 < d_tau) suffix(d, j) += suffix(d + 1, j);
    }
  }
  out.mu = suffix.row(0).transpose();

  // Covariance accumulation: sigma += K dSigma K^T at each time.
  const double n = rt.n;
  Eigen::MatrixXd kernel(M, M);
  Eigen::MatrixXd sigma_inc(M, M);
  for (std::size_t d = 0; d < d_tau; ++d) {
    const int y = rt.at_risk[d];
    const int dn_total_i = [&] {
      int s = 0;
      for (int j = 0; j < M; ++j) s += rt.events(d, j + 1);
      return s;
    }();
    if (dn_total_i == 0) continue;
    if (dn_total_i == y) continue;  // whole risk set fails; increment dropped

    const double u = rt.distinct_times[d];
    const double complement = static_cast<double>(y - dn_total_i) / y;
    const double direct = (tau - u) * survival_before[d];
    for (int m = 0; m < M; ++m) {
      const double g_m = suffix(d, m) - (tau - u) * cif_at(d, m);
      const double indirect = g_m / complement;
      for (int mp = 0; mp < M; ++mp) {
        kernel(m, mp) = (m == mp ? direct : 0.0) - indirect;
      }
    }
    for (int a = 0; a < M; ++a) {
      for (int b = 0; b < M; ++b) {
        if (a == b) {
          sigma_inc(a, a) = n * (1.0 - hazard_inc(d, a)) * hazard_inc(d, a) / y;
        } else {
          sigma_inc(a, b) = -n * hazard_inc(d, a) * hazard_inc(d, b) / y;
        }
      }
    }
    out.sigma += kernel * sigma_inc * kernel.transpose();
  }
  out.sigma = 0.5 * (out.sigma + out.sigma.transpose()).eval();
  return out;
}

}  // namespace detail

SymMatrix group_covariance(const RiskTable& rt, double tau) {
  if (!(tau > 0.0)) throw std::domain_error("group_covariance: tau must be positive");
  return SymMatrix(detail::group_moments(rt, tau).sigma);
}

GroupFit fit_group(const GroupSample& sample, double tau) {
  if (!(tau > 0.0)) throw std::domain_error("fit_group: tau must be positive");
  const RiskTable rt = build_risk_table(sample);
  auto moments = detail::group_moments(rt, tau);

  GroupFit fit;
  fit.tau = tau;
  fit.total_hazard = nelson_aalen_all(rt);
  fit.survival = kaplan_meier(rt);
  for (int m = 1; m <= sample.num_causes; ++m) {
    fit.cause_hazards.push_back(nelson_aalen(rt, m));
    fit.cifs.push_back(aalen_johansen(rt, m));
  }
  fit.rmtl_by_cause = std::move(moments.mu);
  fit.covariance = SymMatrix(moments.sigma);
  fit.warnings = std::move(moments.warnings);
  return fit;
}

double RmtlSummary::standard_error(int group, int cause) const {
  const int idx = index(group, cause);
  return std::sqrt(sigma_hat(idx, idx) / n);
}

bool RmtlSummary::any_warning() const {
  for (const auto& w : group_warnings) {
    if (w.any()) return true;
  }
  return false;
}

RmtlSummary fit_all(const std::vector<GroupSample>& samples, double tau) {
  if (samples.empty()) throw std::invalid_argument("fit_all: at least one group required");
  if (!(tau > 0.0)) throw std::domain_error("fit_all: tau must be positive");
  const int M = samples.front().num_causes;
  for (const auto& s : samples) {
    if (s.num_causes != M) {
      throw std::invalid_argument("fit_all: groups disagree on the number of event types");
    }
  }

  const int k = static_cast<int>(samples.size());
  RmtlSummary summary;
  summary.k = k;
  summary.num_causes = M;
  summary.tau = tau;
  summary.mu_hat = Eigen::VectorXd::Zero(k * M);
  Eigen::MatrixXd sigma = Eigen::MatrixXd::Zero(k * M, k * M);

  for (const auto& s : samples) {
    summary.n_per_group.push_back(static_cast<int>(s.times.size()));
    summary.n += summary.n_per_group.back();
  }
  for (int i = 0; i < k; ++i) {
    const RiskTable rt = build_risk_table(samples[static_cast<std::size_t>(i)]);
    auto moments = detail::group_moments(rt, tau);
    summary.mu_hat.segment(i * M, M) = moments.mu;
    const double scale = static_cast<double>(summary.n) / summary.n_per_group[static_cast<std::size_t>(i)];
    sigma.block(i * M, i * M, M, M) = scale * moments.sigma;
    summary.group_warnings.push_back(std::move(moments.warnings));
  }
  summary.sigma_hat = SymMatrix(sigma);
  return summary;
}

}  // namespace rmtl
