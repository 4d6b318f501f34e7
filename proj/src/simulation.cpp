#include "rmtl/simulation.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <limits>
#include <stdexcept>

#include "rmtl/distributions.hpp"
#include "rmtl/parallel.hpp"

namespace rmtl {

namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();

void require(bool condition, const std::string& message) {
  if (!condition) throw std::invalid_argument(message);
}

}  // namespace

double EventLaw::cumulative_hazard(double t) const {
  if (t <= 0.0) return 0.0;
  double h = 0.0;
  switch (kind) {
    case Kind::Exponential:
      h = rate * t;
      break;
    case Kind::Weibull:
      h = std::pow(t / scale, shape);
      break;
    case Kind::PiecewiseExponential: {
      double prev = 0.0;
      for (std::size_t j = 0; j < rates.size(); ++j) {
        const double upper = j < breakpoints.size() ? breakpoints[j] : kInf;
        if (t <= upper) {
          h += rates[j] * (t - prev);
          break;
        }
        h += rates[j] * (upper - prev);
        prev = upper;
      }
      break;
    }
  }
  return hazard_multiplier * h;
}

double EventLaw::survival(double t) const { return std::exp(-cumulative_hazard(t)); }

double EventLaw::sample(RngStream& rng) const {
  const double target = rng.exponential(1.0) / hazard_multiplier;
  switch (kind) {
    case Kind::Exponential:
      return target / rate;
    case Kind::Weibull:
      return scale * std::pow(target, 1.0 / shape);
    case Kind::PiecewiseExponential: {
      double acc = 0.0;
      double prev = 0.0;
      for (std::size_t j = 0; j < rates.size(); ++j) {
        const double upper = j < breakpoints.size() ? breakpoints[j] : kInf;
        const double segment = rates[j] * (upper - prev);
        // strict inequality skips zero-rate segments; the final rate is
        // positive by validation
        if (j + 1 == rates.size() || target < acc + segment) {
          return prev + (target - acc) / rates[j];
        }
        acc += segment;
        prev = upper;
      }
      return prev;  // unreachable
    }
  }
  return 0.0;
}

double EventLaw::rmst(double tau, bool discrete) const {
  if (!(tau > 0.0)) throw std::domain_error("rmst: tau must be positive");
  if (discrete) {
    // Integral of P(ceil(T) > t) over [0, tau]: survival is constant on
    // each unit interval, so sum over the integer grid.
    double total = 0.0;
    const double whole = std::floor(tau);
    for (double j = 0.0; j < whole; j += 1.0) total += survival(j);
    total += (tau - whole) * survival(whole);
    return total;
  }
  switch (kind) {
    case Kind::Exponential: {
      const double r = hazard_multiplier * rate;
      return (1.0 - std::exp(-r * tau)) / r;
    }
    case Kind::Weibull: {
      // S(t) = exp(-m (t/s)^k) is Weibull with scale s * m^(-1/k); the
      // integral reduces to a regularized lower incomplete gamma.
      const double s_eff = scale * std::pow(hazard_multiplier, -1.0 / shape);
      const double x = std::pow(tau / s_eff, shape);
      const double inv_shape = 1.0 / shape;
      return s_eff * inv_shape * std::exp(std::lgamma(inv_shape)) * gamma_p(inv_shape, x);
    }
    case Kind::PiecewiseExponential: {
      double total = 0.0;
      double prev = 0.0;
      double surv = 1.0;
      for (std::size_t j = 0; j < rates.size() && prev < tau; ++j) {
        const double upper = std::min(j < breakpoints.size() ? breakpoints[j] : kInf, tau);
        const double r = hazard_multiplier * rates[j];
        const double len = upper - prev;
        if (r > 0.0) {
          total += surv * (1.0 - std::exp(-r * len)) / r;
          surv *= std::exp(-r * len);
        } else {
          total += surv * len;
        }
        prev = upper;
      }
      return total;
    }
  }
  return 0.0;
}

EventLaw EventLaw::tilted(double multiplier) const {
  EventLaw out = *this;
  out.hazard_multiplier *= multiplier;
  return out;
}

void EventLaw::validate(const std::string& path) const {
  require(hazard_multiplier > 0.0, path + ".hazard_multiplier: must be > 0");
  switch (kind) {
    case Kind::Exponential:
      require(rate > 0.0, path + ".rate: must be > 0");
      break;
    case Kind::Weibull:
      require(shape > 0.0, path + ".shape: must be > 0");
      require(scale > 0.0, path + ".scale: must be > 0");
      break;
    case Kind::PiecewiseExponential: {
      require(!rates.empty(), path + ".rates: must be nonempty");
      require(rates.size() == breakpoints.size() + 1,
              path + ".rates: need breakpoints.size() + 1 rates");
      double prev = 0.0;
      for (std::size_t j = 0; j < breakpoints.size(); ++j) {
        require(breakpoints[j] > prev, path + ".breakpoints[" + std::to_string(j) +
                                           "]: must be positive and increasing");
        prev = breakpoints[j];
      }
      for (std::size_t j = 0; j < rates.size(); ++j) {
        require(rates[j] >= 0.0, path + ".rates[" + std::to_string(j) + "]: must be >= 0");
      }
      require(rates.back() > 0.0, path + ".rates: final rate must be > 0");
      break;
    }
  }
}

double CensoringLaw::sample(RngStream& rng) const {
  switch (kind) {
    case Kind::None:
      return kInf;
    case Kind::Exponential:
      return rng.exponential(rate);
    case Kind::Uniform:
      return rng.uniform(lower, upper);
    case Kind::Weibull:
      return scale * std::pow(rng.exponential(1.0), 1.0 / shape);
  }
  return kInf;
}

void CensoringLaw::validate(const std::string& path) const {
  switch (kind) {
    case Kind::None:
      break;
    case Kind::Exponential:
      require(rate > 0.0, path + ".rate: must be > 0");
      break;
    case Kind::Uniform:
      require(upper > lower && lower >= 0.0, path + ": requires 0 <= lower < upper");
      break;
    case Kind::Weibull:
      require(shape > 0.0, path + ".shape: must be > 0");
      require(scale > 0.0, path + ".scale: must be > 0");
      break;
  }
}

void ScenarioConfig::validate() const {
  require(k >= 1, "k: must be >= 1");
  require(num_causes >= 1, "M: must be >= 1");
  require(static_cast<int>(cause_probabilities.size()) == num_causes,
          "cause_probabilities: need exactly M entries");
  double total = 0.0;
  for (std::size_t m = 0; m < cause_probabilities.size(); ++m) {
    require(cause_probabilities[m] > 0.0,
            "cause_probabilities[" + std::to_string(m) + "]: must be > 0");
    total += cause_probabilities[m];
  }
  require(std::abs(total - 1.0) <= 1e-9, "cause_probabilities: must sum to 1");
  require(static_cast<int>(sample_sizes.size()) == k, "sample_sizes: need exactly k entries");
  for (std::size_t i = 0; i < sample_sizes.size(); ++i) {
    require(sample_sizes[i] >= 2, "sample_sizes[" + std::to_string(i) + "]: must be >= 2");
  }
  require(tau > 0.0, "tau: must be > 0");
  require(alpha > 0.0 && alpha < 1.0, "alpha: must lie in (0, 1)");
  require(B >= 1, "B: must be >= 1");
  require(replications >= 1, "replications: must be >= 1");
  require(band_coverage > 0.0 && band_coverage < 1.0, "band_coverage: must lie in (0, 1)");
  require(!event_laws.empty() &&
              (event_laws.size() == 1 || static_cast<int>(event_laws.size()) == k),
          "event_laws: need one shared law or one per group");
  require(!censoring_laws.empty() &&
              (censoring_laws.size() == 1 || static_cast<int>(censoring_laws.size()) == k),
          "censoring_laws: need one shared law or one per group");
  for (std::size_t i = 0; i < event_laws.size(); ++i) {
    event_laws[i].validate("event_laws[" + std::to_string(i) + "]");
  }
  for (std::size_t i = 0; i < censoring_laws.size(); ++i) {
    censoring_laws[i].validate("censoring_laws[" + std::to_string(i) + "]");
  }
  for (const auto& m : methods) {
    require(m == "asymptotic" || m == "asymptotic_bonf" || m == "permutation_bonf",
            "methods: unknown method '" + m + "'");
  }
  require(contrast == "dunnett" || contrast == "tukey" || contrast == "2x2",
          "contrast: must be dunnett, tukey or 2x2");
  require(mode == "per_event" || mode == "all_events", "mode: must be per_event or all_events");
  if (contrast == "2x2") require(k == 4, "contrast: 2x2 requires k = 4");
  if (delta != 0.0) require(k >= 2, "delta: a shift needs at least two groups");
}

double calibrate_hazard_multiplier(const EventLaw& law, double target, double tau, bool discrete) {
  const double floor_value = discrete ? std::min(1.0, tau) : 0.0;
  if (!(target > floor_value) || !(target < tau)) {
    throw std::invalid_argument("delta: target restricted mean survival " +
                                std::to_string(target) + " is not attainable on [0, tau]");
  }
  double lo = 1.0, hi = 1.0;
  while (law.tilted(lo).rmst(tau, discrete) < target) lo *= 0.5;  // weaker hazard raises rmst
  while (law.tilted(hi).rmst(tau, discrete) > target) hi *= 2.0;
  for (int i = 0; i < 200; ++i) {
    const double mid = 0.5 * (lo + hi);
    if (law.tilted(mid).rmst(tau, discrete) > target) {
      lo = mid;
    } else {
      hi = mid;
    }
    if (hi - lo <= 1e-14 * hi) break;
  }
  return 0.5 * (lo + hi);
}

CompiledScenario compile_scenario(const ScenarioConfig& cfg) {
  cfg.validate();
  CompiledScenario out;
  out.config = cfg;
  for (int i = 0; i < cfg.k; ++i) {
    out.event_laws.push_back(cfg.event_laws.size() == 1
                                 ? cfg.event_laws.front()
                                 : cfg.event_laws[static_cast<std::size_t>(i)]);
    out.censoring_laws.push_back(cfg.censoring_laws.size() == 1
                                     ? cfg.censoring_laws.front()
                                     : cfg.censoring_laws[static_cast<std::size_t>(i)]);
  }
  if (cfg.delta != 0.0) {
    const double reference = out.event_laws.front().rmst(cfg.tau, cfg.discrete_rounding);
    const double multiplier = calibrate_hazard_multiplier(
        out.event_laws.back(), reference - cfg.delta, cfg.tau, cfg.discrete_rounding);
    out.event_laws.back() = out.event_laws.back().tilted(multiplier);
  }
  out.mu_targets = Eigen::VectorXd::Zero(cfg.k * cfg.num_causes);
  for (int i = 0; i < cfg.k; ++i) {
    const double rmst_i =
        out.event_laws[static_cast<std::size_t>(i)].rmst(cfg.tau, cfg.discrete_rounding);
    out.rmst_targets.push_back(rmst_i);
    for (int m = 0; m < cfg.num_causes; ++m) {
      out.mu_targets[i * cfg.num_causes + m] =
          cfg.cause_probabilities[static_cast<std::size_t>(m)] * (cfg.tau - rmst_i);
    }
  }
  return out;
}

std::vector<GroupSample> generate_dataset(const CompiledScenario& scenario, RngStream& rng) {
  const auto& cfg = scenario.config;
  std::vector<GroupSample> samples;
  samples.reserve(static_cast<std::size_t>(cfg.k));
  for (int i = 0; i < cfg.k; ++i) {
    GroupSample group;
    group.num_causes = cfg.num_causes;
    const int n_i = cfg.sample_sizes[static_cast<std::size_t>(i)];
    group.times.reserve(static_cast<std::size_t>(n_i));
    group.statuses.reserve(static_cast<std::size_t>(n_i));
    for (int j = 0; j < n_i; ++j) {
      double event_time = scenario.event_laws[static_cast<std::size_t>(i)].sample(rng);
      if (cfg.discrete_rounding) event_time = std::ceil(event_time);
      const double censor_time = scenario.censoring_laws[static_cast<std::size_t>(i)].sample(rng);
      const double u = rng.uniform01();
      int cause = cfg.num_causes;
      double acc = 0.0;
      for (int m = 0; m < cfg.num_causes; ++m) {
        acc += cfg.cause_probabilities[static_cast<std::size_t>(m)];
        if (u < acc) {
          cause = m + 1;
          break;
        }
      }
      if (event_time <= censor_time) {
        group.times.push_back(event_time);
        group.statuses.push_back(cause);
      } else {
        group.times.push_back(censor_time);
        group.statuses.push_back(0);
      }
    }
    samples.push_back(std::move(group));
  }
  return samples;
}

std::vector<GroupSample> generate_dataset(const ScenarioConfig& cfg, RngStream& rng) {
  return generate_dataset(compile_scenario(cfg), rng);
}

Interval binomial_band(double level, int replications, double coverage) {
  if (replications < 1) throw std::invalid_argument("binomial_band: replications must be >= 1");
  const double z = normal_quantile(0.5 * (1.0 + coverage));
  const double half = z * std::sqrt(level * (1.0 - level) / replications);
  return {std::max(0.0, level - half), std::min(1.0, level + half)};
}

ContrastSpec study_contrast(const ScenarioConfig& cfg) {
  Eigen::MatrixXd group_matrix;
  std::vector<std::string> labels;
  if (cfg.contrast == "dunnett") {
    group_matrix = dunnett(cfg.k);
    for (int i = 2; i <= cfg.k; ++i) labels.push_back("g" + std::to_string(i) + "-g1");
  } else if (cfg.contrast == "tukey") {
    group_matrix = tukey(cfg.k);
    for (int i = 1; i < cfg.k; ++i) {
      for (int j = i + 1; j <= cfg.k; ++j) {
        labels.push_back("g" + std::to_string(j) + "-g" + std::to_string(i));
      }
    }
  } else {
    group_matrix = factorial_2x2();
    labels = factorial_2x2_labels();
  }
  const ExpandMode mode =
      cfg.mode == "per_event" ? ExpandMode::PerEvent : ExpandMode::AllEvents;
  ContrastSpec spec = expand(group_matrix, cfg.num_causes, mode, {}, labels);
  require_valid(spec, cfg.k, cfg.num_causes);
  return spec;
}

StudyReport run_study(const ScenarioConfig& cfg) {
  const auto started = std::chrono::steady_clock::now();
  const CompiledScenario scenario = compile_scenario(cfg);
  const ContrastSpec spec = study_contrast(cfg);
  const int L = spec.num_blocks();
  const auto R = static_cast<std::size_t>(cfg.replications);
  const std::size_t n_methods = cfg.methods.size();

  // decisions[m][r*L + l] = 1 when method m rejects block l in replication r.
  std::vector<std::vector<std::uint8_t>> decisions(
      n_methods, std::vector<std::uint8_t>(R * static_cast<std::size_t>(L), 0));

  parallel_for(R, cfg.threads, [&](std::size_t rep) {
    try {
      const std::uint64_t rep_seed = RngStream::derive_seed(cfg.master_seed, rep);
      RngStream data_rng(rep_seed, 0);
      const auto data = generate_dataset(scenario, data_rng);
      const RmtlSummary summary = fit_all(data, cfg.tau);
      for (std::size_t m = 0; m < n_methods; ++m) {
        const std::uint64_t method_seed = RngStream::derive_seed(rep_seed, 1 + m);
        MultipleTestResult result;
        if (cfg.methods[m] == "asymptotic") {
          result = multiple_asymptotic_test(summary, spec, cfg.alpha, cfg.B, method_seed, 1);
        } else if (cfg.methods[m] == "asymptotic_bonf") {
          result = bonferroni_asymptotic_test(summary, spec, cfg.alpha);
        } else {
          result = bonferroni_permutation_test(data, spec, cfg.tau, cfg.alpha, cfg.B,
                                               method_seed, 1);
        }
        for (int l = 0; l < L; ++l) {
          decisions[m][rep * static_cast<std::size_t>(L) + static_cast<std::size_t>(l)] =
              result.blocks[static_cast<std::size_t>(l)].rejected ? 1 : 0;
        }
      }
    } catch (const std::exception& e) {
      throw std::runtime_error("replication " + std::to_string(rep + 1) + " failed: " + e.what());
    }
  });

  StudyReport report;
  report.config = cfg;
  report.block_labels = spec.labels;
  report.replications = cfg.replications;
  report.alpha = cfg.alpha;
  report.band = binomial_band(cfg.alpha, cfg.replications, cfg.band_coverage);
  report.band_coverage = cfg.band_coverage;
  for (std::size_t m = 0; m < n_methods; ++m) {
    MethodStudyResult method;
    method.method = cfg.methods[m];
    method.block_rates.assign(static_cast<std::size_t>(L), 0.0);
    std::size_t any_count = 0;
    for (std::size_t rep = 0; rep < R; ++rep) {
      bool any = false;
      for (int l = 0; l < L; ++l) {
        if (decisions[m][rep * static_cast<std::size_t>(L) + static_cast<std::size_t>(l)]) {
          method.block_rates[static_cast<std::size_t>(l)] += 1.0;
          any = true;
        }
      }
      if (any) ++any_count;
    }
    for (auto& rate : method.block_rates) rate /= static_cast<double>(R);
    method.global_rate = static_cast<double>(any_count) / static_cast<double>(R);
    report.methods.push_back(std::move(method));
  }
  report.runtime_seconds =
      std::chrono::duration<double>(std::chrono::steady_clock::now() - started).count();
  return report;
}

ScenarioConfig preset_scenario(const std::string& name) {
  ScenarioConfig cfg;
  cfg.k = 4;
  cfg.num_causes = 3;
  cfg.cause_probabilities = {0.33, 0.25, 0.42};
  EventLaw events;
  events.kind = EventLaw::Kind::Exponential;
  events.rate = 0.2;
  cfg.event_laws = {events};
  CensoringLaw censoring;
  censoring.kind = CensoringLaw::Kind::Uniform;
  censoring.lower = 0.0;
  censoring.upper = 25.0;
  cfg.censoring_laws = {censoring};
  cfg.tau = 10.0;
  cfg.alpha = 0.05;
  cfg.B = 1999;
  cfg.replications = 1000;
  cfg.master_seed = 20240501;
  cfg.contrast = "2x2";
  cfg.mode = "per_event";

  if (name == "balanced_null") {
    cfg.sample_sizes = {60, 60, 60, 60};
  } else if (name == "balanced_alt") {
    cfg.sample_sizes = {60, 60, 60, 60};
    cfg.delta = 1.5;
  } else if (name == "unbalanced_null") {
    cfg.sample_sizes = {128, 44, 52, 16};
  } else if (name == "unbalanced_alt") {
    cfg.sample_sizes = {128, 44, 52, 16};
    cfg.delta = 1.5;
  } else if (name == "discrete_null") {
    cfg.sample_sizes = {60, 60, 60, 60};
    cfg.discrete_rounding = true;
  } else {
    throw std::invalid_argument("unknown preset '" + name + "'");
  }
  return cfg;
}

std::vector<std::string> preset_names() {
  return {"balanced_null", "balanced_alt", "unbalanced_null", "unbalanced_alt", "discrete_null"};
}

}  // namespace rmtl
