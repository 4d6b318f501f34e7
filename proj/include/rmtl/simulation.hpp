#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "rmtl/estimators.hpp"
#include "rmtl/inference.hpp"
#include "rmtl/rng.hpp"

namespace rmtl {

/// Event-time distribution; `hazard_multiplier` applies a proportional
/// hazards tilt S(t) -> S(t)^multiplier (used by the delta calibration).
struct EventLaw {
  enum class Kind { Exponential, Weibull, PiecewiseExponential };
  Kind kind = Kind::Exponential;
  double rate = 1.0;                // exponential
  double shape = 1.0;               // weibull
  double scale = 1.0;               // weibull
  std::vector<double> breakpoints;  // piecewise-exponential
  std::vector<double> rates;        // rates.size() == breakpoints.size() + 1
  double hazard_multiplier = 1.0;

  double sample(RngStream& rng) const;
  double cumulative_hazard(double t) const;
  double survival(double t) const;

  /// Restricted mean survival time on [0, tau], in closed form.  With
  /// `discrete` the law of ceil(T) is integrated by summing the survival
  /// function over the integer grid.
  double rmst(double tau, bool discrete) const;

  EventLaw tilted(double multiplier) const;
  void validate(const std::string& path) const;
};

struct CensoringLaw {
  enum class Kind { None, Exponential, Uniform, Weibull };
  Kind kind = Kind::None;
  double rate = 1.0;
  double lower = 0.0;
  double upper = 1.0;
  double shape = 1.0;
  double scale = 1.0;

  /// Censoring time; +infinity when kind is None.
  double sample(RngStream& rng) const;
  void validate(const std::string& path) const;
};

/// Declarative description of one simulation scenario.
struct ScenarioConfig {
  int k = 4;
  int num_causes = 3;
  std::vector<EventLaw> event_laws;          // one shared law or one per group
  std::vector<CensoringLaw> censoring_laws;  // one shared law or one per group
  std::vector<double> cause_probabilities;
  double delta = 0.0;  // restricted-mean-survival-time shift for the last group
  std::vector<int> sample_sizes;
  double tau = 10.0;
  bool discrete_rounding = false;
  double alpha = 0.05;
  int B = 1999;
  int replications = 1000;
  std::uint64_t master_seed = 1;
  std::vector<std::string> methods = {"asymptotic", "asymptotic_bonf", "permutation_bonf"};
  std::string contrast = "2x2";  // dunnett | tukey | 2x2
  std::string mode = "per_event";  // per_event | all_events
  double band_coverage = 0.99;
  unsigned threads = 0;

  /// Throws std::invalid_argument naming the offending field.
  void validate() const;
};

/// Scenario with per-group laws resolved and the delta shift calibrated
/// into the last group's hazard multiplier, plus the analytic targets the
/// generator is guaranteed to hit.
struct CompiledScenario {
  ScenarioConfig config;
  std::vector<EventLaw> event_laws;          // size k
  std::vector<CensoringLaw> censoring_laws;  // size k
  std::vector<double> rmst_targets;          // restricted mean survival per group
  Eigen::VectorXd mu_targets;                // RMTL targets, group-major (k*M)
};

CompiledScenario compile_scenario(const ScenarioConfig& cfg);

/// Hazard multiplier for `law` so that its restricted mean survival time on
/// [0, tau] equals `target`; bisection on the proportional tilt.
double calibrate_hazard_multiplier(const EventLaw& law, double target, double tau, bool discrete);

/// Draws one dataset: event time from the group law (rounded up to an
/// integer under discrete_rounding), cause from the multinomial independent
/// of everything else, censoring from the censoring law.
std::vector<GroupSample> generate_dataset(const CompiledScenario& scenario, RngStream& rng);
std::vector<GroupSample> generate_dataset(const ScenarioConfig& cfg, RngStream& rng);

/// Normal-approximation acceptance band: level +/- z * sqrt(level(1-level)/R)
/// with z the two-sided `coverage` quantile.
Interval binomial_band(double level, int replications, double coverage);

struct MethodStudyResult {
  std::string method;
  double global_rate = 0.0;  // share of replications with at least one rejection
  std::vector<double> block_rates;
};

struct StudyReport {
  std::vector<MethodStudyResult> methods;
  std::vector<std::string> block_labels;
  int replications = 0;
  double alpha = 0.0;
  Interval band;
  double band_coverage = 0.0;
  double runtime_seconds = 0.0;  // informational; kept out of serialized reports
  ScenarioConfig config;
};

/// Contrast specification used by the study for the given config.
ContrastSpec study_contrast(const ScenarioConfig& cfg);

/// Runs the scenario: per replication generates a dataset, applies every
/// configured method and records global and per-hypothesis rejections.
StudyReport run_study(const ScenarioConfig& cfg);

/// Named scenario presets (proportional exponential settings at desk scale);
/// see preset_names() for the list.
ScenarioConfig preset_scenario(const std::string& name);
std::vector<std::string> preset_names();

}  // namespace rmtl
