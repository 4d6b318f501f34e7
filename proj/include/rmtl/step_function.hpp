#pragma once

#include <vector>

namespace rmtl {

/// Right-continuous piecewise-constant function on [0, inf).
///
/// The function equals `initial_value` before the first jump time and
/// `post_jump_values[i]` on [jump_times[i], jump_times[i+1]).  Jump times
/// are strictly increasing and nonnegative.  Survival curves, cumulative
/// hazards and cumulative incidence functions are all stored this way.
class StepFunction {
 public:
  StepFunction() = default;
  explicit StepFunction(double initial_value) : initial_(initial_value) {}
  StepFunction(double initial_value, std::vector<double> jump_times,
               std::vector<double> post_jump_values);

  static StepFunction constant(double value) { return StepFunction(value); }

  /// Appends a jump at `t`; requires t >= 0 and t greater than the last jump.
  void add_jump(double t, double value_after);

  /// Value at t (right-continuous).
  double operator()(double t) const;

  /// Left limit: value just before t.
  double value_before(double t) const;

  /// Exact integral over [a, b]; throws std::domain_error unless 0 <= a <= b.
  double integrate(double a, double b) const;

  double initial_value() const { return initial_; }
  const std::vector<double>& jump_times() const { return times_; }
  const std::vector<double>& post_jump_values() const { return values_; }
  std::size_t num_jumps() const { return times_.size(); }

 private:
  double initial_ = 0.0;
  std::vector<double> times_;
  std::vector<double> values_;
};

/// Exact Riemann integral of a step function over [a, b].
inline double integrate_step(const StepFunction& f, double a, double b) {
  return f.integrate(a, b);
}

}  // namespace rmtl
