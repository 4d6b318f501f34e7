#include "rmtl/step_function.hpp"

#include <algorithm>
#include <stdexcept>

namespace rmtl {

StepFunction::StepFunction(double initial_value, std::vector<double> jump_times,
                           std::vector<double> post_jump_values)
    : initial_(initial_value),
      times_(std::move(jump_times)),
      values_(std::move(post_jump_values)) {
  if (times_.size() != values_.size()) {
    throw std::invalid_argument("StepFunction: jump_times and post_jump_values differ in length");
  }
  double prev = -1.0;
  for (double t : times_) {
    if (!(t >= 0.0) || t <= prev) {
      throw std::invalid_argument("StepFunction: jump times must be nonnegative and strictly increasing");
    }
    prev = t;
  }
}

void StepFunction::add_jump(double t, double value_after) {
  if (!(t >= 0.0) || (!times_.empty() && t <= times_.back())) {
    throw std::invalid_argument("StepFunction::add_jump: time must exceed the last jump time");
  }
  times_.push_back(t);
  values_.push_back(value_after);
}

double StepFunction::operator()(double t) const {
  // index of the last jump time <= t
  auto it = std::upper_bound(times_.begin(), times_.end(), t);
  if (it == times_.begin()) return initial_;
  return values_[static_cast<std::size_t>(it - times_.begin()) - 1];
}

double StepFunction::value_before(double t) const {
  // index of the last jump time < t
  auto it = std::lower_bound(times_.begin(), times_.end(), t);
  if (it == times_.begin()) return initial_;
  return values_[static_cast<std::size_t>(it - times_.begin()) - 1];
}

double StepFunction::integrate(double a, double b) const {
  if (!(a >= 0.0) || !(b >= a)) {
    throw std::domain_error("StepFunction::integrate: requires 0 <= a <= b");
  }
  if (a == b) return 0.0;

  double total = 0.0;
  double cursor = a;
  double current = (*this)(a);
  auto it = std::upper_bound(times_.begin(), times_.end(), a);
  for (; it != times_.end() && *it < b; ++it) {
    total += current * (*it - cursor);
    cursor = *it;
    current = values_[static_cast<std::size_t>(it - times_.begin())];
  }
  total += current * (b - cursor);
  return total;
}

}  // namespace rmtl
