#pragma once

// Right-continuous step functions on the time axis, used for cumulative
// hazards (start at 0, nondecreasing) and survival curves (start at 1,
// nonincreasing). Knots are the jump locations; values[k] is the function
// value on [knots[k], knots[k+1]).

#include <algorithm>
#include <stdexcept>
#include <vector>

namespace survdr {

class StepFunction {
 public:
  StepFunction() = default;
  explicit StepFunction(double constant) : value0_(constant) {}

  StepFunction(std::vector<double> knots, std::vector<double> values, double value_before_first)
      : knots_(std::move(knots)), values_(std::move(values)), value0_(value_before_first) {
    if (knots_.size() != values_.size())
      throw std::invalid_argument("StepFunction: knots/values size mismatch");
    for (std::size_t k = 1; k < knots_.size(); ++k)
      if (!(knots_[k - 1] < knots_[k]))
        throw std::invalid_argument("StepFunction: knots must be strictly increasing");
  }

  // Value at t (right-continuous: jumps are attained at their knot).
  double operator()(double t) const {
    const auto it = std::upper_bound(knots_.begin(), knots_.end(), t);
    if (it == knots_.begin()) return value0_;
    return values_[static_cast<std::size_t>(it - knots_.begin()) - 1];
  }

  // Left limit at t: the value just before t.
  double left_limit(double t) const {
    const auto it = std::lower_bound(knots_.begin(), knots_.end(), t);
    if (it == knots_.begin()) return value0_;
    return values_[static_cast<std::size_t>(it - knots_.begin()) - 1];
  }

  const std::vector<double>& knots() const { return knots_; }
  const std::vector<double>& values() const { return values_; }
  double initial_value() const { return value0_; }

 private:
  std::vector<double> knots_;
  std::vector<double> values_;
  double value0_ = 0.0;
};

// A survival curve is a step function starting at 1; the alias documents
// intent at call sites.
using StepSurvival = StepFunction;

}  // namespace survdr
