#pragma once

#include <cmath>
#include <stdexcept>

#include "spikefield/rng.hpp"

namespace spikefield {

enum class WeightKind { kConstant, kUniform };

// Synaptic kick distribution. Restricted to bounded-support laws (constant
// and uniform) so the analytic mean and support bound are exact.
class WeightDistribution {
 public:
  static WeightDistribution constant(double w) {
    if (w < 0) throw std::invalid_argument("WeightDistribution: constant weight must be >= 0");
    return WeightDistribution(WeightKind::kConstant, w, w);
  }

  static WeightDistribution uniform(double lo, double hi) {
    if (!(0 <= lo && lo <= hi)) {
      throw std::invalid_argument("WeightDistribution: need 0 <= lo <= hi");
    }
    return WeightDistribution(WeightKind::kUniform, lo, hi);
  }

  WeightKind kind() const { return kind_; }
  double lo() const { return lo_; }
  double hi() const { return hi_; }

  double mean() const { return kind_ == WeightKind::kConstant ? lo_ : 0.5 * (lo_ + hi_); }

  // S_V: maximum of the support.
  double support_bound() const { return hi_; }

  double sample(RngStream& rng) const {
    if (kind_ == WeightKind::kConstant) return lo_;
    return rng.uniform(lo_, hi_);
  }

  // Laplace transform E(exp(-xi W)) at xi >= 0.
  double laplace(double xi) const {
    if (xi < 0) throw std::domain_error("WeightDistribution::laplace: xi must be >= 0");
    if (kind_ == WeightKind::kConstant) return std::exp(-xi * lo_);
    const double width = hi_ - lo_;
    if (xi == 0.0 || width == 0.0) {
      return width == 0.0 ? std::exp(-xi * lo_) : 1.0;
    }
    // exp(-xi lo) (1 - exp(-xi width)) / (xi width), stable for small xi.
    return std::exp(-xi * lo_) * (-std::expm1(-xi * width)) / (xi * width);
  }

 private:
  WeightDistribution(WeightKind kind, double lo, double hi) : kind_(kind), lo_(lo), hi_(hi) {}

  WeightKind kind_;
  double lo_, hi_;
};

}  // namespace spikefield
