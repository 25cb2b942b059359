#pragma once

#include <cmath>
#include <stdexcept>
#include <string>

#include "spikefield/extended.hpp"

namespace spikefield {

enum class RateKind { kConstant, kAffine, kPower };

// Firing intensity b(x) as a closed family of non-decreasing functions on
// [0, inf):
//   constant: b(x) = rate0
//   affine:   b(x) = slope*x + intercept
//   power:    b(x) = coef*x^exponent + intercept   (coef > 0, exponent > 0)
class RateFunction {
 public:
  static RateFunction constant(double rate0) {
    require(rate0 >= 0, "constant rate must be >= 0");
    return RateFunction(RateKind::kConstant, rate0, 0, 0);
  }

  static RateFunction affine(double slope, double intercept = 0.0) {
    require(slope >= 0, "affine slope must be >= 0");
    require(intercept >= 0, "affine intercept must be >= 0");
    return RateFunction(RateKind::kAffine, slope, intercept, 0);
  }

  static RateFunction power(double coef, double exponent, double intercept = 0.0) {
    require(coef > 0, "power coefficient must be > 0");
    require(exponent > 0, "power exponent must be > 0");
    require(intercept >= 0, "power intercept must be >= 0");
    return RateFunction(RateKind::kPower, coef, exponent, intercept);
  }

  RateKind kind() const { return kind_; }

  double operator()(double x) const {
    if (x < 0) throw std::domain_error("rate evaluated at negative potential");
    switch (kind_) {
      case RateKind::kConstant:
        return p1_;
      case RateKind::kAffine:
        return p1_ * x + p2_;
      case RateKind::kPower:
      default:
        return p1_ * std::pow(x, p2_) + p3_;
    }
  }

  double value_at_zero() const {
    switch (kind_) {
      case RateKind::kConstant:
        return p1_;
      case RateKind::kAffine:
        return p2_;
      case RateKind::kPower:
      default:
        return p3_;
    }
  }

  // lim_{x->0} b(x)/x, in [0, +inf].
  ExtReal slope_at_zero() const {
    switch (kind_) {
      case RateKind::kConstant:
        return p1_ > 0 ? ExtReal::infinity() : ExtReal::finite(0.0);
      case RateKind::kAffine:
        return p2_ > 0 ? ExtReal::infinity() : ExtReal::finite(p1_);
      case RateKind::kPower:
      default:
        if (p3_ > 0) return ExtReal::infinity();
        if (p2_ > 1) return ExtReal::finite(0.0);
        if (p2_ == 1) return ExtReal::finite(p1_);
        return ExtReal::infinity();
    }
  }

  // Total hazard of an isolated neuron decaying from x:
  //   int_0^inf b(x e^{-u}) du = int_0^x b(s)/s ds.
  // Finite exactly when the extinction condition holds on [0, x].
  ExtReal hazard_to_zero(double x) const {
    if (x < 0) throw std::domain_error("hazard_to_zero at negative potential");
    if (x == 0) {
      return value_at_zero() > 0 ? ExtReal::infinity() : ExtReal::finite(0.0);
    }
    switch (kind_) {
      case RateKind::kConstant:
        return p1_ > 0 ? ExtReal::infinity() : ExtReal::finite(0.0);
      case RateKind::kAffine:
        return p2_ > 0 ? ExtReal::infinity() : ExtReal::finite(p1_ * x);
      case RateKind::kPower:
      default:
        if (p3_ > 0) return ExtReal::infinity();
        return ExtReal::finite(p1_ * std::pow(x, p2_) / p2_);
    }
  }

  // Parameter accessors; meaning depends on kind().
  double constant_rate() const { return p1_; }
  double slope() const { return p1_; }
  double intercept() const { return kind_ == RateKind::kPower ? p3_ : p2_; }
  double coef() const { return p1_; }
  double exponent() const { return p2_; }

  friend bool operator==(const RateFunction& a, const RateFunction& b) {
    return a.kind_ == b.kind_ && a.p1_ == b.p1_ && a.p2_ == b.p2_ && a.p3_ == b.p3_;
  }

 private:
  RateFunction(RateKind kind, double p1, double p2, double p3)
      : kind_(kind), p1_(p1), p2_(p2), p3_(p3) {}

  static void require(bool ok, const char* msg) {
    if (!ok) throw std::invalid_argument(std::string("RateFunction: ") + msg);
  }

  RateKind kind_;
  double p1_, p2_, p3_;
};

}  // namespace spikefield
