#pragma once

#include <limits>

namespace spikefield {

// A non-negative extended real: either a finite value or +infinity.
// Quantities like the slope of the rate at zero or the total hazard of a
// decaying neuron legitimately take the value +infinity, so the state is
// carried as an explicit tag rather than a sentinel float.
class ExtReal {
 public:
  static constexpr ExtReal finite(double v) { return ExtReal(v, true); }
  static constexpr ExtReal infinity() { return ExtReal(0.0, false); }

  constexpr bool is_finite() const { return finite_; }
  constexpr bool is_infinite() const { return !finite_; }

  // Finite value; only meaningful when is_finite().
  constexpr double finite_value() const { return value_; }

  // IEEE view: +inf when infinite. Convenient for comparisons.
  constexpr double as_double() const {
    return finite_ ? value_ : std::numeric_limits<double>::infinity();
  }

  friend constexpr bool operator==(const ExtReal& a, const ExtReal& b) {
    return a.as_double() == b.as_double();
  }
  friend constexpr bool operator<(const ExtReal& a, const ExtReal& b) {
    return a.as_double() < b.as_double();
  }
  friend constexpr bool operator<(double a, const ExtReal& b) { return a < b.as_double(); }
  friend constexpr bool operator<(const ExtReal& a, double b) { return a.as_double() < b; }
  friend constexpr bool operator>(double a, const ExtReal& b) { return a > b.as_double(); }
  friend constexpr bool operator>(const ExtReal& a, double b) { return a.as_double() > b; }

 private:
  constexpr ExtReal(double v, bool finite) : value_(v), finite_(finite) {}
  double value_;
  bool finite_;
};

}  // namespace spikefield
