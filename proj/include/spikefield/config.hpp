#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <stdexcept>
#include <string>
#include <vector>

#include "spikefield/rate.hpp"
#include "spikefield/rng.hpp"
#include "spikefield/weights.hpp"

namespace spikefield {

// Raw: kicks are drawn weights as-is. MeanField: each sampled kick is
// divided by N, i.e. W_ij = V_ij / N.
enum class Scaling { kRaw, kMeanField };

enum class InitKind { kDirac, kUniform, kUniformAround, kExplicit };

// Initial law of the potentials. All generated values are >= 0; the
// uniform-around variant is Uniform(v0 - std*sqrt(3), v0 + std*sqrt(3))
// clipped at 0, a uniform law with the requested standard deviation.
class InitialCondition {
 public:
  static InitialCondition dirac(double x) {
    if (x < 0) throw std::invalid_argument("InitialCondition: dirac point must be >= 0");
    InitialCondition ic(InitKind::kDirac);
    ic.a_ = x;
    return ic;
  }

  static InitialCondition uniform(double lo, double hi) {
    if (!(0 <= lo && lo <= hi)) throw std::invalid_argument("InitialCondition: need 0 <= lo <= hi");
    InitialCondition ic(InitKind::kUniform);
    ic.a_ = lo;
    ic.b_ = hi;
    return ic;
  }

  static InitialCondition uniform_around(double center, double stddev) {
    if (center < 0 || stddev < 0) {
      throw std::invalid_argument("InitialCondition: uniform_around needs center, std >= 0");
    }
    InitialCondition ic(InitKind::kUniformAround);
    ic.a_ = center;
    ic.b_ = stddev;
    return ic;
  }

  static InitialCondition explicit_values(std::vector<double> xs) {
    for (double x : xs) {
      if (x < 0) throw std::invalid_argument("InitialCondition: explicit potentials must be >= 0");
    }
    InitialCondition ic(InitKind::kExplicit);
    ic.values_ = std::move(xs);
    return ic;
  }

  InitKind kind() const { return kind_; }
  double param_a() const { return a_; }
  double param_b() const { return b_; }
  const std::vector<double>& values() const { return values_; }

  std::vector<double> sample(std::size_t n, RngStream& rng) const {
    std::vector<double> out(n);
    switch (kind_) {
      case InitKind::kDirac:
        std::fill(out.begin(), out.end(), a_);
        break;
      case InitKind::kUniform:
        for (auto& x : out) x = rng.uniform(a_, b_);
        break;
      case InitKind::kUniformAround: {
        const double half = b_ * std::sqrt(3.0);
        for (auto& x : out) x = std::max(0.0, rng.uniform(a_ - half, a_ + half));
        break;
      }
      case InitKind::kExplicit:
        if (values_.size() != n) {
          throw std::invalid_argument("InitialCondition: explicit vector size != N");
        }
        out = values_;
        break;
    }
    return out;
  }

 private:
  explicit InitialCondition(InitKind kind) : kind_(kind) {}

  InitKind kind_;
  double a_ = 0, b_ = 0;
  std::vector<double> values_;
};

struct NetworkConfig {
  std::size_t n = 1;
  RateFunction rate = RateFunction::affine(1.0);
  WeightDistribution weights = WeightDistribution::constant(1.0);
  Scaling scaling = Scaling::kRaw;
  std::uint64_t seed = 1;

  double kick_scale() const {
    return scaling == Scaling::kMeanField ? 1.0 / static_cast<double>(n) : 1.0;
  }
};

// Soft checks. Hard invariants (N >= 1, parameter signs) are enforced by the
// types themselves; here we only warn when the growth hypothesis
// b'(x) <= gamma b(x) + c with 3 gamma E(V) < 1 cannot hold. For sub-linear
// power rates b' blows up at 0 while b vanishes, so no (gamma, c) exists;
// the simulators still run, only the mean-field theorems lose their
// hypothesis.
inline std::vector<std::string> validate_config(const NetworkConfig& cfg) {
  std::vector<std::string> warnings;
  if (cfg.n < 1) throw std::invalid_argument("NetworkConfig: N must be >= 1");
  if (cfg.rate.kind() == RateKind::kPower && cfg.rate.exponent() < 1.0) {
    warnings.push_back(
        "growth condition b'(x) <= gamma*b(x)+c is not satisfiable near 0 for "
        "sub-linear power rates; mean-field hypotheses do not cover this rate");
  }
  return warnings;
}

}  // namespace spikefield
