#pragma once

#include <cmath>
#include <stdexcept>
#include <vector>

#include "spikefield/config.hpp"
#include "spikefield/quadrature.hpp"
#include "spikefield/rng.hpp"
#include "spikefield/weights.hpp"

namespace spikefield {

// Perfect sampling of the stationary network state for a constant firing
// rate, by backward coupling: looking backwards from time 0, node j's spikes
// form a Poisson(rate) stream; node i keeps the kicks that arrived since its
// own most recent spike, decayed by their age. Each process is realized as
// its first backward point plus an independent Poisson fill on (t_j1, T],
// T = max_i t_i1, which is exactly the joint law the representation needs.
inline std::vector<double> backward_coupling_sample(std::size_t n, double rate,
                                                    const WeightDistribution& weights,
                                                    Scaling scaling, RngStream& rng) {
  if (n < 1) throw std::invalid_argument("backward_coupling_sample: n must be >= 1");
  if (!(rate > 0)) throw std::invalid_argument("backward_coupling_sample: rate must be > 0");
  const double scale = scaling == Scaling::kMeanField ? 1.0 / static_cast<double>(n) : 1.0;

  std::vector<double> first(n);
  double t_max = 0;
  for (std::size_t i = 0; i < n; ++i) {
    first[i] = rng.exponential(rate);
    t_max = std::max(t_max, first[i]);
  }
  std::vector<double> x(n, 0.0);
  std::vector<double> points;
  for (std::size_t j = 0; j < n; ++j) {
    points.clear();
    double t = first[j];
    points.push_back(t);
    while ((t += rng.exponential(rate)) <= t_max) points.push_back(t);
    for (double tp : points) {
      const double decayed = std::exp(-tp);
      for (std::size_t i = 0; i < n; ++i) {
        if (i == j || tp > first[i]) continue;
        x[i] += weights.sample(rng) * decayed * scale;
      }
    }
  }
  return x;
}

// E(X_1) at equilibrium: (N-1) E(W) rate / (rate + 1).
inline double equilibrium_mean(std::size_t n, double rate, double mean_weight) {
  if (n < 1) throw std::invalid_argument("equilibrium_mean: n must be >= 1");
  return static_cast<double>(n - 1) * mean_weight * rate / (rate + 1.0);
}

// P(X_1 = 0) = 1/N: the node is the last one that spiked.
inline double atom_at_zero(std::size_t n) {
  if (n < 1) throw std::invalid_argument("atom_at_zero: n must be >= 1");
  return 1.0 / static_cast<double>(n);
}

// Laplace transform of the equilibrium state of one node:
//   E(e^{-xi X_1}) = int_0^inf exp(-rate (N-1) A(x)) rate e^{-rate x} dx,
//   A(x) = int_0^x (1 - W~(xi e^{-u})) du,
// with W~ the analytic Laplace transform of the weight law. The outer
// integral is truncated by the e^{-rate x} tail bound.
inline double laplace_transform(std::size_t n, double rate, const WeightDistribution& weights,
                                double xi, double rel_tol = 1e-8) {
  if (n < 1) throw std::invalid_argument("laplace_transform: n must be >= 1");
  if (!(rate > 0)) throw std::invalid_argument("laplace_transform: rate must be > 0");
  if (xi < 0) throw std::domain_error("laplace_transform: xi must be >= 0");
  if (xi == 0 || n == 1) return 1.0;

  auto inner = [&](double x) {
    // integrand of A is in [0, 1] and decays like xi e^{-u} E(W)
    auto f = [&](double u) { return 1.0 - weights.laplace(xi * std::exp(-u)); };
    return quad::adaptive_gl(f, 0.0, x, 1e-12 * std::max(x, 1.0));
  };
  const double x_cut = 42.0 / rate;
  auto outer = [&](double x) {
    return std::exp(-rate * static_cast<double>(n - 1) * inner(x)) * rate * std::exp(-rate * x);
  };
  std::vector<double> pts{0.0};
  for (double m : {0.25, 1.0, 4.0, 16.0}) {
    const double p = m / rate;
    if (p > pts.back() && p < x_cut) pts.push_back(p);
  }
  pts.push_back(x_cut);
  double rough = 0;
  for (std::size_t i = 0; i + 1 < pts.size(); ++i) rough += quad::gl16(outer, pts[i], pts[i + 1]);
  const double abs_tol = std::max(rough, 1e-12) * std::min(rel_tol, 1e-10);
  double val = quad::adaptive_gl_panels(outer, pts.begin(), pts.end(), abs_tol);
  // remainder: A only grows past the cut, so this bounds the tail (< 1e-18)
  val += std::exp(-rate * static_cast<double>(n - 1) * inner(x_cut)) * std::exp(-rate * x_cut);
  return val;
}

// Large-N stationary marginal under V/N scaling:
// density (1/E(V)) (1 - u/(rate E(V)))^{rate - 1} on [0, rate E(V)].
inline double limit_density(double rate, double mean_weight, double u) {
  if (!(rate > 0) || !(mean_weight > 0)) {
    throw std::invalid_argument("limit_density: rate and E(V) must be > 0");
  }
  const double upper = rate * mean_weight;
  if (u < 0 || u > upper) return 0.0;
  return std::pow(1.0 - u / upper, rate - 1.0) / mean_weight;
}

}  // namespace spikefield
