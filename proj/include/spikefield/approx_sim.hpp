#pragma once

#include <cmath>
#include <cstdint>
#include <optional>
#include <stdexcept>
#include <vector>

#include "spikefield/config.hpp"
#include "spikefield/exact_sim.hpp"
#include "spikefield/stats.hpp"

namespace spikefield {

// Discrete-time approximate run: per-step means of the empirical measure
// and spike counts on the grid t_k = k*dt, k = 1..ceil(horizon/dt).
struct DiscreteRunOutput {
  std::size_t n = 0;
  double dt = 0;
  double horizon = 0;
  std::vector<double> times;
  std::vector<double> mean_potential;   // post-step
  std::vector<double> mean_rate;        // <Lambda_N, b>, post-step
  std::vector<std::uint64_t> spike_counts;
  std::optional<stats::Histogram> terminal_histogram;

  double time_at(std::size_t k) const { return times[k]; }
};

// One Bernoulli step per neuron per dt: decay, simultaneous fire draws with
// p = 1 - exp(-b(x) dt) against the decayed snapshot, then resets, then kick
// accumulation (firers also receive kicks after their reset). Any other
// within-step ordering differs at O(dt^2).
inline DiscreteRunOutput run_discrete(const NetworkConfig& cfg, const InitialCondition& init,
                                      double dt, double horizon, bool with_histogram = false) {
  if (!(dt > 0) || dt > 0.1) throw std::invalid_argument("run_discrete: need 0 < dt <= 0.1");
  if (!(horizon > 0)) throw std::invalid_argument("run_discrete: horizon must be > 0");
  const auto steps = static_cast<std::size_t>(std::ceil(horizon / dt - 1e-12));

  const RngStream root(cfg.seed);
  RngStream init_rng = root.split(stream_tag::kInit);
  RngStream fire_rng = root.split(stream_tag::kBernoulli);
  RngStream weight_rng = root.split(stream_tag::kWeights);

  std::vector<double> x = init.sample(cfg.n, init_rng);
  std::vector<std::size_t> firers;
  firers.reserve(cfg.n);

  DiscreteRunOutput out;
  out.n = cfg.n;
  out.dt = dt;
  out.horizon = horizon;
  out.times.reserve(steps);
  out.mean_potential.reserve(steps);
  out.mean_rate.reserve(steps);
  out.spike_counts.reserve(steps);

  const double decay = std::exp(-dt);
  const double scale = cfg.kick_scale();
  const double inv_n = 1.0 / static_cast<double>(cfg.n);
  double max_potential = 0;
  for (double xi : x) max_potential = std::max(max_potential, xi);

  for (std::size_t k = 1; k <= steps; ++k) {
    for (auto& xi : x) xi *= decay;
    firers.clear();
    for (std::size_t i = 0; i < cfg.n; ++i) {
      const double p = -std::expm1(-cfg.rate(x[i]) * dt);
      if (fire_rng.uniform() < p) firers.push_back(i);
    }
    for (std::size_t j : firers) x[j] = 0.0;
    for (std::size_t j : firers) {
      for (std::size_t i = 0; i < cfg.n; ++i) {
        if (i != j) x[i] += cfg.weights.sample(weight_rng) * scale;
      }
    }
    double sum_x = 0, sum_b = 0;
    for (double xi : x) {
      sum_x += xi;
      sum_b += cfg.rate(xi);
      max_potential = std::max(max_potential, xi);
    }
    out.times.push_back(static_cast<double>(k) * dt);
    out.mean_potential.push_back(sum_x * inv_n);
    out.mean_rate.push_back(sum_b * inv_n);
    out.spike_counts.push_back(firers.size());
  }

  if (with_histogram) {
    const double hi = max_potential > 0 ? 1.2 * max_potential : 1.0;
    out.terminal_histogram = stats::histogram(x, 200, 0.0, hi);
  }
  return out;
}

// Time average of <Lambda_N, b> over the records with t_k in [t_lo, t_hi].
inline double averaged_activity(const DiscreteRunOutput& out, double t_lo, double t_hi) {
  if (!(t_lo <= t_hi) || t_lo < 0 || t_hi > out.horizon + out.dt) {
    throw std::invalid_argument("averaged_activity: window outside the run horizon");
  }
  double sum = 0;
  std::size_t count = 0;
  for (std::size_t k = 0; k < out.times.size(); ++k) {
    if (out.times[k] >= t_lo && out.times[k] <= t_hi) {
      sum += out.mean_rate[k];
      ++count;
    }
  }
  if (count == 0) throw std::invalid_argument("averaged_activity: empty window");
  return sum / static_cast<double>(count);
}

struct RateBoundCheck {
  bool pass = false;
  double max_rate = 0;
};

// Empirical version of the scaled-firing-rate control: the recorded
// <Lambda_N, b> never exceeds the cap.
inline RateBoundCheck firing_rate_bound_check(const DiscreteRunOutput& out, double cap) {
  RateBoundCheck res;
  for (double r : out.mean_rate) res.max_rate = std::max(res.max_rate, r);
  res.pass = res.max_rate <= cap;
  return res;
}

}  // namespace spikefield
