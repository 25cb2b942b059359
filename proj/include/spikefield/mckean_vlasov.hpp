#pragma once

#include <algorithm>
#include <array>
#include <atomic>
#include <cmath>
#include <cstddef>
#include <stdexcept>
#include <thread>
#include <vector>

#include "spikefield/config.hpp"
#include "spikefield/exact_sim.hpp"
#include "spikefield/quadrature.hpp"
#include "spikefield/rate.hpp"
#include "spikefield/rng.hpp"

namespace spikefield {

// Time-gridded estimate of t -> E(b(Z(t))).
struct MeanRateTrajectory {
  double h = 0;
  std::vector<double> values;  // values[m] at t = m*h

  double horizon() const {
    return values.empty() ? 0.0 : h * static_cast<double>(values.size() - 1);
  }

  double at_time(double t) const {
    if (values.empty()) throw std::logic_error("MeanRateTrajectory: empty");
    if (t <= 0) return values.front();
    const double pos = t / h;
    const auto m = static_cast<std::size_t>(pos);
    if (m + 1 >= values.size()) return values.back();
    const double frac = pos - static_cast<double>(m);
    return values[m] * (1 - frac) + values[m + 1] * frac;
  }
};

namespace mv_detail {

// Hazard accrual along the relaxing flow Z(s) = a + (z - a) e^{-s} over a
// cell: fixed 16-point Gauss-Legendre, with subdivision until the increment
// is stable to 1e-10.
inline double cell_hazard(const RateFunction& b, double target, double z, double len,
                          int depth = 0) {
  if (!(len > 0)) return 0.0;
  auto flow = [&](double s) { return b(std::max(target + (z - target) * std::exp(-s), 0.0)); };
  const double whole = quad::gl16(flow, 0.0, len);
  const double z_mid = target + (z - target) * std::exp(-0.5 * len);
  const double left = quad::gl16(flow, 0.0, 0.5 * len);
  const double right =
      quad::gl16([&](double s) { return b(std::max(target + (z_mid - target) * std::exp(-s), 0.0)); },
                 0.0, 0.5 * len);
  if (std::abs(left + right - whole) <= 1e-10 || depth >= 24) return left + right;
  return cell_hazard(b, target, z, 0.5 * len, depth + 1) +
         cell_hazard(b, target, z_mid, 0.5 * len, depth + 1);
}

}  // namespace mv_detail

// One trajectory of dZ = (-Z + a(t)) dt with reset-to-zero jumps at rate
// b(Z), a(t) = E(V) * min(u_prev(t), C) held piecewise constant per grid
// cell. Between jumps the flow is the closed-form relaxation; the jump time
// inside a cell is found by hazard inversion against an Exp(1) budget.
// Returns Z(t_m) at the grid nodes. Optionally records jump times and the
// per-cell integrated intensity int_cell b(Z(s)) ds (a by-product of the
// budget bookkeeping, and a smoother mean-rate estimator than the node
// values: it is continuous in the jump times).
inline std::vector<double> simulate_frozen_input(const RateFunction& b, double mean_weight,
                                                 const std::vector<double>& u_prev, double h,
                                                 double z0, double cutoff, RngStream& rng,
                                                 std::vector<double>* jump_times = nullptr,
                                                 std::vector<double>* cell_intensity = nullptr) {
  if (u_prev.size() < 2) throw std::invalid_argument("simulate_frozen_input: grid too short");
  if (!(cutoff > 0)) throw std::invalid_argument("simulate_frozen_input: cutoff must be > 0");
  const std::size_t cells = u_prev.size() - 1;
  std::vector<double> path(u_prev.size());
  if (cell_intensity) cell_intensity->assign(cells, 0.0);
  double z = z0;
  double budget = rng.exponential(1.0);
  path[0] = z;
  for (std::size_t m = 0; m < cells; ++m) {
    const double a = mean_weight * std::min(u_prev[m], cutoff);
    double remaining = h;
    double cell_t = static_cast<double>(m) * h;
    double accrued = 0;
    while (remaining > 0) {
      const double hz = mv_detail::cell_hazard(b, a, z, remaining);
      if (budget > hz) {
        budget -= hz;
        accrued += hz;
        z = a + (z - a) * std::exp(-remaining);
        break;
      }
      // jump inside the segment: invert the accrued hazard
      const double need = budget;
      auto acc = [&](double s) { return mv_detail::cell_hazard(b, a, z, s); };
      double lo = 0, hi = remaining, s = 0.5 * remaining;
      for (int it = 0; it < 60; ++it) {
        const double f = acc(s) - need;
        if (std::abs(f) <= 1e-12) break;
        if (f < 0) {
          lo = s;
        } else {
          hi = s;
        }
        const double rate = b(std::max(a + (z - a) * std::exp(-s), 0.0));
        double next = rate > 0 ? s - f / rate : 0.5 * (lo + hi);
        if (!(next > lo && next < hi)) next = 0.5 * (lo + hi);
        s = next;
      }
      accrued += need;
      cell_t += s;
      remaining -= s;
      if (jump_times) jump_times->push_back(cell_t);
      z = 0.0;
      budget = rng.exponential(1.0);
    }
    if (cell_intensity) (*cell_intensity)[m] = accrued;
    path[m + 1] = z;
  }
  return path;
}

struct PicardOptions {
  double grid_h = 0.01;
  double horizon = 100.0;
  std::size_t particles = 1000;
  double tol = 1e-3;
  std::size_t max_iter = 30;
  double cutoff = 0;  // <= 0: 10 * (sup of the first iterate + b(0))
  std::size_t threads = 1;
};

struct PicardReport {
  std::vector<double> gaps;  // sup-norm gap per iteration
  bool converged = false;
  std::size_t iterations = 0;
  MeanRateTrajectory trajectory;
  std::size_t particles = 0;
  double cutoff = 0;
};

namespace mv_detail {

inline constexpr std::uint64_t kParticleStreamBase = 0x100000;
inline constexpr std::size_t kChunk = 64;

// Deterministic chunked reduction: chunk boundaries are fixed, so the
// summation tree does not depend on the thread count.
template <typename Work>
inline void run_chunks(std::size_t count, std::size_t threads, Work&& work) {
  const std::size_t chunks = (count + kChunk - 1) / kChunk;
  if (threads <= 1) {
    for (std::size_t c = 0; c < chunks; ++c) work(c);
    return;
  }
  std::vector<std::thread> pool;
  std::atomic<std::size_t> next{0};
  for (std::size_t t = 0; t < threads; ++t) {
    pool.emplace_back([&] {
      while (true) {
        const std::size_t c = next.fetch_add(1);
        if (c >= chunks) break;
        work(c);
      }
    });
  }
  for (auto& th : pool) th.join();
}

}  // namespace mv_detail

// Picard construction of the McKean-Vlasov mean rate: u_0 from the pure
// decay of the initial draws, then each u_n as the Monte Carlo average of
// b(Z) over frozen-input trajectories driven by u_{n-1} with the cutoff.
// Common random numbers across iterations (per-particle substreams re-derived
// each iteration) make the empirical map near-deterministic, so the sup-norm
// stopping rule is meaningful.
inline PicardReport picard_iterate(const RateFunction& b, double mean_weight,
                                   const InitialCondition& init, const PicardOptions& opts,
                                   std::uint64_t seed) {
  if (!(opts.grid_h > 0) || opts.grid_h > 0.05) {
    throw std::invalid_argument("picard_iterate: need 0 < grid_h <= 0.05");
  }
  if (opts.particles < 1000) {
    throw std::invalid_argument("picard_iterate: need at least 1000 particles");
  }
  if (!(opts.horizon > 0)) throw std::invalid_argument("picard_iterate: horizon must be > 0");

  const auto cells = static_cast<std::size_t>(std::llround(opts.horizon / opts.grid_h));
  const std::size_t nodes = cells + 1;
  const std::size_t P = opts.particles;
  const RngStream root(seed);

  RngStream init_rng = root.split(stream_tag::kInit);
  std::vector<double> z0(P);
  {
    auto draws = init.sample(P, init_rng);
    z0 = std::move(draws);
  }

  // u_0 from the decay-only process: u[0] is the exact node value, u[m] for
  // m >= 1 the mean rate of cell m-1 (per-cell integrated intensity / h,
  // closed form along the pure decay)
  std::vector<double> u(nodes, 0.0);
  const std::size_t chunks = (P + mv_detail::kChunk - 1) / mv_detail::kChunk;
  std::vector<std::vector<double>> partial(chunks);
  const double node_decay = std::exp(-opts.grid_h);
  mv_detail::run_chunks(P, opts.threads, [&](std::size_t c) {
    auto& acc = partial[c];
    acc.assign(nodes, 0.0);
    const std::size_t lo = c * mv_detail::kChunk, hi = std::min(P, lo + mv_detail::kChunk);
    for (std::size_t i = lo; i < hi; ++i) {
      double zi = z0[i];
      acc[0] += b(zi);
      for (std::size_t m = 0; m + 1 < nodes; ++m) {
        acc[m + 1] += flow_hazard(b, zi, opts.grid_h) / opts.grid_h;
        zi *= node_decay;
      }
    }
  });
  for (std::size_t c = 0; c < chunks; ++c) {
    for (std::size_t m = 0; m < nodes; ++m) u[m] += partial[c][m];
  }
  for (auto& v : u) v /= static_cast<double>(P);

  PicardReport rep;
  rep.particles = P;
  double cutoff = opts.cutoff;
  if (!(cutoff > 0)) {
    cutoff = 10.0 * (*std::max_element(u.begin(), u.end()) + b.value_at_zero());
    if (!(cutoff > 0)) cutoff = 1.0;
  }
  rep.cutoff = cutoff;

  std::vector<double> u_next(nodes);
  for (std::size_t iter = 1; iter <= opts.max_iter; ++iter) {
    mv_detail::run_chunks(P, opts.threads, [&](std::size_t c) {
      auto& acc = partial[c];
      acc.assign(nodes, 0.0);
      const std::size_t lo = c * mv_detail::kChunk, hi = std::min(P, lo + mv_detail::kChunk);
      std::vector<double> cell_int;
      for (std::size_t i = lo; i < hi; ++i) {
        RngStream rng = root.split(mv_detail::kParticleStreamBase + i);
        const auto path = simulate_frozen_input(b, mean_weight, u, opts.grid_h, z0[i], cutoff,
                                                rng, nullptr, &cell_int);
        acc[0] += b(path[0]);
        for (std::size_t m = 0; m + 1 < nodes; ++m) acc[m + 1] += cell_int[m] / opts.grid_h;
      }
    });
    std::fill(u_next.begin(), u_next.end(), 0.0);
    for (std::size_t c = 0; c < chunks; ++c) {
      for (std::size_t m = 0; m < nodes; ++m) u_next[m] += partial[c][m];
    }
    for (auto& v : u_next) v /= static_cast<double>(P);

    double gap = 0;
    for (std::size_t m = 0; m < nodes; ++m) gap = std::max(gap, std::abs(u_next[m] - u[m]));
    rep.gaps.push_back(gap);
    u.swap(u_next);
    rep.iterations = iter;
    if (gap <= opts.tol) {
      rep.converged = true;
      break;
    }
  }
  rep.trajectory.h = opts.grid_h;
  rep.trajectory.values = std::move(u);
  return rep;
}

// Sup-norm distance between the Picard mean rate and a particle run's
// <Lambda_N, b> on the particle grid (linear interpolation alignment).
template <typename ParticleRun>
double compare_with_particles(const MeanRateTrajectory& picard, const ParticleRun& run) {
  if (run.times.empty()) throw std::invalid_argument("compare_with_particles: empty run");
  const double horizon = picard.horizon();
  double d = 0;
  std::size_t used = 0;
  for (std::size_t k = 0; k < run.times.size(); ++k) {
    if (run.times[k] > horizon + 1e-12) break;
    d = std::max(d, std::abs(picard.at_time(run.times[k]) - run.mean_rate[k]));
    ++used;
  }
  if (used == 0) throw std::invalid_argument("compare_with_particles: grids do not overlap");
  return d;
}

}  // namespace spikefield
