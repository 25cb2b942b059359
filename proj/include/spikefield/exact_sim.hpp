#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <limits>
#include <optional>
#include <stdexcept>
#include <vector>

#include "spikefield/config.hpp"
#include "spikefield/rate.hpp"
#include "spikefield/rng.hpp"

namespace spikefield {

// Substream ids used to derive per-purpose randomness from a config seed.
namespace stream_tag {
inline constexpr std::uint64_t kInit = 0x10;
inline constexpr std::uint64_t kWeights = 0x20;
inline constexpr std::uint64_t kThinning = 0x30;
inline constexpr std::uint64_t kBernoulli = 0x40;
inline constexpr std::uint64_t kBudgetBase = 0x1000;
}  // namespace stream_tag

// Integrated intensity along the decaying flow: int_0^s b(x0 e^{-u}) du.
// Closed forms for the whole family; monotone non-decreasing in s.
inline double flow_hazard(const RateFunction& b, double x0, double s) {
  if (x0 < 0 || s < 0) throw std::domain_error("flow_hazard: x0, s must be >= 0");
  switch (b.kind()) {
    case RateKind::kConstant:
      return b.constant_rate() * s;
    case RateKind::kAffine:
      return b.slope() * x0 * (-std::expm1(-s)) + b.intercept() * s;
    case RateKind::kPower:
    default: {
      const double a = b.exponent();
      return b.coef() * std::pow(x0, a) / a * (-std::expm1(-a * s)) + b.intercept() * s;
    }
  }
}

// Inverse of flow_hazard in s: smallest s with accumulated hazard equal to
// `target`. Empty when the total hazard of the decay never reaches target.
inline std::optional<double> invert_flow_hazard(const RateFunction& b, double x0, double target) {
  if (!(target > 0)) throw std::domain_error("invert_flow_hazard: target must be > 0");
  constexpr double kHazardTol = 1e-12;

  const double floor_rate = b.value_at_zero();
  if (b.kind() == RateKind::kConstant) {
    if (floor_rate <= 0) return std::nullopt;
    return target / floor_rate;
  }
  if (b.kind() == RateKind::kAffine && b.intercept() == 0.0) {
    const double total = b.slope() * x0;
    if (target >= total) return std::nullopt;
    return -std::log1p(-target / total);
  }
  if (floor_rate == 0.0) {
    // power with zero intercept: finite total hazard
    const double total = b.coef() * std::pow(x0, b.exponent()) / b.exponent();
    if (target >= total) return std::nullopt;
  }

  // Newton with bisection fallback on the monotone hazard.
  double hi = 1.0;
  if (floor_rate > 0) {
    hi = target / floor_rate;  // hazard(s) >= floor_rate * s
  } else {
    while (flow_hazard(b, x0, hi) < target) hi *= 2;
  }
  double lo = 0.0;
  double s = std::min(hi, target / std::max(b(x0), 1e-300));
  if (!(s > lo && s < hi)) s = 0.5 * hi;
  for (int it = 0; it < 60; ++it) {
    const double h = flow_hazard(b, x0, s) - target;
    if (std::abs(h) <= kHazardTol) return s;
    if (h < 0) {
      lo = s;
    } else {
      hi = s;
    }
    const double rate = b(x0 * std::exp(-s));
    double next = rate > 0 ? s - h / rate : 0.5 * (lo + hi);
    if (!(next > lo && next < hi)) next = 0.5 * (lo + hi);
    s = next;
  }
  return s;
}

struct SpikeEvent {
  double time;
  std::size_t neuron;
};

struct EventLog {
  std::vector<SpikeEvent> events;
};

struct StateSnapshot {
  double time;
  std::vector<double> potentials;
};

struct NetworkState {
  double t = 0;
  std::vector<double> x;                 // potentials, >= 0
  std::vector<double> budget;            // residual Exp(1) hazard credits, > 0
  std::vector<std::uint64_t> spike_count;
};

// Statistically exact event-driven simulation. Each neuron carries an Exp(1)
// hazard budget consumed by its integrated intensity; the budget hitting
// zero is the spike. Budgets persist across other neurons' spikes
// (memorylessness makes the decrement exact). Event selection is a full
// argmin scan: every spike perturbs all neurons' next-spike times, so a
// priority queue would be invalid.
class ExactSimulator {
 public:
  ExactSimulator(const NetworkConfig& cfg, const InitialCondition& init)
      : cfg_(cfg), weight_rng_(RngStream(cfg.seed).split(stream_tag::kWeights)) {
    const RngStream root(cfg.seed);
    RngStream init_rng = root.split(stream_tag::kInit);
    st_.x = init.sample(cfg.n, init_rng);
    st_.budget.resize(cfg.n);
    st_.spike_count.assign(cfg.n, 0);
    budget_rng_.reserve(cfg.n);
    for (std::size_t i = 0; i < cfg.n; ++i) {
      budget_rng_.push_back(root.split(stream_tag::kBudgetBase + i));
      st_.budget[i] = budget_rng_[i].exponential(1.0);
    }
  }

  const NetworkState& state() const { return st_; }
  const NetworkConfig& config() const { return cfg_; }

  // Potentials decayed to a query time between events; t >= state().t.
  std::vector<double> potentials_at(double t) const {
    const double decay = std::exp(-(t - st_.t));
    std::vector<double> out(st_.x);
    for (auto& v : out) v *= decay;
    return out;
  }

  // Time of the next spike, absent further events; empty when no neuron can
  // ever exhaust its budget (possible only when b(0) = 0).
  std::optional<double> peek_next_time() const {
    auto nxt = next_event();
    if (!nxt) return std::nullopt;
    return st_.t + nxt->second;
  }

  // Apply exactly one spike.
  std::optional<SpikeEvent> step() {
    const auto nxt = next_event();
    if (!nxt) return std::nullopt;
    const auto [j, dt] = *nxt;
    const double decay = std::exp(-dt);
    const double scale = cfg_.kick_scale();
    for (std::size_t i = 0; i < cfg_.n; ++i) {
      if (i == j) continue;
      const double accrued = flow_hazard(cfg_.rate, st_.x[i], dt);
      st_.budget[i] -= accrued;
      // ties (probability zero) can push a budget to the floor numerically
      if (st_.budget[i] <= 0) st_.budget[i] = 1e-300;
      st_.x[i] = st_.x[i] * decay + cfg_.weights.sample(weight_rng_) * scale;
    }
    st_.x[j] = 0.0;  // kicks from j's own spike never apply to j
    st_.budget[j] = budget_rng_[j].exponential(1.0);
    st_.t += dt;
    ++st_.spike_count[j];
    return SpikeEvent{st_.t, j};
  }

  // True when no neuron can ever spike again: every residual budget strictly
  // exceeds the total hazard left in the decay.
  bool extinct() const {
    for (std::size_t i = 0; i < cfg_.n; ++i) {
      if (!(st_.budget[i] > cfg_.rate.hazard_to_zero(st_.x[i]))) return false;
    }
    return true;
  }

 private:
  // (neuron, time-from-now) of the next spike; ties broken by lowest index.
  std::optional<std::pair<std::size_t, double>> next_event() const {
    std::size_t best = 0;
    double best_dt = std::numeric_limits<double>::infinity();
    bool found = false;
    for (std::size_t i = 0; i < cfg_.n; ++i) {
      const auto s = invert_flow_hazard_or_none(i);
      if (s && *s < best_dt) {
        best = i;
        best_dt = *s;
        found = true;
      }
    }
    if (!found) return std::nullopt;
    return std::make_pair(best, best_dt);
  }

  std::optional<double> invert_flow_hazard_or_none(std::size_t i) const {
    return invert_flow_hazard(cfg_.rate, st_.x[i], st_.budget[i]);
  }

  NetworkConfig cfg_;
  NetworkState st_;
  std::vector<RngStream> budget_rng_;
  RngStream weight_rng_;
};

struct ExactRunResult {
  EventLog log;
  std::vector<StateSnapshot> snapshots;
};

// Event loop up to `horizon`; snapshots record the (pre-event) state at the
// requested sample times.
inline ExactRunResult run_exact(const NetworkConfig& cfg, const InitialCondition& init,
                                double horizon, std::vector<double> sample_times = {}) {
  if (!(horizon > 0)) throw std::invalid_argument("run_exact: horizon must be > 0");
  std::sort(sample_times.begin(), sample_times.end());
  ExactSimulator sim(cfg, init);
  ExactRunResult out;
  std::size_t next_sample = 0;
  auto flush_samples_until = [&](double t) {
    while (next_sample < sample_times.size() && sample_times[next_sample] <= t) {
      const double ts = sample_times[next_sample];
      if (ts >= sim.state().t) {
        out.snapshots.push_back({ts, sim.potentials_at(ts)});
      }
      ++next_sample;
    }
  };
  while (true) {
    const auto tn = sim.peek_next_time();
    if (!tn || *tn > horizon) break;
    flush_samples_until(*tn);
    const auto ev = sim.step();
    out.log.events.push_back(*ev);
  }
  flush_samples_until(horizon);
  return out;
}

struct ExtinctionReport {
  enum class Outcome { kExtinct, kHorizonExceeded, kNeverExtinguishes };
  Outcome outcome = Outcome::kExtinct;
  double last_spike_time = 0;
  std::uint64_t total_spikes = 0;
  double horizon = 0;
  std::vector<bool> never_fired;
};

// Runs the event loop until no further spike can ever occur. A rate with
// b(0) > 0 is Harris ergodic, never extinct: typed refusal, not a loop.
inline ExtinctionReport extinction_time(const NetworkConfig& cfg, const InitialCondition& init,
                                        double horizon) {
  ExtinctionReport rep;
  rep.horizon = horizon;
  if (cfg.rate.value_at_zero() > 0) {
    rep.outcome = ExtinctionReport::Outcome::kNeverExtinguishes;
    rep.never_fired.assign(cfg.n, true);
    return rep;
  }
  ExactSimulator sim(cfg, init);
  double last_spike = 0;
  std::uint64_t total = 0;
  while (true) {
    if (sim.extinct()) {
      rep.outcome = ExtinctionReport::Outcome::kExtinct;
      rep.last_spike_time = last_spike;
      rep.total_spikes = total;
      break;
    }
    const auto tn = sim.peek_next_time();
    if (!tn) {  // equivalent to the predicate up to boundary equality
      rep.outcome = ExtinctionReport::Outcome::kExtinct;
      rep.last_spike_time = last_spike;
      rep.total_spikes = total;
      break;
    }
    if (*tn > horizon) {
      rep.outcome = ExtinctionReport::Outcome::kHorizonExceeded;
      rep.total_spikes = total;
      break;
    }
    const auto ev = sim.step();
    last_spike = ev->time;
    ++total;
  }
  rep.never_fired.resize(cfg.n);
  for (std::size_t i = 0; i < cfg.n; ++i) {
    rep.never_fired[i] = sim.state().spike_count[i] == 0;
  }
  return rep;
}

// Ogata-style thinning cross-check. Between accepted events potentials only
// decay and b is non-decreasing, so the rate sum at the last state bounds
// the true intensity until the next event; the bound is refreshed at every
// candidate.
inline EventLog run_thinning(const NetworkConfig& cfg, const InitialCondition& init,
                             double horizon) {
  if (!(horizon > 0)) throw std::invalid_argument("run_thinning: horizon must be > 0");
  const RngStream root(cfg.seed);
  RngStream init_rng = root.split(stream_tag::kInit);
  RngStream thin_rng = root.split(stream_tag::kThinning);
  RngStream weight_rng = root.split(stream_tag::kWeights);

  std::vector<double> x = init.sample(cfg.n, init_rng);
  const double scale = cfg.kick_scale();
  EventLog log;
  double t = 0;
  while (true) {
    double bound = 0;
    for (double xi : x) bound += cfg.rate(xi);
    if (!(bound > 0)) break;
    const double s = thin_rng.exponential(bound);
    if (t + s > horizon) break;
    t += s;
    const double decay = std::exp(-s);
    for (auto& xi : x) xi *= decay;
    const double u = thin_rng.uniform() * bound;
    double cum = 0;
    std::size_t hit = cfg.n;
    for (std::size_t i = 0; i < cfg.n; ++i) {
      cum += cfg.rate(x[i]);
      if (u <= cum) {
        hit = i;
        break;
      }
    }
    if (hit == cfg.n) continue;  // rejected candidate
    for (std::size_t i = 0; i < cfg.n; ++i) {
      if (i != hit) x[i] += cfg.weights.sample(weight_rng) * scale;
    }
    x[hit] = 0.0;
    log.events.push_back({t, hit});
  }
  return log;
}

}  // namespace spikefield
