#include <catch2/catch_amalgamated.hpp>

#include <cmath>
#include <vector>

#include "spikefield/exact_sim.hpp"
#include "spikefield/stats.hpp"

using namespace spikefield;

TEST_CASE("flow hazard closed forms", "[exact_sim]") {
  const auto aff = RateFunction::affine(1.0);
  CHECK(flow_hazard(aff, 1.0, 50.0) == Catch::Approx(1.0));  // s -> inf limit
  CHECK(flow_hazard(aff, 1.0, 0.0) == 0.0);
  CHECK(flow_hazard(RateFunction::constant(2.0), 3.0, 0.5) == Catch::Approx(1.0));
  CHECK(flow_hazard(RateFunction::power(1.0, 2.0), 2.0, 1.0) ==
        Catch::Approx(2.0 * (-std::expm1(-2.0))));
  // monotone in s
  double prev = 0;
  for (int k = 1; k <= 100; ++k) {
    const double h = flow_hazard(RateFunction::power(0.7, 1.5, 0.2), 1.3, 0.05 * k);
    CHECK(h >= prev);
    prev = h;
  }
}

TEST_CASE("hazard inversion: closed forms and refusal", "[exact_sim]") {
  const auto aff = RateFunction::affine(1.0);
  auto s = invert_flow_hazard(aff, 1.0, 0.5);
  REQUIRE(s.has_value());
  CHECK(*s == Catch::Approx(std::log(2.0)));
  CHECK_FALSE(invert_flow_hazard(aff, 1.0, 1.5).has_value());
  auto sc = invert_flow_hazard(RateFunction::constant(2.0), 0.0, 1.0);
  REQUIRE(sc.has_value());
  CHECK(*sc == Catch::Approx(0.5));
  CHECK_FALSE(invert_flow_hazard(RateFunction::constant(0.0), 1.0, 0.1).has_value());
}

TEST_CASE("hazard inversion round trip", "[exact_sim]") {
  RngStream rng(2024);
  const std::vector<RateFunction> rates = {
      RateFunction::affine(1.0),          RateFunction::affine(0.5, 0.3),
      RateFunction::power(1.0, 2.0),      RateFunction::power(2.0, 0.8, 0.0),
      RateFunction::power(0.6, 1.5, 0.2), RateFunction::constant(1.3),
  };
  int tested = 0;
  for (int k = 0; k < 1000; ++k) {
    const auto& b = rates[k % rates.size()];
    const double x0 = rng.uniform(0.05, 4.0);
    const auto total = b.hazard_to_zero(x0);
    double h = rng.uniform(0.0, 2.0) + 1e-6;
    if (total.is_finite() && h >= 0.95 * total.finite_value()) {
      h = 0.5 * total.finite_value();
    }
    const auto s = invert_flow_hazard(b, x0, h);
    REQUIRE(s.has_value());
    CHECK(std::abs(flow_hazard(b, x0, *s) - h) <= 1e-10);
    ++tested;
  }
  CHECK(tested == 1000);
}

TEST_CASE("single constant-rate neuron produces Exp(1) inter-spike times", "[exact_sim]") {
  NetworkConfig cfg{1, RateFunction::constant(1.0), WeightDistribution::constant(0.0),
                    Scaling::kRaw, 73};
  ExactSimulator sim(cfg, InitialCondition::dirac(0.0));
  const std::size_t n = 100000;
  std::vector<double> gaps(n);
  double prev = 0;
  for (std::size_t k = 0; k < n; ++k) {
    const auto ev = sim.step();
    REQUIRE(ev.has_value());
    gaps[k] = ev->time - prev;
    prev = ev->time;
  }
  const double d = stats::ks_statistic(gaps, [](double x) { return -std::expm1(-x); });
  CHECK(d < stats::ks_critical_one_sample(n));
}

TEST_CASE("never-fire probability of an isolated linear neuron", "[exact_sim]") {
  // p = exp(-lambda x0) with lambda = 1, x0 = 2
  const std::size_t runs = 100000;
  std::size_t silent = 0;
  for (std::size_t k = 0; k < runs; ++k) {
    NetworkConfig cfg{1, RateFunction::affine(1.0), WeightDistribution::constant(0.0),
                      Scaling::kRaw, 9000 + k};
    ExactSimulator sim(cfg, InitialCondition::dirac(2.0));
    if (!sim.step().has_value()) ++silent;
  }
  const double p = std::exp(-2.0);
  const double se = std::sqrt(p * (1 - p) / static_cast<double>(runs));
  CHECK(std::abs(static_cast<double>(silent) / runs - p) <= 3 * se);
}

TEST_CASE("zero coupling decouples the network", "[exact_sim]") {
  NetworkConfig cfg{2, RateFunction::affine(1.0, 0.3), WeightDistribution::constant(0.0),
                    Scaling::kRaw, 555};
  const std::vector<double> x0 = {1.7, 0.4};
  ExactSimulator sim(cfg, InitialCondition::explicit_values(x0));
  std::vector<std::vector<double>> times(2);
  for (int k = 0; k < 200; ++k) {
    const auto ev = sim.step();
    REQUIRE(ev.has_value());
    times[ev->neuron].push_back(ev->time);
  }

  // oracle: replay each neuron in isolation from its own budget substream
  const RngStream root(cfg.seed);
  for (std::size_t i = 0; i < 2; ++i) {
    RngStream budget = root.split(stream_tag::kBudgetBase + i);
    double t = 0, x = x0[i];
    for (double expected : times[i]) {
      const auto s = invert_flow_hazard(cfg.rate, x, budget.exponential(1.0));
      REQUIRE(s.has_value());
      t += *s;
      x = 0.0;
      CHECK(t == Catch::Approx(expected).margin(1e-9));
    }
  }
}

TEST_CASE("run_exact: silent rate gives pure decay", "[exact_sim]") {
  NetworkConfig cfg{3, RateFunction::constant(0.0), WeightDistribution::uniform(0.0, 1.0),
                    Scaling::kRaw, 11};
  const std::vector<double> x0 = {1.0, 0.5, 2.0};
  const auto res =
      run_exact(cfg, InitialCondition::explicit_values(x0), 5.0, {1.0, 2.5, 5.0});
  CHECK(res.log.events.empty());
  REQUIRE(res.snapshots.size() == 3);
  for (const auto& snap : res.snapshots) {
    for (std::size_t i = 0; i < 3; ++i) {
      CHECK(snap.potentials[i] == Catch::Approx(x0[i] * std::exp(-snap.time)).epsilon(1e-12));
    }
  }
}

TEST_CASE("run_exact: Poisson counts at constant rate", "[exact_sim]") {
  // single run
  NetworkConfig cfg{1, RateFunction::constant(1.0), WeightDistribution::constant(0.0),
                    Scaling::kRaw, 7};
  const auto res = run_exact(cfg, InitialCondition::dirac(0.0), 10.0);
  CHECK(std::abs(static_cast<double>(res.log.events.size()) - 10.0) <= 3 * std::sqrt(10.0));
  // ensemble mean within 1% of r*T
  const std::size_t runs = 1000;
  double total = 0;
  for (std::size_t k = 0; k < runs; ++k) {
    NetworkConfig c{1, RateFunction::constant(1.0), WeightDistribution::constant(0.0),
                    Scaling::kRaw, 100000 + k};
    total += static_cast<double>(run_exact(c, InitialCondition::dirac(0.0), 10.0).log.events.size());
  }
  CHECK(std::abs(total / runs - 10.0) <= 0.1);
}

TEST_CASE("run_exact is deterministic in the seed", "[exact_sim]") {
  NetworkConfig cfg{4, RateFunction::affine(1.0, 0.1), WeightDistribution::uniform(0.0, 0.5),
                    Scaling::kRaw, 31337};
  const auto a = run_exact(cfg, InitialCondition::uniform(0.0, 1.0), 20.0);
  const auto b = run_exact(cfg, InitialCondition::uniform(0.0, 1.0), 20.0);
  REQUIRE(a.log.events.size() == b.log.events.size());
  for (std::size_t k = 0; k < a.log.events.size(); ++k) {
    CHECK(a.log.events[k].time == b.log.events[k].time);
    CHECK(a.log.events[k].neuron == b.log.events[k].neuron);
  }
  CHECK(a.log.events.size() > 0);
}

TEST_CASE("extinction: trivial cases", "[exact_sim]") {
  // x0 = 0, b(0) = 0: extinct at time zero with no spikes
  NetworkConfig cfg{1, RateFunction::affine(1.0), WeightDistribution::constant(1.0),
                    Scaling::kRaw, 3};
  const auto rep = extinction_time(cfg, InitialCondition::dirac(0.0), 100.0);
  CHECK(rep.outcome == ExtinctionReport::Outcome::kExtinct);
  CHECK(rep.last_spike_time == 0.0);
  CHECK(rep.total_spikes == 0);
  REQUIRE(rep.never_fired.size() == 1);
  CHECK(rep.never_fired[0]);

  // b(0) > 0 is ergodic, never extinct
  NetworkConfig cfg2{5, RateFunction::constant(1.0), WeightDistribution::constant(1.0),
                     Scaling::kRaw, 3};
  CHECK(extinction_time(cfg2, InitialCondition::dirac(0.0), 100.0).outcome ==
        ExtinctionReport::Outcome::kNeverExtinguishes);
}

TEST_CASE("extinction predicate is sound: no events after the report", "[exact_sim]") {
  for (std::uint64_t seed = 1; seed <= 20; ++seed) {
    NetworkConfig cfg{5, RateFunction::affine(1.0), WeightDistribution::uniform(0.0, 1.0),
                      Scaling::kMeanField, seed};
    const auto rep = extinction_time(cfg, InitialCondition::uniform(0.0, 1.0), 10000.0);
    REQUIRE(rep.outcome == ExtinctionReport::Outcome::kExtinct);
    // replay and continue the loop past the reported last spike
    ExactSimulator sim(cfg, InitialCondition::uniform(0.0, 1.0));
    while (true) {
      if (sim.extinct()) break;
      const auto ev = sim.step();
      REQUIRE(ev.has_value());
    }
    CHECK_FALSE(sim.peek_next_time().has_value());
    CHECK_FALSE(sim.step().has_value());
  }
}

TEST_CASE("extinction time grows with coupling strength", "[exact_sim]") {
  auto median_extinction = [](double ev, std::size_t n, std::size_t runs) {
    std::vector<double> times;
    for (std::size_t k = 0; k < runs; ++k) {
      NetworkConfig cfg{n, RateFunction::affine(1.0), WeightDistribution::constant(ev),
                        Scaling::kMeanField, 40000 + k};
      const auto rep = extinction_time(cfg, InitialCondition::uniform(0.0, 1.0), 1e7);
      REQUIRE(rep.outcome == ExtinctionReport::Outcome::kExtinct);
      times.push_back(rep.last_spike_time);
    }
    return stats::median(times);
  };
  const double weak = median_extinction(0.5, 20, 200);
  const double strong = median_extinction(2.0, 20, 200);
  CHECK(weak < strong);
}

TEST_CASE("thinning: trivial cases", "[exact_sim]") {
  NetworkConfig silent{3, RateFunction::constant(0.0), WeightDistribution::constant(1.0),
                       Scaling::kRaw, 5};
  CHECK(run_thinning(silent, InitialCondition::uniform(0.0, 1.0), 10.0).events.empty());

  // constant rate: the bound is tight, every candidate is accepted; the log
  // is a Poisson process at the network rate
  NetworkConfig cst{1, RateFunction::constant(1.0), WeightDistribution::constant(0.0),
                    Scaling::kRaw, 6};
  const auto log = run_thinning(cst, InitialCondition::dirac(0.0), 2000.0);
  std::vector<double> gaps;
  double prev = 0;
  for (const auto& ev : log.events) {
    gaps.push_back(ev.time - prev);
    prev = ev.time;
  }
  REQUIRE(gaps.size() > 1500);
  const double d = stats::ks_statistic(gaps, [](double x) { return -std::expm1(-x); });
  CHECK(d < stats::ks_critical_one_sample(gaps.size()));
}

TEST_CASE("thinning and hazard inversion agree in law", "[exact_sim]") {
  // first-spike times of an N=5 affine network, two-sample KS at the 1% level
  const std::size_t runs = 10000;
  std::vector<double> first_inv, first_thin;
  first_inv.reserve(runs);
  first_thin.reserve(runs);
  for (std::size_t k = 0; k < runs; ++k) {
    NetworkConfig cfg{5, RateFunction::affine(1.0, 0.2), WeightDistribution::uniform(0.0, 0.5),
                      Scaling::kRaw, 770000 + k};
    ExactSimulator sim(cfg, InitialCondition::uniform(0.0, 1.0));
    const auto ev = sim.step();
    REQUIRE(ev.has_value());
    first_inv.push_back(ev->time);
    NetworkConfig cfg2 = cfg;
    cfg2.seed = 880000 + k;
    const auto log = run_thinning(cfg2, InitialCondition::uniform(0.0, 1.0), 1000.0);
    REQUIRE_FALSE(log.events.empty());
    first_thin.push_back(log.events.front().time);
  }
  const double d = stats::ks_statistic_two_sample(first_inv, first_thin);
  CHECK(d < stats::ks_critical_two_sample(runs, runs));
}

TEST_CASE("thinning and hazard inversion agree on spike counts", "[exact_sim]") {
  const std::size_t runs = 2000;
  std::vector<double> count_inv, count_thin;
  for (std::size_t k = 0; k < runs; ++k) {
    NetworkConfig cfg{5, RateFunction::affine(1.0, 0.2), WeightDistribution::uniform(0.0, 0.5),
                      Scaling::kRaw, 510000 + k};
    count_inv.push_back(
        static_cast<double>(run_exact(cfg, InitialCondition::uniform(0.0, 1.0), 5.0).log.events.size()));
    NetworkConfig cfg2 = cfg;
    cfg2.seed = 620000 + k;
    count_thin.push_back(static_cast<double>(
        run_thinning(cfg2, InitialCondition::uniform(0.0, 1.0), 5.0).events.size()));
  }
  const double d = stats::ks_statistic_two_sample(count_inv, count_thin);
  CHECK(d < stats::ks_critical_two_sample(runs, runs));
}

TEST_CASE("potentials decay exactly between events and reset on spike", "[exact_sim]") {
  NetworkConfig cfg{3, RateFunction::affine(1.0, 0.5), WeightDistribution::uniform(0.2, 0.4),
                    Scaling::kRaw, 808};
  ExactSimulator sim(cfg, InitialCondition::explicit_values({1.0, 2.0, 0.5}));
  for (int k = 0; k < 50; ++k) {
    const auto before = sim.state();
    const auto tq = sim.state().t + 0.1;
    const auto probe = sim.potentials_at(tq);
    for (std::size_t i = 0; i < 3; ++i) {
      CHECK(probe[i] == Catch::Approx(before.x[i] * std::exp(-0.1)).epsilon(1e-13));
    }
    const auto ev = sim.step();
    REQUIRE(ev.has_value());
    CHECK(sim.state().x[ev->neuron] == 0.0);
    for (std::size_t i = 0; i < 3; ++i) {
      CHECK(sim.state().budget[i] > 0);
      CHECK(sim.state().x[i] >= 0);
    }
  }
}
