#pragma once

#include <algorithm>
#include <atomic>
#include <charconv>
#include <chrono>
#include <cmath>
#include <cstdint>
#include <map>
#include <optional>
#include <sstream>
#include <stdexcept>
#include <string>
#include <thread>
#include <vector>

#include <json.hpp>

#include "spikefield/approx_sim.hpp"
#include "spikefield/config.hpp"
#include "spikefield/constant_rate.hpp"
#include "spikefield/exact_sim.hpp"
#include "spikefield/mckean_vlasov.hpp"
#include "spikefield/stationary.hpp"
#include "spikefield/stats.hpp"
#include "spikefield/version.hpp"

namespace spikefield {

using json = nlohmann::json;

struct ConfigError : std::runtime_error {
  using std::runtime_error::runtime_error;
};
struct NumericalError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

// Exit codes of the CLI.
inline constexpr int kExitOk = 0;
inline constexpr int kExitConfig = 2;
inline constexpr int kExitNumerical = 3;
inline constexpr int kExitIo = 4;

inline std::string format_double(double v) {
  char buf[40];
  auto res = std::to_chars(buf, buf + sizeof(buf), v);
  return std::string(buf, res.ptr);
}

enum class ExperimentKind {
  kPhaseAffine,
  kExtinctionScaling,
  kBistabilityQuadratic,
  kFixedPoints,
  kConstantRateCheck,
  kMckeanCompare,
  kSimulate,
};

inline const std::map<std::string, ExperimentKind>& experiment_names() {
  static const std::map<std::string, ExperimentKind> names = {
      {"phase-affine", ExperimentKind::kPhaseAffine},
      {"extinction-scaling", ExperimentKind::kExtinctionScaling},
      {"bistability-quadratic", ExperimentKind::kBistabilityQuadratic},
      {"fixed-points", ExperimentKind::kFixedPoints},
      {"constant-rate-check", ExperimentKind::kConstantRateCheck},
      {"mckean-compare", ExperimentKind::kMckeanCompare},
      {"simulate", ExperimentKind::kSimulate},
  };
  return names;
}

inline std::string experiment_name(ExperimentKind k) {
  for (const auto& [name, kind] : experiment_names()) {
    if (kind == k) return name;
  }
  return "?";
}

// ---------------------------------------------------------------------------
// Experiment specification
// ---------------------------------------------------------------------------

struct ExperimentSpec {
  ExperimentKind kind = ExperimentKind::kFixedPoints;
  std::uint64_t seed = 1;
  std::size_t replicas = 10;
  std::size_t threads = 0;  // 0: --threads / SPIKEFIELD_THREADS / hardware
  std::string output;

  RateFunction rate = RateFunction::affine(1.0);
  // "constant-mean": Constant{E(V)}; "uniform-mean": Uniform{0, 2 E(V)};
  // "explicit": the weights field below
  std::string weights_mode = "constant-mean";
  std::optional<WeightDistribution> weights_explicit;
  Scaling scaling = Scaling::kMeanField;
  InitialCondition init = InitialCondition::uniform(0.0, 1.0);
  double init_std = 0.2;

  std::vector<double> ev_grid;
  std::vector<std::size_t> n_grid;
  std::vector<double> v0_grid;
  std::vector<double> lambda_grid;
  std::vector<double> xi_grid;

  double dt = 0.01;
  double horizon = 100.0;
  bool window_given = false;
  double window_lo = 0.0, window_hi = 0.0;
  double theta = 0.05;
  double beta_min = 1e-4, beta_max = 100.0;
  std::size_t beta_grid_points = 512;
  double extinction_horizon = 30000.0;
  std::size_t samples = 20000;
  double tolerance = 0.1;
  std::string tolerance_scale = "beta-star";  // or "absolute"
  std::string method = "exact";               // simulate: exact | thinning | discrete
  std::vector<double> sample_times;
  PicardOptions picard;

  double window_lo_effective() const { return window_given ? window_lo : horizon - 10.0; }
  double window_hi_effective() const { return window_given ? window_hi : horizon; }

  WeightDistribution weights_for(double ev) const {
    if (weights_mode == "uniform-mean") return WeightDistribution::uniform(0.0, 2.0 * ev);
    if (weights_mode == "explicit") return *weights_explicit;
    return WeightDistribution::constant(ev);
  }

  json resolved() const;
};

namespace exp_detail {

inline const json* find(const json& j, const std::string& key) {
  auto it = j.find(key);
  return it == j.end() ? nullptr : &*it;
}

inline double need_num(const json& j, const std::string& path, const std::string& key) {
  const json* v = find(j, key);
  if (!v || !v->is_number()) throw ConfigError(path + "/" + key + ": expected a number");
  return v->get<double>();
}

inline double opt_num(const json& j, const std::string& path, const std::string& key,
                      double fallback) {
  const json* v = find(j, key);
  if (!v) return fallback;
  if (!v->is_number()) throw ConfigError(path + "/" + key + ": expected a number");
  return v->get<double>();
}

inline std::string opt_str(const json& j, const std::string& path, const std::string& key,
                           const std::string& fallback) {
  const json* v = find(j, key);
  if (!v) return fallback;
  if (!v->is_string()) throw ConfigError(path + "/" + key + ": expected a string");
  return v->get<std::string>();
}

inline std::vector<double> num_array(const json& v, const std::string& path) {
  if (!v.is_array()) throw ConfigError(path + ": expected an array of numbers");
  std::vector<double> out;
  for (const auto& e : v) {
    if (!e.is_number()) throw ConfigError(path + ": expected an array of numbers");
    out.push_back(e.get<double>());
  }
  return out;
}

inline RateFunction parse_rate(const json& j, const std::string& path) {
  const std::string kind = opt_str(j, path, "kind", "");
  try {
    if (kind == "constant") return RateFunction::constant(need_num(j, path, "rate"));
    if (kind == "affine") {
      return RateFunction::affine(need_num(j, path, "slope"), opt_num(j, path, "intercept", 0.0));
    }
    if (kind == "power") {
      return RateFunction::power(need_num(j, path, "coef"), need_num(j, path, "exponent"),
                                 opt_num(j, path, "intercept", 0.0));
    }
  } catch (const std::invalid_argument& e) {
    throw ConfigError(path + ": " + e.what());
  }
  throw ConfigError(path + "/kind: expected constant | affine | power");
}

inline InitialCondition parse_init(const json& j, const std::string& path) {
  const std::string kind = opt_str(j, path, "kind", "");
  try {
    if (kind == "dirac") return InitialCondition::dirac(need_num(j, path, "x"));
    if (kind == "uniform") {
      return InitialCondition::uniform(need_num(j, path, "lo"), need_num(j, path, "hi"));
    }
    if (kind == "uniform-around") {
      return InitialCondition::uniform_around(need_num(j, path, "center"),
                                              opt_num(j, path, "std", 0.2));
    }
  } catch (const std::invalid_argument& e) {
    throw ConfigError(path + ": " + e.what());
  }
  throw ConfigError(path + "/kind: expected dirac | uniform | uniform-around");
}

}  // namespace exp_detail

inline ExperimentSpec parse_experiment_spec(const json& root) {
  using namespace exp_detail;
  if (!root.is_object()) throw ConfigError("/: expected a JSON object");
  ExperimentSpec s;

  const std::string name = opt_str(root, "", "experiment", "");
  const auto it = experiment_names().find(name);
  if (it == experiment_names().end()) {
    throw ConfigError("/experiment: unknown experiment '" + name + "'");
  }
  s.kind = it->second;

  if (const json* v = find(root, "seed")) {
    if (!v->is_number_integer() || (v->is_number_integer() && !v->is_number_unsigned() &&
                                    v->get<std::int64_t>() < 0)) {
      throw ConfigError("/seed: expected a non-negative integer");
    }
    s.seed = v->get<std::uint64_t>();
  }
  s.replicas = static_cast<std::size_t>(opt_num(root, "", "replicas", 10));
  if (s.replicas < 1) throw ConfigError("/replicas: must be >= 1");
  s.threads = static_cast<std::size_t>(opt_num(root, "", "threads", 0));
  s.output = opt_str(root, "", "output", "");

  if (const json* v = find(root, "rate")) s.rate = parse_rate(*v, "/rate");
  if (const json* v = find(root, "init")) s.init = parse_init(*v, "/init");

  const std::string scaling = opt_str(root, "", "scaling", "mean-field");
  if (scaling == "mean-field") {
    s.scaling = Scaling::kMeanField;
  } else if (scaling == "raw") {
    s.scaling = Scaling::kRaw;
  } else {
    throw ConfigError("/scaling: expected mean-field | raw");
  }

  if (const json* v = find(root, "weights")) {
    const std::string kind = opt_str(*v, "/weights", "kind", "");
    if (kind == "constant-mean" || kind == "uniform-mean") {
      s.weights_mode = kind;
    } else if (kind == "constant") {
      s.weights_mode = "explicit";
      s.weights_explicit = WeightDistribution::constant(need_num(*v, "/weights", "w"));
    } else if (kind == "uniform") {
      s.weights_mode = "explicit";
      s.weights_explicit =
          WeightDistribution::uniform(need_num(*v, "/weights", "lo"), need_num(*v, "/weights", "hi"));
    } else {
      throw ConfigError("/weights/kind: expected constant-mean | uniform-mean | constant | uniform");
    }
  }

  if (const json* g = find(root, "grid")) {
    if (!g->is_object()) throw ConfigError("/grid: expected an object");
    if (const json* v = find(*g, "ev")) s.ev_grid = num_array(*v, "/grid/ev");
    if (const json* v = find(*g, "v0")) s.v0_grid = num_array(*v, "/grid/v0");
    if (const json* v = find(*g, "lambda")) s.lambda_grid = num_array(*v, "/grid/lambda");
    if (const json* v = find(*g, "xi")) s.xi_grid = num_array(*v, "/grid/xi");
    if (const json* v = find(*g, "n")) {
      for (double x : num_array(*v, "/grid/n")) {
        if (x < 1) throw ConfigError("/grid/n: entries must be >= 1");
        s.n_grid.push_back(static_cast<std::size_t>(x));
      }
    }
  }

  if (const json* nm = find(root, "numerics")) {
    if (!nm->is_object()) throw ConfigError("/numerics: expected an object");
    s.dt = opt_num(*nm, "/numerics", "dt", s.dt);
    s.horizon = opt_num(*nm, "/numerics", "horizon", s.horizon);
    s.theta = opt_num(*nm, "/numerics", "theta", s.theta);
    s.beta_min = opt_num(*nm, "/numerics", "beta_min", s.beta_min);
    s.beta_max = opt_num(*nm, "/numerics", "beta_max", s.beta_max);
    s.beta_grid_points =
        static_cast<std::size_t>(opt_num(*nm, "/numerics", "beta_grid_points", 512));
    s.extinction_horizon =
        opt_num(*nm, "/numerics", "extinction_horizon", s.extinction_horizon);
    s.samples = static_cast<std::size_t>(opt_num(*nm, "/numerics", "samples", 20000));
    s.tolerance = opt_num(*nm, "/numerics", "tolerance", s.tolerance);
    s.tolerance_scale = opt_str(*nm, "/numerics", "tolerance_scale", s.tolerance_scale);
    s.method = opt_str(*nm, "/numerics", "method", s.method);
    s.init_std = opt_num(*nm, "/numerics", "init_std", s.init_std);
    if (const json* v = find(*nm, "window")) {
      const auto w = num_array(*v, "/numerics/window");
      if (w.size() != 2 || !(w[0] <= w[1])) {
        throw ConfigError("/numerics/window: expected [lo, hi] with lo <= hi");
      }
      s.window_given = true;
      s.window_lo = w[0];
      s.window_hi = w[1];
    }
    if (const json* v = find(*nm, "sample_times")) {
      s.sample_times = num_array(*v, "/numerics/sample_times");
    }
    if (const json* p = find(*nm, "picard")) {
      if (!p->is_object()) throw ConfigError("/numerics/picard: expected an object");
      s.picard.grid_h = opt_num(*p, "/numerics/picard", "grid_h", s.picard.grid_h);
      s.picard.horizon = opt_num(*p, "/numerics/picard", "horizon", s.picard.horizon);
      s.picard.particles =
          static_cast<std::size_t>(opt_num(*p, "/numerics/picard", "particles", 1000));
      s.picard.tol = opt_num(*p, "/numerics/picard", "tol", s.picard.tol);
      s.picard.max_iter =
          static_cast<std::size_t>(opt_num(*p, "/numerics/picard", "max_iter", 30));
      s.picard.cutoff = opt_num(*p, "/numerics/picard", "cutoff", 0.0);
    }
  }

  // per-experiment requirements
  switch (s.kind) {
    case ExperimentKind::kPhaseAffine:
      if (s.rate.kind() != RateKind::kAffine) {
        throw ConfigError("/rate: phase-affine requires an affine rate");
      }
      if (s.ev_grid.empty()) throw ConfigError("/grid/ev: phase-affine needs a non-empty E(V) grid");
      if (s.n_grid.empty()) s.n_grid = {500};
      break;
    case ExperimentKind::kExtinctionScaling:
      if (s.rate.value_at_zero() > 0) {
        throw ConfigError("/rate: extinction-scaling requires b(0) = 0");
      }
      if (s.ev_grid.empty()) throw ConfigError("/grid/ev: extinction-scaling needs an E(V) grid");
      if (s.n_grid.empty()) throw ConfigError("/grid/n: extinction-scaling needs an N grid");
      break;
    case ExperimentKind::kBistabilityQuadratic:
      if (s.rate.kind() != RateKind::kPower || !(s.rate.exponent() > 1)) {
        throw ConfigError("/rate: bistability-quadratic requires a power rate with exponent > 1");
      }
      if (s.ev_grid.empty()) throw ConfigError("/grid/ev: bistability-quadratic needs an E(V) grid");
      if (s.v0_grid.empty()) throw ConfigError("/grid/v0: bistability-quadratic needs a v0 grid");
      if (s.n_grid.empty()) s.n_grid = {500};
      break;
    case ExperimentKind::kFixedPoints:
      if (s.ev_grid.empty()) throw ConfigError("/grid/ev: fixed-points needs an E(V) grid");
      break;
    case ExperimentKind::kConstantRateCheck:
      if (s.rate.kind() != RateKind::kConstant) {
        throw ConfigError("/rate: constant-rate-check requires a constant rate");
      }
      if (s.n_grid.empty()) s.n_grid = {2, 5, 20};
      if (s.lambda_grid.empty()) s.lambda_grid = {0.5, 1.0, 2.0};
      if (s.xi_grid.empty()) s.xi_grid = {0.0, 0.5, 1.0, 2.0};
      break;
    case ExperimentKind::kMckeanCompare:
      if (s.scaling != Scaling::kMeanField) {
        throw ConfigError("/scaling: mckean-compare requires mean-field scaling");
      }
      if (s.ev_grid.empty()) throw ConfigError("/grid/ev: mckean-compare needs one E(V) value");
      if (s.n_grid.empty()) s.n_grid = {5000};
      break;
    case ExperimentKind::kSimulate:
      if (s.method != "exact" && s.method != "thinning" && s.method != "discrete") {
        throw ConfigError("/numerics/method: expected exact | thinning | discrete");
      }
      if (s.ev_grid.empty() && s.weights_mode != "explicit") {
        throw ConfigError("/grid/ev: simulate needs E(V) (or explicit weights)");
      }
      if (s.n_grid.empty()) s.n_grid = {10};
      break;
  }
  return s;
}

inline ExperimentSpec parse_experiment_spec(const std::string& text) {
  json j;
  try {
    j = json::parse(text);
  } catch (const json::parse_error& e) {
    throw ConfigError(std::string("config is not valid JSON: ") + e.what());
  }
  return parse_experiment_spec(j);
}

inline json ExperimentSpec::resolved() const {
  json j;
  j["experiment"] = experiment_name(kind);
  j["seed"] = seed;
  j["replicas"] = replicas;
  j["scaling"] = scaling == Scaling::kMeanField ? "mean-field" : "raw";

  json r;
  switch (rate.kind()) {
    case RateKind::kConstant:
      r = {{"kind", "constant"}, {"rate", rate.constant_rate()}};
      break;
    case RateKind::kAffine:
      r = {{"kind", "affine"}, {"slope", rate.slope()}, {"intercept", rate.intercept()}};
      break;
    case RateKind::kPower:
      r = {{"kind", "power"},
           {"coef", rate.coef()},
           {"exponent", rate.exponent()},
           {"intercept", rate.intercept()}};
      break;
  }
  j["rate"] = r;

  if (weights_mode == "explicit") {
    const auto& w = *weights_explicit;
    if (w.kind() == WeightKind::kConstant) {
      j["weights"] = {{"kind", "constant"}, {"w", w.lo()}};
    } else {
      j["weights"] = {{"kind", "uniform"}, {"lo", w.lo()}, {"hi", w.hi()}};
    }
  } else {
    j["weights"] = {{"kind", weights_mode}};
  }

  json ic;
  switch (init.kind()) {
    case InitKind::kDirac:
      ic = {{"kind", "dirac"}, {"x", init.param_a()}};
      break;
    case InitKind::kUniform:
      ic = {{"kind", "uniform"}, {"lo", init.param_a()}, {"hi", init.param_b()}};
      break;
    case InitKind::kUniformAround:
      ic = {{"kind", "uniform-around"}, {"center", init.param_a()}, {"std", init.param_b()}};
      break;
    case InitKind::kExplicit:
      ic = {{"kind", "uniform"}, {"lo", 0.0}, {"hi", 0.0}};  // explicit vectors are API-only
      break;
  }
  j["init"] = ic;

  json g;
  if (!ev_grid.empty()) g["ev"] = ev_grid;
  if (!n_grid.empty()) g["n"] = n_grid;
  if (!v0_grid.empty()) g["v0"] = v0_grid;
  if (!lambda_grid.empty()) g["lambda"] = lambda_grid;
  if (!xi_grid.empty()) g["xi"] = xi_grid;
  j["grid"] = g;

  json nm;
  nm["dt"] = dt;
  nm["horizon"] = horizon;
  nm["window"] = {window_lo_effective(), window_hi_effective()};
  nm["theta"] = theta;
  nm["beta_min"] = beta_min;
  nm["beta_max"] = beta_max;
  nm["beta_grid_points"] = beta_grid_points;
  nm["extinction_horizon"] = extinction_horizon;
  nm["samples"] = samples;
  nm["tolerance"] = tolerance;
  nm["tolerance_scale"] = tolerance_scale;
  nm["method"] = method;
  nm["init_std"] = init_std;
  if (!sample_times.empty()) nm["sample_times"] = sample_times;
  nm["picard"] = {{"grid_h", picard.grid_h}, {"horizon", picard.horizon},
                  {"particles", picard.particles}, {"tol", picard.tol},
                  {"max_iter", picard.max_iter}, {"cutoff", picard.cutoff}};
  j["numerics"] = nm;
  return j;
}

// ---------------------------------------------------------------------------
// Deterministic worker pool: tasks indexed 0..count-1, each owning a seed
// derived from (spec seed, task index); output assembled in index order.
// ---------------------------------------------------------------------------

inline std::size_t resolve_threads(std::size_t requested) {
  if (requested > 0) return requested;
  if (const char* env = std::getenv("SPIKEFIELD_THREADS")) {
    const long v = std::atol(env);
    if (v > 0) return static_cast<std::size_t>(v);
  }
  const unsigned hw = std::thread::hardware_concurrency();
  return hw > 0 ? hw : 1;
}

template <typename Fn>
void parallel_for_indexed(std::size_t count, std::size_t threads, Fn&& fn) {
  threads = std::min(threads, count);
  if (threads <= 1) {
    for (std::size_t i = 0; i < count; ++i) fn(i);
    return;
  }
  std::atomic<std::size_t> next{0};
  std::vector<std::thread> pool;
  pool.reserve(threads);
  for (std::size_t t = 0; t < threads; ++t) {
    pool.emplace_back([&] {
      while (true) {
        const std::size_t i = next.fetch_add(1);
        if (i >= count) break;
        fn(i);
      }
    });
  }
  for (auto& th : pool) th.join();
}

inline std::uint64_t task_seed(std::uint64_t root_seed, std::size_t grid_index,
                               std::size_t replica) {
  return RngStream(root_seed).split(0x5000 + grid_index).split(replica).seed();
}

// ---------------------------------------------------------------------------
// CSV assembly
// ---------------------------------------------------------------------------

class CsvBuilder {
 public:
  CsvBuilder(const json& resolved_spec, std::initializer_list<std::string> columns) {
    buf_ += "# spikefield ";
    buf_ += kVersion;
    buf_ += " spec=";
    buf_ += resolved_spec.dump();
    buf_ += '\n';
    bool first = true;
    for (const auto& c : columns) {
      if (!first) buf_ += ',';
      buf_ += c;
      first = false;
    }
    buf_ += '\n';
  }

  void cell(const std::string& v) {
    if (!row_open_) {
      row_open_ = true;
    } else {
      buf_ += ',';
    }
    buf_ += v;
  }
  void cell(double v) { cell(format_double(v)); }
  void cell(std::uint64_t v) { cell(std::to_string(v)); }
  void end_row() {
    buf_ += '\n';
    row_open_ = false;
  }

  const std::string& str() const { return buf_; }

 private:
  std::string buf_;
  bool row_open_ = false;
};

// ---------------------------------------------------------------------------
// Runners
// ---------------------------------------------------------------------------

struct ExperimentOutput {
  std::string csv;       // empty when the command is JSON-only
  json summary;          // null when the command is CSV-only
  bool pass = true;      // gate-style commands set this
  bool numerical_failure = false;
  std::string log;       // human-readable notes (timings, warnings)
};

namespace exp_detail {

inline double beta_star_or_zero(const RateFunction& rate, double ev, const ExperimentSpec& s) {
  const auto sols =
      find_stationary(rate, ev, s.beta_min, s.beta_max, s.beta_grid_points, 1e-9);
  double best = 0;
  for (const auto& sol : sols) {
    if (sol.kind == SolutionKind::kNonTrivial) best = std::max(best, sol.beta);
  }
  return best;
}

inline json stability_json(Stability st) {
  switch (st) {
    case Stability::kStable:
      return "stable";
    case Stability::kUnstable:
      return "unstable";
    case Stability::kUndetermined:
      return "undetermined";
    case Stability::kNotApplicable:
    default:
      return "not-applicable";
  }
}

inline json ext_json(const ExtReal& v) {
  if (v.is_infinite()) return "inf";
  return v.finite_value();
}

}  // namespace exp_detail

inline ExperimentOutput run_phase_affine(const ExperimentSpec& s) {
  const std::size_t n = s.n_grid.front();
  const std::size_t tasks = s.ev_grid.size() * s.replicas;
  std::vector<double> beta_hat(tasks);
  std::vector<double> beta_star(s.ev_grid.size());
  for (std::size_t g = 0; g < s.ev_grid.size(); ++g) {
    beta_star[g] = exp_detail::beta_star_or_zero(s.rate, s.ev_grid[g], s);
  }
  parallel_for_indexed(tasks, resolve_threads(s.threads), [&](std::size_t idx) {
    const std::size_t g = idx / s.replicas, r = idx % s.replicas;
    NetworkConfig cfg{n, s.rate, s.weights_for(s.ev_grid[g]), s.scaling,
                      task_seed(s.seed, g, r)};
    const auto out = run_discrete(cfg, s.init, s.dt, s.horizon);
    beta_hat[idx] = averaged_activity(out, s.window_lo_effective(), s.window_hi_effective());
  });

  CsvBuilder csv(s.resolved(), {"experiment", "ev", "n", "replica", "seed", "beta_hat",
                                "beta_star"});
  json per_ev = json::array();
  for (std::size_t g = 0; g < s.ev_grid.size(); ++g) {
    std::vector<double> vals;
    for (std::size_t r = 0; r < s.replicas; ++r) {
      const std::size_t idx = g * s.replicas + r;
      csv.cell(std::string("phase-affine"));
      csv.cell(s.ev_grid[g]);
      csv.cell(n);
      csv.cell(r);
      csv.cell(task_seed(s.seed, g, r));
      csv.cell(beta_hat[idx]);
      csv.cell(beta_star[g]);
      csv.end_row();
      vals.push_back(beta_hat[idx]);
    }
    per_ev.push_back({{"ev", s.ev_grid[g]},
                      {"beta_hat_mean", stats::mean(vals)},
                      {"beta_hat_stderr", stats::std_error(vals)},
                      {"beta_star", beta_star[g]}});
  }
  ExperimentOutput out;
  out.csv = csv.str();
  out.summary = {{"spec", s.resolved()},
                 {"version", std::string(kVersion)},
                 {"window", {s.window_lo_effective(), s.window_hi_effective()}},
                 {"window_note", "activity window defaults to [T-10, T]; "
                                 "beta_hat is the time-averaged mean firing rate"},
                 {"per_ev", per_ev}};
  return out;
}

inline ExperimentOutput run_extinction_scaling(const ExperimentSpec& s) {
  struct Row {
    ExtinctionReport rep;
  };
  const std::size_t grid = s.n_grid.size() * s.ev_grid.size();
  const std::size_t tasks = grid * s.replicas;
  std::vector<Row> rows(tasks);
  parallel_for_indexed(tasks, resolve_threads(s.threads), [&](std::size_t idx) {
    const std::size_t g = idx / s.replicas, r = idx % s.replicas;
    const std::size_t gi = g / s.ev_grid.size();
    const std::size_t ge = g % s.ev_grid.size();
    NetworkConfig cfg{s.n_grid[gi], s.rate, s.weights_for(s.ev_grid[ge]), s.scaling,
                      task_seed(s.seed, g, r)};
    rows[idx].rep = extinction_time(cfg, s.init, s.extinction_horizon);
  });

  CsvBuilder csv(s.resolved(), {"experiment", "n", "ev", "replica", "seed", "outcome",
                                "extinction_time", "total_spikes"});
  json per_point = json::array();
  for (std::size_t g = 0; g < grid; ++g) {
    const std::size_t gi = g / s.ev_grid.size(), ge = g % s.ev_grid.size();
    std::vector<double> times;
    std::size_t horizon_exceeded = 0, never = 0;
    for (std::size_t r = 0; r < s.replicas; ++r) {
      const auto& rep = rows[g * s.replicas + r].rep;
      csv.cell(std::string("extinction-scaling"));
      csv.cell(s.n_grid[gi]);
      csv.cell(s.ev_grid[ge]);
      csv.cell(r);
      csv.cell(task_seed(s.seed, g, r));
      switch (rep.outcome) {
        case ExtinctionReport::Outcome::kExtinct:
          csv.cell(std::string("extinct"));
          csv.cell(rep.last_spike_time);
          times.push_back(rep.last_spike_time);
          break;
        case ExtinctionReport::Outcome::kHorizonExceeded:
          csv.cell(std::string("horizon-exceeded"));
          csv.cell(std::string(""));
          ++horizon_exceeded;
          break;
        case ExtinctionReport::Outcome::kNeverExtinguishes:
          csv.cell(std::string("never-extinguishes"));
          csv.cell(std::string(""));
          ++never;
          break;
      }
      csv.cell(rep.total_spikes);
      csv.end_row();
    }
    json entry = {{"n", s.n_grid[gi]},
                  {"ev", s.ev_grid[ge]},
                  {"extinct", times.size()},
                  {"horizon_exceeded", horizon_exceeded},
                  {"never_extinguishes", never}};
    if (!times.empty()) entry["median"] = stats::median(times);
    if (s.replicas >= 4 && times.size() >= 4) {
      entry["q25"] = stats::quantile(times, 0.25);
      entry["q75"] = stats::quantile(times, 0.75);
    }
    per_point.push_back(entry);
  }
  ExperimentOutput out;
  out.csv = csv.str();
  out.summary = {{"spec", s.resolved()},
                 {"version", std::string(kVersion)},
                 {"per_point", per_point}};
  return out;
}

inline ExperimentOutput run_bistability_quadratic(const ExperimentSpec& s) {
  const std::size_t n = s.n_grid.front();
  const double theta = s.theta;
  const double a = s.rate.exponent();
  const double lambda = s.rate.coef();

  auto classify_v0 = [&](double ev, double v0, std::size_t grid_index, std::size_t salt,
                         std::vector<double>* hats) {
    // returns (#sustained, #trivial)
    std::pair<std::size_t, std::size_t> counts{0, 0};
    std::vector<double> local(s.replicas);
    parallel_for_indexed(s.replicas, resolve_threads(s.threads), [&](std::size_t r) {
      NetworkConfig cfg{n, s.rate, s.weights_for(ev), s.scaling,
                        task_seed(s.seed, grid_index + salt, r)};
      const auto run = run_discrete(cfg, InitialCondition::uniform_around(v0, s.init_std), s.dt,
                                    s.horizon);
      local[r] = averaged_activity(run, s.window_lo_effective(), s.window_hi_effective());
    });
    for (double h : local) {
      if (h > theta) {
        ++counts.first;
      } else {
        ++counts.second;
      }
    }
    if (hats) *hats = local;
    return counts;
  };

  CsvBuilder csv(s.resolved(), {"experiment", "ev", "v0", "replica", "seed", "beta_hat",
                                "class"});
  json per_ev = json::array();
  for (std::size_t ge = 0; ge < s.ev_grid.size(); ++ge) {
    const double ev = s.ev_grid[ge];
    const double rho = lambda * std::pow(ev, a);
    std::vector<std::pair<double, std::pair<std::size_t, std::size_t>>> scan;
    for (std::size_t gv = 0; gv < s.v0_grid.size(); ++gv) {
      const std::size_t grid_index = ge * s.v0_grid.size() + gv;
      std::vector<double> hats;
      const auto counts = classify_v0(ev, s.v0_grid[gv], grid_index, 0, &hats);
      scan.emplace_back(s.v0_grid[gv], counts);
      for (std::size_t r = 0; r < s.replicas; ++r) {
        csv.cell(std::string("bistability-quadratic"));
        csv.cell(ev);
        csv.cell(s.v0_grid[gv]);
        csv.cell(r);
        csv.cell(task_seed(s.seed, grid_index, r));
        csv.cell(hats[r]);
        csv.cell(std::string(hats[r] > theta ? "sustained" : "trivial"));
        csv.end_row();
      }
    }

    // separatrix: bisect between the largest all-trivial v0 below the
    // smallest all-sustained v0; a mixed band stays an interval
    json sep;
    double v_hi = 0, v_lo = -1;
    bool have_hi = false;
    for (const auto& [v0, c] : scan) {
      if (c.first == s.replicas && !have_hi) {
        v_hi = v0;
        have_hi = true;
      }
      if (c.second == s.replicas && (!have_hi || v0 < v_hi)) v_lo = std::max(v_lo, v0);
    }
    if (!have_hi) {
      sep = nullptr;  // everything trivial
    } else if (v_lo < 0) {
      sep = {{"lo", 0.0}, {"hi", v_hi}, {"mixed", false}};
    } else {
      bool mixed = false;
      for (int it = 0; it < 12 && (v_hi - v_lo) > 1e-3 * std::max(1.0, v_hi); ++it) {
        const double mid = 0.5 * (v_lo + v_hi);
        const auto c = classify_v0(ev, mid, s.ev_grid.size() * s.v0_grid.size() + ge,
                                   0x100 + static_cast<std::size_t>(it), nullptr);
        if (c.second == s.replicas) {
          v_lo = mid;
        } else if (c.first == s.replicas) {
          v_hi = mid;
        } else {
          mixed = true;
          break;
        }
      }
      sep = {{"lo", v_lo}, {"hi", v_hi}, {"mixed", mixed}};
    }

    json entry = {{"ev", ev}, {"rho", rho}, {"theta", theta}, {"separatrix", sep}};
    const auto diag = superlinear_critical(a, ev);
    entry["rho_c"] = diag.rho_c;
    entry["beta_c"] = diag.beta_c;
    const auto br = superlinear_branches(a, ev, rho, &diag);
    if (br.kind == SuperlinearBranches::Kind::kTwo) {
      entry["beta_minus"] = br.beta_minus;
      entry["beta_plus"] = br.beta_plus;
    } else if (br.kind == SuperlinearBranches::Kind::kCritical) {
      entry["beta_minus"] = br.beta_minus;
      entry["beta_plus"] = br.beta_plus;
    }
    per_ev.push_back(entry);
  }
  ExperimentOutput out;
  out.csv = csv.str();
  out.summary = {{"spec", s.resolved()},
                 {"version", std::string(kVersion)},
                 {"theta_note", "sustained iff time-averaged firing rate over the window "
                                "exceeds theta; threshold is this artifact's choice"},
                 {"per_ev", per_ev}};
  return out;
}

inline ExperimentOutput run_fixed_points(const ExperimentSpec& s) {
  json entries = json::array();
  std::vector<double> lambdas = s.lambda_grid;
  if (lambdas.empty()) lambdas = {-1.0};  // marker: use the configured rate as-is
  for (double lam : lambdas) {
    RateFunction rate = s.rate;
    if (lam > 0) {
      switch (s.rate.kind()) {
        case RateKind::kConstant:
          rate = RateFunction::constant(lam);
          break;
        case RateKind::kAffine:
          rate = RateFunction::affine(lam, s.rate.intercept());
          break;
        case RateKind::kPower:
          rate = RateFunction::power(lam, s.rate.exponent(), s.rate.intercept());
          break;
      }
    }
    for (double ev : s.ev_grid) {
      json entry;
      entry["ev"] = ev;
      if (lam > 0) entry["lambda"] = lam;
      const ExtReal l0 = rate.slope_at_zero();
      entry["lambda0"] = exp_detail::ext_json(l0);
      entry["rho"] = l0.is_infinite()
                         ? json("inf")
                         : json(l0.finite_value() * ev);
      entry["trivial_stability"] =
          exp_detail::stability_json(classify_trivial_stability(rate, ev));
      json roots = json::array();
      for (const auto& sol :
           find_stationary(rate, ev, s.beta_min, s.beta_max, s.beta_grid_points, 1e-9)) {
        roots.push_back({{"beta", sol.beta},
                         {"alpha", sol.alpha},
                         {"c", sol.c},
                         {"kind", sol.kind == SolutionKind::kTrivial ? "trivial" : "non-trivial"},
                         {"stability", exp_detail::stability_json(sol.stability)}});
      }
      entry["roots"] = roots;
      if (rate.kind() == RateKind::kPower && rate.exponent() > 1 && rate.intercept() == 0) {
        const auto diag = superlinear_critical(rate.exponent(), ev);
        entry["rho_c"] = diag.rho_c;
        entry["beta_c"] = diag.beta_c;
      }
      entries.push_back(entry);
    }
  }
  ExperimentOutput out;
  out.summary = {{"spec", s.resolved()},
                 {"version", std::string(kVersion)},
                 {"entries", entries}};
  return out;
}

inline ExperimentOutput run_constant_rate_check(const ExperimentSpec& s) {
  json rows = json::array();
  struct Cell {
    json j;
  };
  const std::size_t tasks = s.n_grid.size() * s.lambda_grid.size();
  std::vector<Cell> cells(tasks);
  parallel_for_indexed(tasks, resolve_threads(s.threads), [&](std::size_t idx) {
    const std::size_t ni = idx / s.lambda_grid.size();
    const std::size_t li = idx % s.lambda_grid.size();
    const std::size_t n = s.n_grid[ni];
    const double lam = s.lambda_grid[li];
    const WeightDistribution base = s.weights_mode == "explicit"
                                        ? *s.weights_explicit
                                        : WeightDistribution::uniform(0.0, 1.0);
    // the formulas below are stated for the effective kick law, so fold the
    // mean-field 1/N into the weight distribution itself
    const double scale =
        s.scaling == Scaling::kMeanField ? 1.0 / static_cast<double>(n) : 1.0;
    const WeightDistribution w =
        base.kind() == WeightKind::kConstant
            ? WeightDistribution::constant(base.lo() * scale)
            : WeightDistribution::uniform(base.lo() * scale, base.hi() * scale);
    RngStream rng(task_seed(s.seed, idx, 0));
    std::vector<double> x1(s.samples);
    std::vector<std::vector<double>> lap(s.xi_grid.size(), std::vector<double>(s.samples));
    for (std::size_t k = 0; k < s.samples; ++k) {
      const auto x = backward_coupling_sample(n, lam, w, Scaling::kRaw, rng);
      x1[k] = x[0];
      for (std::size_t q = 0; q < s.xi_grid.size(); ++q) {
        lap[q][k] = std::exp(-s.xi_grid[q] * x[0]);
      }
    }
    auto z_score = [](double mc, double se, double formula) {
      const double diff = mc - formula;
      if (se == 0) return diff == 0 ? 0.0 : std::numeric_limits<double>::infinity();
      return diff / se;
    };
    const double mean_mc = stats::mean(x1);
    const double mean_se = stats::std_error(x1);
    const double mean_formula = equilibrium_mean(n, lam, w.mean());
    std::vector<double> zero01(s.samples);
    for (std::size_t k = 0; k < s.samples; ++k) zero01[k] = x1[k] == 0.0 ? 1.0 : 0.0;
    const double atom_mc = stats::mean(zero01);
    const double atom_se = stats::std_error(zero01);
    const double atom_formula = atom_at_zero(n);
    json laps = json::array();
    for (std::size_t q = 0; q < s.xi_grid.size(); ++q) {
      const double mc = stats::mean(lap[q]);
      const double se = stats::std_error(lap[q]);
      const double formula = laplace_transform(n, lam, w, s.xi_grid[q]);
      laps.push_back({{"xi", s.xi_grid[q]},
                      {"mc", mc},
                      {"formula", formula},
                      {"z", z_score(mc, se, formula)}});
    }
    cells[idx].j = {{"n", n},
                    {"lambda", lam},
                    {"samples", s.samples},
                    {"mean_mc", mean_mc},
                    {"mean_formula", mean_formula},
                    {"z_mean", z_score(mean_mc, mean_se, mean_formula)},
                    {"atom_mc", atom_mc},
                    {"atom_formula", atom_formula},
                    {"z_atom", z_score(atom_mc, atom_se, atom_formula)},
                    {"laplace", laps}};
  });
  for (auto& c : cells) rows.push_back(std::move(c.j));
  ExperimentOutput out;
  out.summary = {{"spec", s.resolved()},
                 {"version", std::string(kVersion)},
                 {"rows", rows}};
  return out;
}

inline ExperimentOutput run_mckean_compare(const ExperimentSpec& s) {
  const double ev = s.ev_grid.front();
  ExperimentOutput out;
  const auto report = picard_iterate(s.rate, ev, s.init, s.picard, s.seed);
  NetworkConfig cfg{s.n_grid.front(), s.rate, s.weights_for(ev), Scaling::kMeanField,
                    RngStream(s.seed).split(0x7000).seed()};
  const auto particle = run_discrete(cfg, s.init, s.dt,
                                     std::min(s.horizon, report.trajectory.horizon()));
  const double distance = compare_with_particles(report.trajectory, particle);
  const double beta_star = exp_detail::beta_star_or_zero(s.rate, ev, s);
  double tol_eff = s.tolerance;
  if (s.tolerance_scale == "beta-star" && beta_star > 0) tol_eff = s.tolerance * beta_star;
  out.pass = report.converged && distance < tol_eff;
  out.numerical_failure = !report.converged;
  out.summary = {{"spec", s.resolved()},
                 {"version", std::string(kVersion)},
                 {"picard", {{"converged", report.converged},
                             {"iterations", report.iterations},
                             {"gaps", report.gaps},
                             {"cutoff", report.cutoff},
                             {"particles", report.particles}}},
                 {"distance", distance},
                 {"beta_star", beta_star},
                 {"tolerance_effective", tol_eff},
                 {"pass", out.pass}};
  return out;
}

inline ExperimentOutput run_simulate(const ExperimentSpec& s) {
  const double ev = s.ev_grid.empty() ? s.weights_explicit->mean() : s.ev_grid.front();
  NetworkConfig cfg{s.n_grid.front(), s.rate, s.weights_for(ev), s.scaling, s.seed};
  ExperimentOutput out;
  if (s.method == "discrete") {
    const auto run = run_discrete(cfg, s.init, s.dt, s.horizon);
    CsvBuilder csv(s.resolved(), {"t", "mean_potential", "mean_rate", "spikes"});
    for (std::size_t k = 0; k < run.times.size(); ++k) {
      csv.cell(run.times[k]);
      csv.cell(run.mean_potential[k]);
      csv.cell(run.mean_rate[k]);
      csv.cell(run.spike_counts[k]);
      csv.end_row();
    }
    out.csv = csv.str();
    out.summary = {{"spec", s.resolved()}, {"version", std::string(kVersion)}};
    return out;
  }
  EventLog log;
  json snapshots = json::array();
  if (s.method == "exact") {
    auto res = run_exact(cfg, s.init, s.horizon, s.sample_times);
    log = std::move(res.log);
    for (const auto& snap : res.snapshots) {
      snapshots.push_back({{"time", snap.time}, {"potentials", snap.potentials}});
    }
  } else {
    log = run_thinning(cfg, s.init, s.horizon);
  }
  CsvBuilder csv(s.resolved(), {"time", "neuron"});
  for (const auto& ev_ : log.events) {
    csv.cell(ev_.time);
    csv.cell(static_cast<std::uint64_t>(ev_.neuron));
    csv.end_row();
  }
  out.csv = csv.str();
  out.summary = {{"spec", s.resolved()},
                 {"version", std::string(kVersion)},
                 {"events", log.events.size()},
                 {"snapshots", snapshots}};
  return out;
}

inline ExperimentOutput run_experiment(const ExperimentSpec& s) {
  switch (s.kind) {
    case ExperimentKind::kPhaseAffine:
      return run_phase_affine(s);
    case ExperimentKind::kExtinctionScaling:
      return run_extinction_scaling(s);
    case ExperimentKind::kBistabilityQuadratic:
      return run_bistability_quadratic(s);
    case ExperimentKind::kFixedPoints:
      return run_fixed_points(s);
    case ExperimentKind::kConstantRateCheck:
      return run_constant_rate_check(s);
    case ExperimentKind::kMckeanCompare:
      return run_mckean_compare(s);
    case ExperimentKind::kSimulate:
    default:
      return run_simulate(s);
  }
}

// JSON schema of the experiment configuration, served by --print-schema.
inline const char* experiment_spec_schema() {
  return R"({
  "$schema": "http://json-schema.org/draft-07/schema#",
  "title": "spikefield experiment specification",
  "type": "object",
  "required": ["experiment"],
  "properties": {
    "experiment": {"enum": ["phase-affine", "extinction-scaling", "bistability-quadratic",
                             "fixed-points", "constant-rate-check", "mckean-compare", "simulate"]},
    "seed": {"type": "integer", "minimum": 0},
    "replicas": {"type": "integer", "minimum": 1},
    "threads": {"type": "integer", "minimum": 0},
    "output": {"type": "string"},
    "scaling": {"enum": ["mean-field", "raw"]},
    "rate": {
      "type": "object",
      "oneOf": [
        {"properties": {"kind": {"const": "constant"}, "rate": {"type": "number", "minimum": 0}},
         "required": ["kind", "rate"]},
        {"properties": {"kind": {"const": "affine"}, "slope": {"type": "number", "minimum": 0},
                         "intercept": {"type": "number", "minimum": 0}},
         "required": ["kind", "slope"]},
        {"properties": {"kind": {"const": "power"}, "coef": {"type": "number", "exclusiveMinimum": 0},
                         "exponent": {"type": "number", "exclusiveMinimum": 0},
                         "intercept": {"type": "number", "minimum": 0}},
         "required": ["kind", "coef", "exponent"]}
      ]
    },
    "weights": {
      "type": "object",
      "oneOf": [
        {"properties": {"kind": {"const": "constant-mean"}}, "required": ["kind"]},
        {"properties": {"kind": {"const": "uniform-mean"}}, "required": ["kind"]},
        {"properties": {"kind": {"const": "constant"}, "w": {"type": "number", "minimum": 0}},
         "required": ["kind", "w"]},
        {"properties": {"kind": {"const": "uniform"}, "lo": {"type": "number", "minimum": 0},
                         "hi": {"type": "number", "minimum": 0}}, "required": ["kind", "lo", "hi"]}
      ]
    },
    "init": {
      "type": "object",
      "oneOf": [
        {"properties": {"kind": {"const": "dirac"}, "x": {"type": "number", "minimum": 0}},
         "required": ["kind", "x"]},
        {"properties": {"kind": {"const": "uniform"}, "lo": {"type": "number", "minimum": 0},
                         "hi": {"type": "number", "minimum": 0}}, "required": ["kind", "lo", "hi"]},
        {"properties": {"kind": {"const": "uniform-around"}, "center": {"type": "number", "minimum": 0},
                         "std": {"type": "number", "minimum": 0}}, "required": ["kind", "center"]}
      ]
    },
    "grid": {
      "type": "object",
      "properties": {
        "ev": {"type": "array", "items": {"type": "number", "minimum": 0}},
        "n": {"type": "array", "items": {"type": "integer", "minimum": 1}},
        "v0": {"type": "array", "items": {"type": "number", "minimum": 0}},
        "lambda": {"type": "array", "items": {"type": "number", "exclusiveMinimum": 0}},
        "xi": {"type": "array", "items": {"type": "number", "minimum": 0}}
      }
    },
    "numerics": {
      "type": "object",
      "properties": {
        "dt": {"type": "number", "exclusiveMinimum": 0, "maximum": 0.1},
        "horizon": {"type": "number", "exclusiveMinimum": 0},
        "window": {"type": "array", "items": {"type": "number"}, "minItems": 2, "maxItems": 2},
        "theta": {"type": "number"},
        "beta_min": {"type": "number", "exclusiveMinimum": 0},
        "beta_max": {"type": "number", "exclusiveMinimum": 0},
        "beta_grid_points": {"type": "integer", "minimum": 64},
        "extinction_horizon": {"type": "number", "exclusiveMinimum": 0},
        "samples": {"type": "integer", "minimum": 1},
        "tolerance": {"type": "number", "minimum": 0},
        "tolerance_scale": {"enum": ["beta-star", "absolute"]},
        "method": {"enum": ["exact", "thinning", "discrete"]},
        "init_std": {"type": "number", "minimum": 0},
        "sample_times": {"type": "array", "items": {"type": "number", "minimum": 0}},
        "picard": {
          "type": "object",
          "properties": {
            "grid_h": {"type": "number", "exclusiveMinimum": 0, "maximum": 0.05},
            "horizon": {"type": "number", "exclusiveMinimum": 0},
            "particles": {"type": "integer", "minimum": 1000},
            "tol": {"type": "number", "exclusiveMinimum": 0},
            "max_iter": {"type": "integer", "minimum": 1},
            "cutoff": {"type": "number", "minimum": 0}
          }
        }
      }
    }
  }
})";
}

}  // namespace spikefield
