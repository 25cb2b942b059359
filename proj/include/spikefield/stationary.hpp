#pragma once

#include <algorithm>
#include <cmath>
#include <map>
#include <memory>
#include <mutex>
#include <optional>
#include <stdexcept>
#include <utility>
#include <vector>

#include "spikefield/config.hpp"
#include "spikefield/quadrature.hpp"
#include "spikefield/rate.hpp"
#include "spikefield/rng.hpp"
#include "spikefield/roots.hpp"

namespace spikefield {

// ---------------------------------------------------------------------------
// Power-flow kernel
//
// Everything singular in this module is integrated after the substitution
// u = alpha (1 - e^{-s}), which turns 1/(alpha - u) du into the flat measure
// ds on [0, inf). For power rates the cumulative hazard along the rising
// flow needs
//     g(t) = int_0^t (1 - e^{-v})^a dv = s - h(1 - e^{-s}),
//     h(u) = int_0^u (1 - v^a)/(1 - v) dv                (smooth on [0,1]),
// and the superlinear fixed-point analysis needs
//     Psi(x) = int_0^1 (1-u)^{-1} e^{-x g(u)} du = int_0^inf e^{-x g(s)} ds.
// h is tabulated once per exponent; g is evaluated by series for small u to
// avoid the s - h cancellation.
// ---------------------------------------------------------------------------
class PowerFlowKernel {
 public:
  explicit PowerFlowKernel(double exponent) : a_(exponent) {
    if (!(exponent > 0)) throw std::invalid_argument("PowerFlowKernel: exponent must be > 0");
    build_table();
  }

  double exponent() const { return a_; }
  double h_infinity() const { return h_.back(); }

  // h(u) on [0, 1], cubic Hermite on the table (integrand is the analytic
  // derivative).
  double h_at(double u) const {
    if (u <= 0) return 0.0;
    if (u >= 1) return h_.back();
    const double pos = u * static_cast<double>(kIntervals);
    std::size_t k = static_cast<std::size_t>(pos);
    if (k >= kIntervals) k = kIntervals - 1;
    const double du = 1.0 / static_cast<double>(kIntervals);
    const double t = pos - static_cast<double>(k);
    const double u0 = static_cast<double>(k) * du;
    const double y0 = h_[k], y1 = h_[k + 1];
    const double d0 = integrand(u0) * du, d1 = integrand(u0 + du) * du;
    const double t2 = t * t, t3 = t2 * t;
    return (2 * t3 - 3 * t2 + 1) * y0 + (t3 - 2 * t2 + t) * d0 + (-2 * t3 + 3 * t2) * y1 +
           (t3 - t2) * d1;
  }

  // g(u) = int_0^u v^a/(1-v) dv.
  double g_of_u(double u) const {
    if (u <= 0) return 0.0;
    if (u >= 1) throw std::domain_error("PowerFlowKernel::g_of_u: u must be < 1");
    if (u <= 0.5) return g_series(u);
    return -std::log1p(-u) - h_at(u);
  }

  // g(1 - e^{-s}) = int_0^s (1 - e^{-v})^a dv.
  double g_of_s(double s) const {
    if (s <= 0) return 0.0;
    const double u = -std::expm1(-s);
    if (u <= 0.5) return g_series(u);
    return s - h_at(u);
  }

  // Psi(x), strictly decreasing from +inf (x -> 0) to 0 (x -> inf).
  double psi(double x) const {
    if (!(x > 0)) throw std::domain_error("PowerFlowKernel::psi: x must be > 0");
    const double s_end = 45.0;
    auto f = [&](double s) {
      const double e = x * g_of_s(s);
      return e > 700.0 ? 0.0 : std::exp(-e);
    };
    // integrand varies on the scale x^{-1/(a+1)} for large x
    const double scale = std::min(std::pow(x, -1.0 / (a_ + 1.0)), 5.0);
    std::vector<double> pts{0.0};
    for (double m : {0.05, 0.25, 1.0, 4.0}) {
      const double p = m * scale;
      if (p > pts.back() && p < s_end) pts.push_back(p);
    }
    for (double p : {1.0, 5.0, 15.0, s_end}) {
      if (p > pts.back()) pts.push_back(p);
    }
    const double tail_exp = x * g_of_s(s_end);
    const double tail = tail_exp > 700.0 ? 0.0 : std::exp(-tail_exp) / x;
    double rough = tail;
    for (std::size_t i = 0; i + 1 < pts.size(); ++i) rough += quad::gl16(f, pts[i], pts[i + 1]);
    const double abs_tol = std::max(rough, 1e-300) * 1e-12;
    return quad::adaptive_gl_panels(f, pts.begin(), pts.end(), abs_tol) + tail;
  }

 private:
  static constexpr std::size_t kIntervals = 8192;

  double integrand(double u) const {
    const double eps = 1.0 - u;
    if (eps < 1e-6) return a_ - a_ * (a_ - 1.0) * 0.5 * eps;
    return (1.0 - std::pow(u, a_)) / eps;
  }

  double g_series(double u) const {
    double acc = 0.0;
    double num = std::pow(u, a_ + 1.0);
    for (int k = 0; k < 2000; ++k) {
      const double term = num / (a_ + 1.0 + k);
      acc += term;
      if (term < 1e-18 * acc) break;
      num *= u;
    }
    return acc;
  }

  void build_table() {
    h_.resize(kIntervals + 1);
    h_[0] = 0.0;
    const double du = 1.0 / static_cast<double>(kIntervals);
    for (std::size_t k = 0; k < kIntervals; ++k) {
      const double a = static_cast<double>(k) * du;
      h_[k + 1] = h_[k] + quad::gl8([&](double u) { return integrand(u); }, a, a + du);
    }
  }

  double a_;
  std::vector<double> h_;
};

inline const PowerFlowKernel& power_flow_kernel(double exponent) {
  static std::mutex mu;
  static std::map<double, std::unique_ptr<PowerFlowKernel>> cache;
  std::lock_guard<std::mutex> lock(mu);
  auto it = cache.find(exponent);
  if (it == cache.end()) {
    it = cache.emplace(exponent, std::make_unique<PowerFlowKernel>(exponent)).first;
  }
  return *it->second;
}

// Cumulative hazard along the rising flow x(t) = alpha (1 - e^{-t}):
// int_0^t b(x(u)) du. Closed forms for constant/affine, kernel for power.
inline double rising_flow_hazard(const RateFunction& b, double alpha, double t) {
  if (alpha < 0 || t < 0) throw std::domain_error("rising_flow_hazard: alpha, t must be >= 0");
  switch (b.kind()) {
    case RateKind::kConstant:
      return b.constant_rate() * t;
    case RateKind::kAffine:
      // int (1 - e^{-u}) du = t - 1 + e^{-t} = t + expm1(-t)
      return b.slope() * alpha * (t + std::expm1(-t)) + b.intercept() * t;
    case RateKind::kPower:
    default: {
      const double a = b.exponent();
      return b.coef() * std::pow(alpha, a) * power_flow_kernel(a).g_of_s(t) + b.intercept() * t;
    }
  }
}

// P(tau >= t) = exp(-int_0^t b(alpha(1-e^{-u})) du).
inline double survival_along_flow(const RateFunction& b, double alpha, double t) {
  const double e = rising_flow_hazard(b, alpha, t);
  return e > 700.0 ? 0.0 : std::exp(-e);
}

namespace detail {

// Past t = 45 the flow is flat to machine precision, so survival decays at
// exactly b(alpha) and tails are handled analytically.
inline constexpr double kFlowFlatTime = 45.0;

}  // namespace detail

// Normalizer C(beta) of the invariant density, computed as the mean cycle
// length E(tau) = int_0^inf survival dt. Empty when b vanishes on the whole
// support (survival == 1, E(tau) = +inf).
inline std::optional<double> c_of_beta(const RateFunction& b, double mean_weight, double beta,
                                       double rel_tol = 1e-8) {
  if (!(beta > 0)) throw std::domain_error("c_of_beta: beta must be > 0");
  if (mean_weight < 0) throw std::domain_error("c_of_beta: mean weight must be >= 0");
  const double alpha = beta * mean_weight;
  const double b_alpha = b(alpha);
  if (!(b_alpha > 0)) return std::nullopt;

  auto hazard = [&](double t) { return rising_flow_hazard(b, alpha, t); };
  auto survive = [&](double t) {
    const double e = hazard(t);
    return e > 700.0 ? 0.0 : std::exp(-e);
  };

  double t_cut = detail::kFlowFlatTime;
  double tail = 0.0;
  const double h_end = hazard(t_cut);
  if (h_end > 700.0) {
    // survival underflows before the flow flattens; find the effective cut
    t_cut = roots::bisect([&](double t) { return hazard(t) - 700.0; }, 0.0, t_cut, 1e-6, 1e-3);
  } else {
    tail = std::exp(-h_end) / b_alpha;
  }

  // panel hints at the survival decay scale
  const double tau = 1.0 / b_alpha;
  std::vector<double> pts{0.0};
  for (double m : {0.25, 1.0, 4.0}) {
    const double p = m * std::min(tau, t_cut);
    if (p > pts.back() && p < t_cut) pts.push_back(p);
  }
  for (double p : {1.0, 5.0, 15.0, t_cut}) {
    if (p > pts.back() && p <= t_cut) pts.push_back(p);
  }
  if (pts.back() < t_cut) pts.push_back(t_cut);

  double rough = tail;
  for (std::size_t i = 0; i + 1 < pts.size(); ++i) {
    rough += quad::gl16(survive, pts[i], pts[i + 1]);
  }
  const double abs_tol = std::max(rough, 1e-300) * std::min(rel_tol, 1e-10);
  return quad::adaptive_gl_panels(survive, pts.begin(), pts.end(), abs_tol) + tail;
}

// Signed residual of the fixed-point equation. For every rate in the family
// with finite C(beta), b(alpha) > 0 and the exponential term of the
// right-hand side vanishes (divergent exponent), so the equation reduces to
// beta C(beta) = 1. Divergent C propagates as empty.
inline std::optional<double> fixed_point_residual(const RateFunction& b, double mean_weight,
                                                  double beta) {
  const auto c = c_of_beta(b, mean_weight, beta, 1e-10);
  if (!c) return std::nullopt;
  return beta * *c - 1.0;
}

enum class Stability { kStable, kUnstable, kUndetermined, kNotApplicable };
enum class SolutionKind { kTrivial, kNonTrivial };

struct StationarySolution {
  double beta = 0;
  double alpha = 0;
  double c = 0;  // C(beta); 0 for the trivial solution
  SolutionKind kind = SolutionKind::kTrivial;
  Stability stability = Stability::kUndetermined;
};

// Stability of the Dirac mass at 0 from the excitation ratio
// rho = lim_{x->0} b(x)/x * E(V). Not applicable when b(0) > 0 (the Dirac
// mass is then not invariant); the rho = 1 boundary is left undetermined.
inline Stability classify_trivial_stability(const RateFunction& b, double mean_weight) {
  if (b.value_at_zero() > 0) return Stability::kNotApplicable;
  const ExtReal lambda0 = b.slope_at_zero();
  double rho;
  if (lambda0.is_infinite()) {
    rho = mean_weight > 0 ? std::numeric_limits<double>::infinity() : 0.0;
  } else {
    rho = lambda0.finite_value() * mean_weight;
  }
  if (rho < 1.0) return Stability::kStable;
  if (rho > 1.0) return Stability::kUnstable;
  return Stability::kUndetermined;
}

// All stationary solutions with beta in [beta_min, beta_max]: sign-change
// bracketing of the residual on a log grid, then bisection. The trivial
// solution is included whenever b(0) = 0; non-trivial roots are tagged
// Undetermined (their stability is only conjectured).
inline std::vector<StationarySolution> find_stationary(const RateFunction& b, double mean_weight,
                                                       double beta_min = 1e-4,
                                                       double beta_max = 1e2,
                                                       std::size_t grid_points = 512,
                                                       double tol = 1e-9) {
  if (!(beta_min > 0 && beta_max > beta_min)) {
    throw std::invalid_argument("find_stationary: need 0 < beta_min < beta_max");
  }
  if (grid_points < 64) throw std::invalid_argument("find_stationary: grid_points must be >= 64");

  std::vector<StationarySolution> out;
  if (b.value_at_zero() == 0) {
    out.push_back({0.0, 0.0, 0.0, SolutionKind::kTrivial,
                   classify_trivial_stability(b, mean_weight)});
  }
  if (!(b(beta_max * mean_weight) > 0)) return out;  // b == 0 on the whole range

  auto residual = [&](double beta) { return *fixed_point_residual(b, mean_weight, beta); };
  const auto grid = roots::log_grid(beta_min, beta_max, grid_points);
  for (const auto& [lo, hi] : roots::scan_sign_changes(residual, grid)) {
    const double beta = roots::bisect(residual, lo, hi, 1e-14 * hi, tol);
    StationarySolution sol;
    sol.beta = beta;
    sol.alpha = beta * mean_weight;
    sol.c = *c_of_beta(b, mean_weight, beta, 1e-10);
    sol.kind = SolutionKind::kNonTrivial;
    sol.stability = Stability::kUndetermined;
    out.push_back(sol);
  }
  return out;
}

// ---------------------------------------------------------------------------
// Invariant density table
// ---------------------------------------------------------------------------

// Tabulated invariant density
//   f(u) = exp(-int_0^u b(v)/(alpha - v) dv) / (C(beta) (alpha - u))
// on [0, alpha). Nodes are uniform in s with u = alpha (1 - e^{-s}), which
// resolves the (alpha - u)^{b(alpha)-1} boundary behavior; the s-grid is cut
// where the accumulated hazard reaches 40 and the remaining mass (< e^{-40})
// is carried as an analytic exponential tail.
class DensityTable {
 public:
  DensityTable(const RateFunction& b, double mean_weight, double beta, std::size_t nodes)
      : rate_(b), beta_(beta), alpha_(beta * mean_weight) {
    if (nodes < 16) throw std::invalid_argument("DensityTable: nodes must be >= 16");
    const auto c = c_of_beta(b, mean_weight, beta, 1e-10);
    if (!c) throw std::invalid_argument("DensityTable: divergent normalizer (rate vanishes)");
    if (!(alpha_ > 0)) throw std::invalid_argument("DensityTable: alpha must be > 0");
    c_ = *c;
    b_alpha_ = b(alpha_);

    const double h_flat = rising_flow_hazard(rate_, alpha_, detail::kFlowFlatTime);
    if (h_flat >= 40.0) {
      s_max_ = roots::bisect(
          [&](double t) { return rising_flow_hazard(rate_, alpha_, t) - 40.0; }, 0.0,
          detail::kFlowFlatTime, 1e-10, 1e-8);
    } else {
      s_max_ = detail::kFlowFlatTime + (40.0 - h_flat) / b_alpha_;
    }

    s_.resize(nodes);
    u_.resize(nodes);
    f_.resize(nodes);
    cdf_.resize(nodes);
    const double ds = s_max_ / static_cast<double>(nodes - 1);
    auto weight = [&](double s) {
      return std::exp(-rising_flow_hazard(rate_, alpha_, s));
    };
    for (std::size_t j = 0; j < nodes; ++j) {
      const double s = static_cast<double>(j) * ds;
      s_[j] = s;
      u_[j] = alpha_ * (-std::expm1(-s));
      f_[j] = weight(s) / (c_ * alpha_ * std::exp(-s));
    }
    cdf_[0] = 0.0;
    for (std::size_t j = 1; j < nodes; ++j) {
      cdf_[j] = cdf_[j - 1] + quad::gl8(weight, s_[j - 1], s_[j]) / c_;
    }
    tail_mass_ = weight(s_max_) / (b_alpha_ * c_);
    raw_total_ = cdf_.back() + tail_mass_;
    if (std::abs(raw_total_ - 1.0) > 1e-6) {
      throw std::logic_error("DensityTable: normalization failed");
    }
    const double inv = 1.0 / raw_total_;
    for (auto& v : cdf_) v *= inv;
    for (auto& v : f_) v *= inv;
    tail_mass_ *= inv;
  }

  double beta() const { return beta_; }
  double alpha() const { return alpha_; }
  double c_value() const { return c_; }
  const RateFunction& rate() const { return rate_; }
  const std::vector<double>& nodes() const { return u_; }
  const std::vector<double>& density() const { return f_; }
  const std::vector<double>& cdf() const { return cdf_; }
  const std::vector<double>& s_nodes() const { return s_; }
  double tail_mass() const { return tail_mass_; }
  double raw_total() const { return raw_total_; }

  // Exact pointwise evaluation; zero outside [0, alpha).
  double density_at(double u) const {
    if (u < 0 || u >= alpha_) return 0.0;
    const double s = -std::log1p(-u / alpha_);
    return std::exp(-rising_flow_hazard(rate_, alpha_, s)) / (c_ * (alpha_ - u)) / raw_total_;
  }

  // CDF at an arbitrary point (linear in s between nodes, analytic tail).
  double cdf_at(double u) const {
    if (u <= 0) return 0.0;
    if (u >= alpha_) return 1.0;
    const double s = -std::log1p(-u / alpha_);
    if (s >= s_max_) return 1.0 - tail_mass_ * std::exp(-b_alpha_ * (s - s_max_));
    const double ds = s_max_ / static_cast<double>(s_.size() - 1);
    const auto j = static_cast<std::size_t>(s / ds);
    if (j + 1 >= s_.size()) return cdf_.back();
    const double frac = s / ds - static_cast<double>(j);
    return cdf_[j] * (1 - frac) + cdf_[j + 1] * frac;
  }

  // int u f(u) du over the support.
  double mean() const {
    double m = 0;
    auto integrand = [&](double s) {
      return alpha_ * (-std::expm1(-s)) * std::exp(-rising_flow_hazard(rate_, alpha_, s));
    };
    for (std::size_t j = 1; j < s_.size(); ++j) {
      m += quad::gl8(integrand, s_[j - 1], s_[j]);
    }
    return m / (c_ * raw_total_) + tail_mass_ * alpha_;
  }

  // Inverse-CDF draw; the analytic tail is sampled as an exponential.
  double sample(RngStream& rng) const {
    const double v = rng.uniform();
    double s;
    if (v >= cdf_.back()) {
      s = s_max_ + rng.exponential(b_alpha_);
    } else {
      const auto it = std::upper_bound(cdf_.begin(), cdf_.end(), v);
      const std::size_t j = static_cast<std::size_t>(it - cdf_.begin());
      const double c0 = cdf_[j - 1], c1 = cdf_[j];
      const double frac = c1 > c0 ? (v - c0) / (c1 - c0) : 0.5;
      s = s_[j - 1] + frac * (s_[j] - s_[j - 1]);
    }
    double u = alpha_ * (-std::expm1(-s));
    if (u >= alpha_) u = std::nextafter(alpha_, 0.0);
    return u;
  }

 private:
  RateFunction rate_;
  double beta_, alpha_, c_ = 0, b_alpha_ = 0;
  double s_max_ = 0, tail_mass_ = 0, raw_total_ = 1;
  std::vector<double> s_, u_, f_, cdf_;
};

inline DensityTable invariant_density(const RateFunction& b, double mean_weight, double beta,
                                      std::size_t nodes = 16384) {
  return DensityTable(b, mean_weight, beta, nodes);
}

inline double sample_invariant(const DensityTable& table, RngStream& rng) {
  return table.sample(rng);
}

// int b(u) f(u) du: the stationary mean firing rate of the tabulated law.
// Equals beta (within quadrature accuracy) exactly at fixed-point roots.
inline double self_consistency_rate(const DensityTable& table, const RateFunction& b) {
  const double alpha = table.alpha();
  auto integrand = [&](double s) {
    const double u = alpha * (-std::expm1(-s));
    return b(std::min(u, alpha)) * std::exp(-rising_flow_hazard(table.rate(), alpha, s));
  };
  const auto& s = table.s_nodes();
  double acc = 0;
  for (std::size_t j = 1; j < s.size(); ++j) {
    acc += quad::gl8(integrand, s[j - 1], s[j]);
  }
  return acc / (table.c_value() * table.raw_total()) + table.tail_mass() * b(alpha);
}

// ---------------------------------------------------------------------------
// Superlinear phase transition (b(x) = lambda x^a, a > 1)
// ---------------------------------------------------------------------------

// The unique rho with beta Psi(rho beta^a) = 1. rho is the coupling
// rho = lambda E(V)^a; the equation itself does not involve E(V), which
// only converts rho back to a coefficient lambda = rho / E(V)^a.
inline double superlinear_rho_of_beta(double exponent, double mean_weight, double beta,
                                      double rel_tol = 1e-11) {
  if (!(exponent > 1)) throw std::invalid_argument("superlinear_rho_of_beta: exponent must be > 1");
  if (!(mean_weight > 0)) throw std::invalid_argument("superlinear_rho_of_beta: E(V) must be > 0");
  if (!(beta > 1e-12 && beta < 1e12)) {
    throw std::domain_error("superlinear_rho_of_beta: beta out of range");
  }
  const auto& kernel = power_flow_kernel(exponent);
  const double target = 1.0 / beta;
  double lo = beta * 1e-10;                 // Psi ~ 1/x there: Psi(lo) >> target
  double hi = std::max(beta * 1e4, std::pow(4.0 * beta, exponent + 1.0));
  while (kernel.psi(hi) > target) hi *= 8;
  double llo = std::log(lo), lhi = std::log(hi);
  for (int it = 0; it < 200 && (lhi - llo) > 1e-14; ++it) {
    const double lmid = 0.5 * (llo + lhi);
    const double p = kernel.psi(std::exp(lmid));
    if (std::abs(p - target) <= rel_tol * target) {
      llo = lhi = lmid;
      break;
    }
    if (p > target) {
      llo = lmid;
    } else {
      lhi = lmid;
    }
  }
  const double x = std::exp(0.5 * (llo + lhi));
  return x / std::pow(beta, exponent);
}

struct SuperlinearDiagram {
  double exponent = 0;
  double mean_weight = 0;
  double rho_c = 0;
  double beta_c = 0;
  std::vector<std::pair<double, double>> curve;  // (beta, rho(beta)) samples
};

// rho_c = min_beta rho(beta): coarse log-grid bracket, then golden-section
// refinement. rho(beta) diverges at both ends, so an interior minimum must
// exist; a boundary minimum means the scan range is wrong.
inline SuperlinearDiagram superlinear_critical(double exponent, double mean_weight,
                                               double beta_min = 1e-3, double beta_max = 1e3,
                                               std::size_t curve_points = 61) {
  SuperlinearDiagram diag;
  diag.exponent = exponent;
  diag.mean_weight = mean_weight;
  const auto grid = roots::log_grid(beta_min, beta_max, curve_points);
  diag.curve.reserve(grid.size());
  std::size_t imin = 0;
  for (std::size_t i = 0; i < grid.size(); ++i) {
    diag.curve.emplace_back(grid[i], superlinear_rho_of_beta(exponent, mean_weight, grid[i]));
    if (diag.curve[i].second < diag.curve[imin].second) imin = i;
  }
  if (imin == 0 || imin + 1 == grid.size()) {
    throw std::runtime_error("superlinear_critical: no interior minimum in the scan range");
  }
  auto rho_of_log = [&](double lb) {
    return superlinear_rho_of_beta(exponent, mean_weight, std::exp(lb));
  };
  const double lbc = roots::golden_section_min(rho_of_log, std::log(grid[imin - 1]),
                                               std::log(grid[imin + 1]), 1e-10);
  diag.beta_c = std::exp(lbc);
  diag.rho_c = superlinear_rho_of_beta(exponent, mean_weight, diag.beta_c);
  return diag;
}

struct SuperlinearBranches {
  enum class Kind { kNone, kCritical, kTwo };
  Kind kind = Kind::kNone;
  double beta_minus = 0;
  double beta_plus = 0;
};

// Solutions of rho(beta) = rho. Below rho_c: none; within solver tolerance
// of rho_c: the single beta_c; above: one branch on each side of beta_c.
inline SuperlinearBranches superlinear_branches(double exponent, double mean_weight, double rho,
                                                const SuperlinearDiagram* diagram = nullptr) {
  if (!(rho > 0)) throw std::invalid_argument("superlinear_branches: rho must be > 0");
  SuperlinearDiagram local;
  if (!diagram) {
    local = superlinear_critical(exponent, mean_weight);
    diagram = &local;
  }
  SuperlinearBranches out;
  const double rc = diagram->rho_c, bc = diagram->beta_c;
  if (std::abs(rho - rc) <= 1e-9 * rc) {
    out.kind = SuperlinearBranches::Kind::kCritical;
    out.beta_minus = out.beta_plus = bc;
    return out;
  }
  if (rho < rc) {
    out.kind = SuperlinearBranches::Kind::kNone;
    return out;
  }
  auto fr = [&](double beta) { return superlinear_rho_of_beta(exponent, mean_weight, beta) - rho; };
  double lo = bc;
  while (fr(lo) < 0) lo *= 0.25;
  double hi = bc;
  while (fr(hi) < 0) hi *= 4.0;
  out.kind = SuperlinearBranches::Kind::kTwo;
  out.beta_minus = roots::bisect(fr, lo, bc, 1e-13 * bc, 1e-10 * rho);
  out.beta_plus = roots::bisect(fr, bc, hi, 1e-13 * hi, 1e-10 * rho);
  return out;
}

}  // namespace spikefield
