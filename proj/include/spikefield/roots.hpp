#pragma once

#include <cmath>
#include <functional>
#include <stdexcept>
#include <utility>
#include <vector>

namespace spikefield::roots {

// Bisection on [lo, hi]; requires f(lo) and f(hi) of opposite sign (either
// may be zero). Stops when the bracket width or |f| falls below tolerance.
template <typename F>
double bisect(F&& f, double lo, double hi, double xtol, double ftol, int max_iter = 200) {
  double flo = f(lo), fhi = f(hi);
  if (flo == 0) return lo;
  if (fhi == 0) return hi;
  if ((flo > 0) == (fhi > 0)) {
    throw std::invalid_argument("bisect: no sign change on bracket");
  }
  for (int i = 0; i < max_iter; ++i) {
    const double mid = 0.5 * (lo + hi);
    const double fm = f(mid);
    if (std::abs(fm) <= ftol || 0.5 * (hi - lo) <= xtol) return mid;
    if ((fm > 0) == (flo > 0)) {
      lo = mid;
      flo = fm;
    } else {
      hi = mid;
    }
  }
  return 0.5 * (lo + hi);
}

// Newton iteration safeguarded by a maintained bracket; falls back to
// bisection whenever the Newton step leaves the bracket or stalls.
template <typename F, typename DF>
double newton_bisect(F&& f, DF&& df, double lo, double hi, double x0, double ftol,
                     int max_iter = 60) {
  double flo = f(lo), fhi = f(hi);
  if (flo == 0) return lo;
  if (fhi == 0) return hi;
  if ((flo > 0) == (fhi > 0)) throw std::invalid_argument("newton_bisect: bad bracket");
  double x = x0;
  if (!(x > lo && x < hi)) x = 0.5 * (lo + hi);
  for (int i = 0; i < max_iter; ++i) {
    const double fx = f(x);
    if (std::abs(fx) <= ftol) return x;
    if ((fx > 0) == (flo > 0)) {
      lo = x;
      flo = fx;
    } else {
      hi = x;
    }
    const double d = df(x);
    double next = (d != 0) ? x - fx / d : 0.5 * (lo + hi);
    if (!(next > lo && next < hi)) next = 0.5 * (lo + hi);
    x = next;
  }
  return x;
}

// Golden-section minimization of a unimodal f on [lo, hi].
template <typename F>
double golden_section_min(F&& f, double lo, double hi, double xtol, int max_iter = 200) {
  constexpr double kInvPhi = 0.6180339887498949;
  double a = lo, b = hi;
  double c = b - kInvPhi * (b - a);
  double d = a + kInvPhi * (b - a);
  double fc = f(c), fd = f(d);
  for (int i = 0; i < max_iter && (b - a) > xtol; ++i) {
    if (fc < fd) {
      b = d;
      d = c;
      fd = fc;
      c = b - kInvPhi * (b - a);
      fc = f(c);
    } else {
      a = c;
      c = d;
      fc = fd;
      d = a + kInvPhi * (b - a);
      fd = f(d);
    }
  }
  return 0.5 * (a + b);
}

// Sign-change brackets of f over consecutive grid points.
template <typename F>
std::vector<std::pair<double, double>> scan_sign_changes(F&& f, const std::vector<double>& grid) {
  std::vector<std::pair<double, double>> brackets;
  if (grid.size() < 2) return brackets;
  double prev = f(grid[0]);
  for (std::size_t i = 1; i < grid.size(); ++i) {
    const double cur = f(grid[i]);
    if ((prev < 0 && cur >= 0) || (prev >= 0 && cur < 0)) {
      brackets.emplace_back(grid[i - 1], grid[i]);
    }
    prev = cur;
  }
  return brackets;
}

inline std::vector<double> log_grid(double lo, double hi, std::size_t points) {
  if (!(lo > 0 && hi > lo) || points < 2) {
    throw std::invalid_argument("log_grid: need 0 < lo < hi and points >= 2");
  }
  std::vector<double> g(points);
  const double llo = std::log(lo), lhi = std::log(hi);
  for (std::size_t i = 0; i < points; ++i) {
    g[i] = std::exp(llo + (lhi - llo) * static_cast<double>(i) / static_cast<double>(points - 1));
  }
  g.front() = lo;
  g.back() = hi;
  return g;
}

}  // namespace spikefield::roots
