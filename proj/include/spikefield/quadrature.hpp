#pragma once

#include <array>
#include <cmath>
#include <cstddef>
#include <utility>

namespace spikefield::quad {

// Gauss-Legendre nodes/weights on [-1, 1].
inline constexpr std::array<std::pair<double, double>, 8> kGL8 = {{
    {-0.96028985649753618, 0.10122853629037669},
    {-0.79666647741362673, 0.22238103445337434},
    {-0.52553240991632899, 0.31370664587788705},
    {-0.18343464249564978, 0.36268378337836177},
    {0.18343464249564978, 0.36268378337836177},
    {0.52553240991632899, 0.31370664587788705},
    {0.79666647741362673, 0.22238103445337434},
    {0.96028985649753618, 0.10122853629037669},
}};

inline constexpr std::array<std::pair<double, double>, 16> kGL16 = {{
    {-0.98940093499164994, 0.027152459411754037},
    {-0.94457502307323260, 0.062253523938647706},
    {-0.86563120238783176, 0.095158511682492591},
    {-0.75540440835500300, 0.124628971255534030},
    {-0.61787624440264377, 0.149595988816576760},
    {-0.45801677765722737, 0.169156519395002620},
    {-0.28160355077925892, 0.182603415044923610},
    {-0.09501250983763745, 0.189450610455068590},
    {0.09501250983763745, 0.189450610455068590},
    {0.28160355077925892, 0.182603415044923610},
    {0.45801677765722737, 0.169156519395002620},
    {0.61787624440264377, 0.149595988816576760},
    {0.75540440835500300, 0.124628971255534030},
    {0.86563120238783176, 0.095158511682492591},
    {0.94457502307323260, 0.062253523938647706},
    {0.98940093499164994, 0.027152459411754037},
}};

template <typename F>
double gl8(F&& f, double a, double b) {
  const double mid = 0.5 * (a + b), half = 0.5 * (b - a);
  double s = 0;
  for (const auto& [x, w] : kGL8) s += w * f(mid + half * x);
  return s * half;
}

template <typename F>
double gl16(F&& f, double a, double b) {
  const double mid = 0.5 * (a + b), half = 0.5 * (b - a);
  double s = 0;
  for (const auto& [x, w] : kGL16) s += w * f(mid + half * x);
  return s * half;
}

namespace detail {

template <typename F>
double adaptive_gl_rec(F& f, double a, double b, double whole, double tol, int depth) {
  const double mid = 0.5 * (a + b);
  const double left = gl16(f, a, mid);
  const double right = gl16(f, mid, b);
  const double diff = left + right - whole;
  if (std::abs(diff) <= tol || depth >= 48) return left + right;
  return adaptive_gl_rec(f, a, mid, left, 0.5 * tol, depth + 1) +
         adaptive_gl_rec(f, mid, b, right, 0.5 * tol, depth + 1);
}

}  // namespace detail

// Adaptive Gauss-Legendre on [a, b]. abs_tol is the absolute accuracy goal
// for the whole interval; pass rough |integral|*rel_tol when a relative
// target is wanted.
template <typename F>
double adaptive_gl(F&& f, double a, double b, double abs_tol) {
  if (a == b) return 0.0;
  const double whole = gl16(f, a, b);
  return detail::adaptive_gl_rec(f, a, b, whole, abs_tol, 0);
}

// Adaptive integration over [a, b] with interior breakpoints, each panel
// integrated to abs_tol scaled by its share.
template <typename F, typename It>
double adaptive_gl_panels(F&& f, It first, It last, double abs_tol) {
  double total = 0;
  for (It it = first; it + 1 < last; ++it) {
    total += adaptive_gl(f, *it, *(it + 1), abs_tol);
  }
  return total;
}

}  // namespace spikefield::quad
