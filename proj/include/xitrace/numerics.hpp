#pragma once

// Shared numerical kernels: an adaptive Dormand-Prince integrator for
// u'' = q(x) u, Brent root finding, exact quadrature of step functions,
// and Abel-regularized integrals with Richardson extrapolation in alpha.

#include <algorithm>
#include <array>
#include <cstddef>
#include <functional>
#include <span>
#include <vector>

#include "xitrace/core.hpp"

namespace xitrace {

namespace detail {

template <std::size_t N>
using StateN = std::array<double, N>;

// One embedded Dormand-Prince 4(5) step. Returns the 5th-order solution and
// a scaled error norm (<= 1 means the step passes atol/rtol = tol).
template <std::size_t N, class Rhs>
inline double dp_step(Rhs&& rhs, double x, const StateN<N>& y, double h,
                      double tol, StateN<N>& y5) {
  static constexpr double c2 = 1.0 / 5, c3 = 3.0 / 10, c4 = 4.0 / 5,
                          c5 = 8.0 / 9;
  static constexpr double a21 = 1.0 / 5;
  static constexpr double a31 = 3.0 / 40, a32 = 9.0 / 40;
  static constexpr double a41 = 44.0 / 45, a42 = -56.0 / 15, a43 = 32.0 / 9;
  static constexpr double a51 = 19372.0 / 6561, a52 = -25360.0 / 2187,
                          a53 = 64448.0 / 6561, a54 = -212.0 / 729;
  static constexpr double a61 = 9017.0 / 3168, a62 = -355.0 / 33,
                          a63 = 46732.0 / 5247, a64 = 49.0 / 176,
                          a65 = -5103.0 / 18656;
  static constexpr double b1 = 35.0 / 384, b3 = 500.0 / 1113, b4 = 125.0 / 192,
                          b5 = -2187.0 / 6784, b6 = 11.0 / 84;
  // b(5th) - b(4th)
  static constexpr double e1 = 71.0 / 57600, e3 = -71.0 / 16695,
                          e4 = 71.0 / 1920, e5 = -17253.0 / 339200,
                          e6 = 22.0 / 525, e7 = -1.0 / 40;

  StateN<N> k1, k2, k3, k4, k5, k6, k7, tmp;
  rhs(x, y, k1);
  for (std::size_t i = 0; i < N; ++i) tmp[i] = y[i] + h * a21 * k1[i];
  rhs(x + c2 * h, tmp, k2);
  for (std::size_t i = 0; i < N; ++i)
    tmp[i] = y[i] + h * (a31 * k1[i] + a32 * k2[i]);
  rhs(x + c3 * h, tmp, k3);
  for (std::size_t i = 0; i < N; ++i)
    tmp[i] = y[i] + h * (a41 * k1[i] + a42 * k2[i] + a43 * k3[i]);
  rhs(x + c4 * h, tmp, k4);
  for (std::size_t i = 0; i < N; ++i)
    tmp[i] = y[i] + h * (a51 * k1[i] + a52 * k2[i] + a53 * k3[i] + a54 * k4[i]);
  rhs(x + c5 * h, tmp, k5);
  for (std::size_t i = 0; i < N; ++i)
    tmp[i] = y[i] + h * (a61 * k1[i] + a62 * k2[i] + a63 * k3[i] +
                         a64 * k4[i] + a65 * k5[i]);
  rhs(x + h, tmp, k6);
  for (std::size_t i = 0; i < N; ++i)
    y5[i] = y[i] + h * (b1 * k1[i] + b3 * k3[i] + b4 * k4[i] + b5 * k5[i] +
                        b6 * k6[i]);
  rhs(x + h, y5, k7);

  double err2 = 0.0;
  for (std::size_t i = 0; i < N; ++i) {
    double e = h * (e1 * k1[i] + e3 * k3[i] + e4 * k4[i] + e5 * k5[i] +
                    e6 * k6[i] + e7 * k7[i]);
    double sc = tol + tol * std::max(std::abs(y[i]), std::abs(y5[i]));
    err2 += (e / sc) * (e / sc);
  }
  return std::sqrt(err2 / N);
}

// Adaptive driver from x0 to x1 (either direction). Calls on_step(x, y)
// after each accepted step (not for the initial state).
template <std::size_t N, class Rhs, class OnStep>
inline void rk45(Rhs&& rhs, double x0, double x1, StateN<N>& y, double tol,
                 OnStep&& on_step) {
  if (x0 == x1) return;
  const double dir = (x1 > x0) ? 1.0 : -1.0;
  const double span = std::abs(x1 - x0);
  double h = dir * span / 64.0;
  const double hmin = span * 1e-14;
  double x = x0;
  StateN<N> y5;
  int rejects_in_row = 0;
  while (dir * (x1 - x) > 0) {
    if (std::abs(h) > std::abs(x1 - x)) h = x1 - x;
    double err = dp_step<N>(rhs, x, y, h, tol, y5);
    if (err <= 1.0) {
      x += h;
      y = y5;
      on_step(x, y);
      double grow = (err > 1e-12) ? 0.9 * std::pow(err, -0.2) : 5.0;
      h *= std::clamp(grow, 0.2, 5.0);
      rejects_in_row = 0;
    } else {
      h *= std::clamp(0.9 * std::pow(err, -0.25), 0.1, 0.7);
      if (++rejects_in_row > 60 || std::abs(h) < hmin)
        throw quality_error("rk45: step size underflow (non-smooth data?)");
    }
  }
}

// Integrates across a sorted list of breakpoints so the stepper never
// straddles a kink of the coefficient.
template <std::size_t N, class Rhs, class OnStep>
inline void rk45_segmented(Rhs&& rhs, double x0, double x1, StateN<N>& y,
                           double tol, std::span<const double> breakpoints,
                           OnStep&& on_step) {
  std::vector<double> cuts;
  const double lo = std::min(x0, x1), hi = std::max(x0, x1);
  for (double b : breakpoints)
    if (b > lo + 1e-14 && b < hi - 1e-14) cuts.push_back(b);
  std::sort(cuts.begin(), cuts.end());
  if (x0 > x1) std::reverse(cuts.begin(), cuts.end());
  double from = x0;
  for (double c : cuts) {
    rk45<N>(rhs, from, c, y, tol, on_step);
    from = c;
  }
  rk45<N>(rhs, from, x1, y, tol, on_step);
}

}  // namespace detail

struct OdePoint {
  double x;
  Complex value;
  Complex derivative;
};

using Trajectory = std::vector<OdePoint>;

// Solves u'' = coeff(x) u with u(start) = u0, u'(start) = du0, integrating
// across the whole span (start = span.lo, or span.hi when backward). Returns
// the accepted-step trajectory including both endpoints.
inline Trajectory integrate_ode(const std::function<Complex(double)>& coeff,
                                Complex u0, Complex du0, RealInterval span,
                                double tol, bool backward = false,
                                std::span<const double> breakpoints = {}) {
  if (!(tol > 0)) throw std::invalid_argument("integrate_ode: tol must be > 0");
  auto rhs = [&coeff](double x, const detail::StateN<4>& y,
                      detail::StateN<4>& dy) {
    const Complex u(y[0], y[1]);
    const Complex q = coeff(x);
    const Complex upp = q * u;
    dy[0] = y[2];
    dy[1] = y[3];
    dy[2] = upp.real();
    dy[3] = upp.imag();
  };
  detail::StateN<4> y{u0.real(), u0.imag(), du0.real(), du0.imag()};
  const double x0 = backward ? span.hi : span.lo;
  const double x1 = backward ? span.lo : span.hi;
  Trajectory out;
  out.push_back({x0, u0, du0});
  detail::rk45_segmented<4>(rhs, x0, x1, y, tol, breakpoints,
                            [&out](double x, const detail::StateN<4>& s) {
                              out.push_back({x, Complex(s[0], s[1]),
                                             Complex(s[2], s[3])});
                            });
  return out;
}

// Endpoint of the same initial value problem in renormalized form:
// true value = value * exp(log_scale), and likewise for the derivative.
// Keeps the integration finite through classically forbidden regions where
// the solution grows like exp(integral sqrt(V - z)).
struct ScaledSolution {
  Complex value;
  Complex derivative;
  double log_scale = 0.0;

  Complex log_derivative() const { return derivative / value; }
};

inline ScaledSolution integrate_ode_scaled(
    const std::function<Complex(double)>& coeff, Complex u0, Complex du0,
    double from, double to, double tol,
    std::span<const double> breakpoints = {}) {
  if (!(tol > 0))
    throw std::invalid_argument("integrate_ode_scaled: tol must be > 0");
  auto rhs = [&coeff](double x, const detail::StateN<4>& y,
                      detail::StateN<4>& dy) {
    const Complex u(y[0], y[1]);
    const Complex upp = coeff(x) * u;
    dy[0] = y[2];
    dy[1] = y[3];
    dy[2] = upp.real();
    dy[3] = upp.imag();
  };
  detail::StateN<4> y{u0.real(), u0.imag(), du0.real(), du0.imag()};
  double log_scale = 0.0;
  if (from != to) {
    auto renorm = [&log_scale](double, detail::StateN<4>& s) {
      double mag = std::max(std::hypot(s[0], s[1]), std::hypot(s[2], s[3]));
      if (mag > 1e100) {
        for (double& v : s) v /= mag;
        log_scale += std::log(mag);
      }
    };
    // rk45 gives const state in on_step; renormalize via a mutable alias.
    detail::rk45_segmented<4>(
        rhs, from, to, y, tol, breakpoints,
        [&](double x, const detail::StateN<4>&) { renorm(x, y); });
  }
  return {Complex(y[0], y[1]), Complex(y[2], y[3]), log_scale};
}

// Classic Brent root finder on a sign-changing bracket. xtol is an absolute
// bracket-width target.
inline double find_root_bracketed(const std::function<double(double)>& f,
                                  double a, double b, double xtol) {
  if (!(a < b)) throw std::invalid_argument("find_root_bracketed: need a < b");
  if (!(xtol > 0))
    throw std::invalid_argument("find_root_bracketed: xtol must be > 0");
  double fa = f(a), fb = f(b);
  if (fa == 0) return a;
  if (fb == 0) return b;
  if ((fa > 0) == (fb > 0))
    throw std::invalid_argument("find_root_bracketed: no sign change");
  double c = a, fc = fa, d = b - a, e = d;
  for (int iter = 0; iter < 200; ++iter) {
    if ((fb > 0) == (fc > 0)) {
      c = a;
      fc = fa;
      d = e = b - a;
    }
    if (std::abs(fc) < std::abs(fb)) {
      a = b;
      b = c;
      c = a;
      fa = fb;
      fb = fc;
      fc = fa;
    }
    const double tol1 = 2.0 * std::numeric_limits<double>::epsilon() *
                            std::abs(b) +
                        0.5 * xtol;
    const double xm = 0.5 * (c - b);
    if (std::abs(xm) <= tol1 || fb == 0.0) return b;
    if (std::abs(e) >= tol1 && std::abs(fa) > std::abs(fb)) {
      double p, q, r;
      const double s = fb / fa;
      if (a == c) {
        p = 2.0 * xm * s;
        q = 1.0 - s;
      } else {
        q = fa / fc;
        r = fb / fc;
        p = s * (2.0 * xm * q * (q - r) - (b - a) * (r - 1.0));
        q = (q - 1.0) * (r - 1.0) * (s - 1.0);
      }
      if (p > 0) q = -q;
      p = std::abs(p);
      if (2.0 * p < std::min(3.0 * xm * q - std::abs(tol1 * q),
                             std::abs(e * q))) {
        e = d;
        d = p / q;
      } else {
        d = xm;
        e = d;
      }
    } else {
      d = xm;
      e = d;
    }
    a = b;
    fa = fb;
    b += (std::abs(d) > tol1) ? d : (xm > 0 ? tol1 : -tol1);
    fb = f(b);
  }
  return b;
}

// Step function given by jump locations and the plateau values around them:
// values[0] on (-inf, jumps[0]), values[k] on (jumps[k-1], jumps[k]), and
// values.back() beyond jumps.back(). Right-continuous at the jumps.
struct PiecewiseConstantFn {
  std::vector<double> jumps;
  std::vector<double> values;  // size == jumps.size() + 1

  void validate() const {
    if (values.size() != jumps.size() + 1)
      throw std::invalid_argument("step function: need one more value than jumps");
    for (std::size_t i = 1; i < jumps.size(); ++i)
      if (!(jumps[i - 1] <= jumps[i]))
        throw std::invalid_argument("step function: jumps must be sorted");
  }
  double at(double x) const {
    std::size_t k =
        std::upper_bound(jumps.begin(), jumps.end(), x) - jumps.begin();
    return values[k];
  }
};

// Samples of a function on a sorted grid; integrated by the trapezoid rule.
struct GriddedFn {
  std::vector<double> lambdas;
  std::vector<double> values;

  void validate() const {
    if (lambdas.size() != values.size() || lambdas.size() < 2)
      throw std::invalid_argument("gridded function: need >= 2 matching samples");
    for (std::size_t i = 1; i < lambdas.size(); ++i)
      if (!(lambdas[i - 1] < lambdas[i]))
        throw std::invalid_argument("gridded function: grid must be strictly sorted");
  }
};

// Exact integral of a step function over [interval.lo, interval.hi].
inline double integrate_piecewise_constant(const PiecewiseConstantFn& f,
                                           RealInterval interval) {
  f.validate();
  double total = 0.0;
  double left = interval.lo;
  for (std::size_t k = 0; k < f.jumps.size(); ++k) {
    const double j = std::clamp(f.jumps[k], interval.lo, interval.hi);
    if (j > left) total += f.values[k] * (j - left);
    left = std::max(left, j);
  }
  if (interval.hi > left) total += f.values.back() * (interval.hi - left);
  return total;
}

// Alpha schedule for Abel-regularized integrals. cutoff is the absolute
// lambda where integration stops; the factory picks it so the discarded
// weight exp(-alpha_min * (cutoff - e0)) is below 1e-8.
struct AbelSchedule {
  std::vector<double> alphas;  // strictly decreasing, positive
  double cutoff;

  void validate() const {
    if (alphas.size() < 3)
      throw std::invalid_argument("AbelSchedule: need at least 3 alphas");
    for (double a : alphas)
      if (!(a > 0)) throw std::invalid_argument("AbelSchedule: alphas must be > 0");
    for (std::size_t i = 1; i < alphas.size(); ++i)
      if (!(alphas[i] < alphas[i - 1]))
        throw std::invalid_argument("AbelSchedule: alphas must strictly decrease");
    if (!std::isfinite(cutoff))
      throw std::invalid_argument("AbelSchedule: cutoff must be finite");
  }
};

inline AbelSchedule make_abel_schedule(std::vector<double> alphas, double e0) {
  AbelSchedule s{std::move(alphas), 0.0};
  if (s.alphas.empty()) throw std::invalid_argument("make_abel_schedule: empty");
  s.cutoff = e0 + std::log(1e8) / s.alphas.back();
  s.validate();
  return s;
}

inline AbelSchedule default_abel_schedule(double e0) {
  return make_abel_schedule({0.2, 0.1, 0.05, 0.025, 0.0125}, e0);
}

// I(alpha) for each alpha, sliding 3-point Richardson extrapolants of
// I = c0 + c1 a + c2 a^2 to a = 0, and the final limit. converged goes false
// when successive extrapolants move apart instead of settling.
struct AbelResult {
  double limit = 0.0;
  std::vector<double> raw;            // I(alpha), schedule order
  std::vector<double> extrapolants;   // one per 3-alpha window
  bool converged = true;
};

namespace detail {

// integral over [a, b] of exp(-alpha (x - e0)) dx
inline double exp_weight(double a, double b, double alpha, double e0) {
  // stable for small alpha * (b - a)
  const double u = std::exp(-alpha * (a - e0));
  const double w = -std::expm1(-alpha * (b - a));
  return u * w / alpha;
}

inline AbelResult abel_from_raw(const AbelSchedule& s, std::vector<double> raw) {
  AbelResult r;
  r.raw = std::move(raw);
  const auto& al = s.alphas;
  for (std::size_t i = 0; i + 2 < al.size(); ++i) {
    const double a0 = al[i], a1 = al[i + 1], a2 = al[i + 2];
    const double f0 = r.raw[i], f1 = r.raw[i + 1], f2 = r.raw[i + 2];
    // quadratic through the three points, evaluated at alpha = 0
    const double c0 = f0 * (a1 * a2) / ((a0 - a1) * (a0 - a2)) +
                      f1 * (a0 * a2) / ((a1 - a0) * (a1 - a2)) +
                      f2 * (a0 * a1) / ((a2 - a0) * (a2 - a1));
    r.extrapolants.push_back(c0);
  }
  r.limit = r.extrapolants.back();
  if (r.extrapolants.size() >= 3) {
    const auto& e = r.extrapolants;
    const double d_last = std::abs(e[e.size() - 1] - e[e.size() - 2]);
    const double d_prev = std::abs(e[e.size() - 2] - e[e.size() - 3]);
    if (d_last > 2.0 * d_prev && d_last > 1e-10) r.converged = false;
  }
  return r;
}

}  // namespace detail

// Abel-regularized integral of a step function g from e0 to the schedule
// cutoff: lim_{alpha->0} integral exp(-alpha (l - e0)) g(l) dl, each I(alpha)
// evaluated exactly per plateau, the limit by Richardson extrapolation.
inline AbelResult abel_limit(const PiecewiseConstantFn& g, double e0,
                             const AbelSchedule& s) {
  g.validate();
  s.validate();
  if (!(s.cutoff > e0))
    throw std::invalid_argument("abel_limit: cutoff must exceed e0");
  std::vector<double> raw;
  raw.reserve(s.alphas.size());
  for (double alpha : s.alphas) {
    double acc = 0.0;
    double left = e0;
    for (std::size_t k = 0; k < g.jumps.size() && left < s.cutoff; ++k) {
      const double j = std::clamp(g.jumps[k], e0, s.cutoff);
      if (j > left) acc += g.values[k] * detail::exp_weight(left, j, alpha, e0);
      left = std::max(left, j);
    }
    if (s.cutoff > left)
      acc += g.values.back() * detail::exp_weight(left, s.cutoff, alpha, e0);
    raw.push_back(acc);
  }
  return detail::abel_from_raw(s, raw);
}

// Same limit for sampled data, using the trapezoid rule on the stored grid.
// The grid must cover [e0, cutoff].
inline AbelResult abel_limit(const GriddedFn& g, double e0,
                             const AbelSchedule& s) {
  g.validate();
  s.validate();
  if (!(s.cutoff > e0))
    throw std::invalid_argument("abel_limit: cutoff must exceed e0");
  if (g.lambdas.front() > e0 + 1e-12 || g.lambdas.back() < s.cutoff - 1e-12)
    throw std::invalid_argument("abel_limit: grid does not cover [e0, cutoff]");
  std::vector<double> raw;
  raw.reserve(s.alphas.size());
  for (double alpha : s.alphas) {
    double acc = 0.0;
    for (std::size_t i = 1; i < g.lambdas.size(); ++i) {
      double a = g.lambdas[i - 1], b = g.lambdas[i];
      if (b <= e0 || a >= s.cutoff) continue;
      double va = g.values[i - 1], vb = g.values[i];
      if (a < e0) {  // clip with linear interpolation
        const double t = (e0 - a) / (b - a);
        va += t * (vb - va);
        a = e0;
      }
      if (b > s.cutoff) {
        const double t = (s.cutoff - a) / (b - a);
        vb = va + t * (vb - va);
        b = s.cutoff;
      }
      const double wa = std::exp(-alpha * (a - e0)) * va;
      const double wb = std::exp(-alpha * (b - e0)) * vb;
      acc += 0.5 * (wa + wb) * (b - a);
    }
    raw.push_back(acc);
  }
  return detail::abel_from_raw(s, raw);
}

}  // namespace xitrace
