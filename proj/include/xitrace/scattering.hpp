#pragma once

// Short-range scattering at positive energy lambda = k^2: Jost solutions
// with plane-wave asymptotics, the (right-incidence) reflection coefficient
// from their Wronskians, and the closed-form xi on the a.c. spectrum,
//   xi = 1/2 + arg(1 + R * f_+^2 / |f_+|^2) / pi,
// which obeys |xi - 1/2| <= |R| / 2 and matches the Green's-function route.

#include "xitrace/schrodinger.hpp"

namespace xitrace {

struct JostPoint {
  Complex value;
  Complex derivative;
};

namespace detail {

// Integral of |V| over [a, b] by adaptive Simpson (tail-negligibility probe).
inline double abs_mass(const Potential& V, double a, double b) {
  auto simpson = [&V](double lo, double hi) {
    return (hi - lo) / 6.0 *
           (std::abs(V(lo)) + 4.0 * std::abs(V(0.5 * (lo + hi))) + std::abs(V(hi)));
  };
  double total = 0.0;
  const int cells = 64;
  for (int i = 0; i < cells; ++i) {
    const double lo = a + (b - a) * i / cells;
    const double hi = a + (b - a) * (i + 1) / cells;
    const double whole = simpson(lo, hi);
    const double halves = simpson(lo, 0.5 * (lo + hi)) + simpson(0.5 * (lo + hi), hi);
    total += halves + (halves - whole) / 15.0;
  }
  return total;
}

inline void require_short_range(const Potential& V, double cutoff) {
  if (V.tail() == Tail::confining || V.tail() == Tail::periodic_tail)
    throw std::invalid_argument("scattering: potential must be short-range");
  const double right =
      abs_mass(V, cutoff, cutoff + 60.0) + 60.0 * std::abs(V(cutoff + 60.0));
  const double left =
      abs_mass(V, -cutoff - 60.0, -cutoff) + 60.0 * std::abs(V(-cutoff - 60.0));
  const double tail = std::max(right, left);
  if (tail > 1e-8)
    throw quality_error("scattering: potential not negligible beyond the cutoff (|V| mass " +
                        format_g12(tail) + ")");
}

}  // namespace detail

inline double default_scattering_cutoff(const Potential& V) {
  return V.support_radius() + 1.0;
}

// f_plus ~ exp(ikx) as x -> +inf (side = right), f_minus ~ exp(-ikx) as
// x -> -inf (side = left), integrated inward from the cutoff where V is
// negligible. lambda = k^2 > 0.
inline JostPoint jost_solution(const Potential& V, double lambda, Side side,
                               double x, double cutoff = -1.0,
                               double ode_tol = 1e-12) {
  if (!(lambda > 0))
    throw std::invalid_argument("jost_solution: need lambda > 0");
  if (cutoff < 0) cutoff = default_scattering_cutoff(V);
  detail::require_short_range(V, cutoff);
  const double k = std::sqrt(lambda);
  const double sgn = (side == Side::right) ? 1.0 : -1.0;
  const double X = sgn * std::max(cutoff, sgn * x + 1.0);
  const Complex ik(0.0, k);
  const Complex u0 = std::exp(sgn * ik * X);
  const Complex du0 = sgn * ik * u0;
  auto coeff = [&V, lambda](double t) {
    return Complex(V(t) - lambda, 0.0);
  };
  const auto breaks = V.breakpoints_in(std::min(x, X), std::max(x, X));
  const auto traj = integrate_ode(coeff, u0, du0,
                                  RealInterval(std::min(x, X), std::max(x, X)),
                                  ode_tol, /*backward=*/side == Side::right,
                                  breaks);
  return {traj.back().value, traj.back().derivative};
}

struct ScatteringData {
  double lambda = 0.0;
  double k = 0.0;
  Complex reflection;    // right-incidence R(lambda)
  Complex transmission;  // T(lambda)
  double unitarity_defect = 0.0;  // | |R|^2 + |T|^2 - 1 |
  JostPoint f_plus;      // at x_ref
  JostPoint f_minus;     // at x_ref
  double x_ref = 0.0;
};

// R and T from the Wronskian data of the two Jost solutions at a matching
// point: with W(f, g) = f g' - f' g,
//   T = 2ik / W(f_-, f_+),   R = -W(f_-, conj f_+) / W(f_-, f_+).
inline ScatteringData reflection_coefficient(const Potential& V, double lambda,
                                             double x_ref = 0.0,
                                             double cutoff = -1.0,
                                             double ode_tol = 1e-12) {
  const JostPoint fp = jost_solution(V, lambda, Side::right, x_ref, cutoff, ode_tol);
  const JostPoint fm = jost_solution(V, lambda, Side::left, x_ref, cutoff, ode_tol);
  const double k = std::sqrt(lambda);
  const Complex ik(0.0, k);
  auto wronsk = [](const JostPoint& f, Complex g, Complex dg) {
    return f.value * dg - f.derivative * g;
  };
  const Complex w = wronsk(fm, fp.value, fp.derivative);
  if (std::abs(w) < 1e-12)
    throw quality_error("reflection_coefficient: Wronskian vanishes (zero-energy resonance?)");
  const Complex wc =
      wronsk(fm, std::conj(fp.value), std::conj(fp.derivative));
  ScatteringData out;
  out.lambda = lambda;
  out.k = k;
  out.transmission = 2.0 * ik / w;
  out.reflection = -wc / w;
  out.unitarity_defect = std::abs(std::norm(out.reflection) +
                                  std::norm(out.transmission) - 1.0);
  out.f_plus = fp;
  out.f_minus = fm;
  out.x_ref = x_ref;
  return out;
}

struct XiScatteringPoint {
  double value = 0.5;
  double half_r_bound = 0.0;      // |R| / 2
  double bracket_real = 1.0;      // Re(1 + R f_+^2/|f_+|^2), > 0 when |R| < 1
  ScatteringData data;
};

inline XiScatteringPoint xi_scattering(const Potential& V, double x,
                                       double lambda, double cutoff = -1.0,
                                       double ode_tol = 1e-12) {
  ScatteringData d = reflection_coefficient(V, lambda, x, cutoff, ode_tol);
  const Complex f = d.f_plus.value;
  if (std::abs(f) == 0.0)
    throw quality_error("xi_scattering: f_+ vanishes at x");
  const Complex phase2 = (f * f) / std::norm(f);  // f^2 / |f|^2, pure phase
  const Complex bracket = 1.0 + d.reflection * phase2;
  XiScatteringPoint p;
  p.value = 0.5 + std::arg(bracket) / pi;
  p.half_r_bound = 0.5 * std::abs(d.reflection);
  p.bracket_real = bracket.real();
  p.data = std::move(d);
  return p;
}

}  // namespace xitrace
