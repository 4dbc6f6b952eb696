#pragma once

// Continuum side: -u'' + V u on the line. Green's functions come from Weyl
// solutions (square-integrable at +/- infinity), normalized so the free
// diagonal value is (-z)^{-1/2}. Eigenvalues come from Pruefer-angle
// shooting. Confining potentials get an exact step-function xi from
// eigenvalue counting.

#include <fstream>
#include <optional>
#include <sstream>

#include "xitrace/numerics.hpp"
#include "xitrace/xi_grid.hpp"

namespace xitrace {

namespace detail {

// Natural cubic spline through (xs, ys); constant extension outside.
class CubicSpline {
 public:
  CubicSpline() = default;
  CubicSpline(std::vector<double> xs, std::vector<double> ys)
      : xs_(std::move(xs)), ys_(std::move(ys)) {
    const std::size_t n = xs_.size();
    if (n < 2 || ys_.size() != n)
      throw std::invalid_argument("spline: need >= 2 matching samples");
    for (std::size_t i = 1; i < n; ++i)
      if (!(xs_[i - 1] < xs_[i]))
        throw std::invalid_argument("spline: abscissae must strictly increase");
    m_.assign(n, 0.0);
    if (n > 2) {
      std::vector<double> a(n, 0.0), b(n, 0.0), c(n, 0.0), d(n, 0.0);
      for (std::size_t i = 1; i + 1 < n; ++i) {
        const double h0 = xs_[i] - xs_[i - 1], h1 = xs_[i + 1] - xs_[i];
        a[i] = h0;
        b[i] = 2.0 * (h0 + h1);
        c[i] = h1;
        d[i] = 6.0 * ((ys_[i + 1] - ys_[i]) / h1 - (ys_[i] - ys_[i - 1]) / h0);
      }
      for (std::size_t i = 2; i + 1 < n; ++i) {  // natural ends: m_0 = m_last = 0
        const double w = a[i] / b[i - 1];
        b[i] -= w * c[i - 1];
        d[i] -= w * d[i - 1];
      }
      for (std::size_t i = n - 2; i >= 1; --i) {
        m_[i] = (d[i] - c[i] * (i + 2 < n ? m_[i + 1] : 0.0)) / b[i];
        if (i == 1) break;
      }
    }
  }

  double operator()(double x) const {
    if (x <= xs_.front()) return ys_.front();
    if (x >= xs_.back()) return ys_.back();
    const std::size_t i =
        std::upper_bound(xs_.begin(), xs_.end(), x) - xs_.begin();
    const double h = xs_[i] - xs_[i - 1];
    const double t = (x - xs_[i - 1]) / h;
    const double a = ys_[i - 1], b = ys_[i];
    return (1 - t) * a + t * b +
           h * h / 6.0 *
               ((1 - t) * ((1 - t) * (1 - t) - 1) * m_[i - 1] +
                t * (t * t - 1) * m_[i]);
  }

  double front_x() const { return xs_.front(); }
  double back_x() const { return xs_.back(); }

 private:
  std::vector<double> xs_, ys_, m_;
};

}  // namespace detail

// How V behaves at infinity; drives cutoff selection for Weyl solutions.
enum class Tail {
  constant_beyond,  // V constant outside [-support_radius, support_radius]
  confining,        // V -> +infinity both sides
  periodic_tail,    // V periodic; handled by Floquet solutions
};

class Potential {
 public:
  double operator()(double x) const {
    if (period_) {
      double t = std::fmod(x - origin_, *period_);
      if (t < 0) t += *period_;
      return f_(origin_ + t);
    }
    return f_(x);
  }

  const std::string& name() const { return name_; }
  const std::vector<std::pair<std::string, double>>& params() const {
    return params_;
  }
  double lower_bound() const { return lower_bound_; }
  std::optional<double> period() const { return period_; }
  Tail tail() const { return tail_; }
  double support_radius() const { return support_radius_; }

  // Non-smooth points of V inside (lo, hi); integrators split there.
  std::vector<double> breakpoints_in(double lo, double hi) const {
    std::vector<double> out;
    if (period_) {
      const double L = *period_;
      const double k0 = std::floor((lo - origin_) / L);
      for (double k = k0; origin_ + k * L < hi; k += 1.0) {
        for (double b : breakpoints_) {
          const double p = b + k * L;
          if (p > lo && p < hi) out.push_back(p);
        }
        const double edge = origin_ + k * L;
        if (edge > lo && edge < hi) out.push_back(edge);
      }
      std::sort(out.begin(), out.end());
      return out;
    }
    for (double b : breakpoints_)
      if (b > lo && b < hi) out.push_back(b);
    return out;
  }

  static Potential zero() {
    Potential p;
    p.f_ = [](double) { return 0.0; };
    p.name_ = "zero";
    p.lower_bound_ = 0.0;
    p.tail_ = Tail::constant_beyond;
    return p;
  }

  // a x^2 + b with a > 0 (bounded below, confining).
  static Potential harmonic(double a, double b) {
    if (!(a > 0)) throw std::invalid_argument("harmonic: need a > 0");
    Potential p;
    p.f_ = [a, b](double x) { return a * x * x + b; };
    p.name_ = "harmonic";
    p.params_ = {{"a", a}, {"b", b}};
    p.lower_bound_ = b;
    p.tail_ = Tail::confining;
    return p;
  }

  // amplitude * cos(x), period 2 pi.
  static Potential mathieu(double amplitude) {
    Potential p;
    p.f_ = [amplitude](double x) { return amplitude * std::cos(x); };
    p.name_ = "mathieu";
    p.params_ = {{"amplitude", amplitude}};
    p.lower_bound_ = -std::abs(amplitude);
    p.tail_ = Tail::periodic_tail;
    p.period_ = 2.0 * pi;
    return p;
  }

  // depth on (-width/2, width/2), zero outside. depth < 0 is a well.
  static Potential square_well(double depth, double width) {
    if (!(width > 0)) throw std::invalid_argument("square_well: width > 0");
    Potential p;
    const double half = width / 2.0;
    p.f_ = [depth, half](double x) {
      return (x > -half && x < half) ? depth : 0.0;
    };
    p.name_ = "square_well";
    p.params_ = {{"depth", depth}, {"width", width}};
    p.lower_bound_ = std::min(0.0, depth);
    p.tail_ = Tail::constant_beyond;
    p.support_radius_ = half;
    p.breakpoints_ = {-half, half};
    return p;
  }

  // Natural cubic spline through the samples, endpoint values extended as
  // constants beyond the sampled range.
  static Potential sampled(std::vector<double> xs, std::vector<double> vs) {
    detail::CubicSpline s(std::move(xs), std::move(vs));
    Potential p;
    p.name_ = "sampled";
    p.tail_ = Tail::constant_beyond;
    p.support_radius_ = std::max(std::abs(s.front_x()), std::abs(s.back_x()));
    p.breakpoints_ = {s.front_x(), s.back_x()};
    double lb = std::numeric_limits<double>::infinity();
    const double a = s.front_x(), b = s.back_x();
    for (int i = 0; i <= 4000; ++i)  // splines can undershoot their knots
      lb = std::min(lb, s(a + (b - a) * i / 4000.0));
    p.lower_bound_ = lb;
    p.f_ = [s = std::move(s)](double x) { return s(x); };
    return p;
  }

  // Two whitespace-separated columns (x, V(x)), '#' comments allowed.
  static Potential sampled_from_file(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw config_error("sampled potential: cannot open " + path);
    std::vector<double> xs, vs;
    std::string line;
    std::size_t lineno = 0;
    while (std::getline(in, line)) {
      ++lineno;
      const auto hash = line.find('#');
      if (hash != std::string::npos) line.erase(hash);
      std::istringstream ss(line);
      double x, v;
      if (!(ss >> x)) continue;  // blank line
      if (!(ss >> v))
        throw config_error("sampled potential: " + path + ":" +
                           std::to_string(lineno) + ": need two columns");
      xs.push_back(x);
      vs.push_back(v);
    }
    if (xs.size() < 2)
      throw config_error("sampled potential: " + path + ": need >= 2 rows");
    return sampled(std::move(xs), std::move(vs));
  }

  // Tiles base over cells of length period, using base on [origin,
  // origin + period).
  static Potential periodic(const Potential& base, double period,
                            double origin = 0.0) {
    if (!(period > 0)) throw std::invalid_argument("periodic: period > 0");
    Potential p;
    p.f_ = base.f_;
    p.name_ = "periodic(" + base.name_ + ")";
    p.params_ = base.params_;
    p.params_.push_back({"period", period});
    p.tail_ = Tail::periodic_tail;
    p.period_ = period;
    p.origin_ = origin;
    for (double b : base.breakpoints_)
      if (b > origin && b < origin + period) p.breakpoints_.push_back(b);
    double lb = std::numeric_limits<double>::infinity();
    for (int i = 0; i <= 4000; ++i)
      lb = std::min(lb, base.f_(origin + period * i / 4000.0));
    p.lower_bound_ = lb;
    return p;
  }

  // Escape hatch for potentials outside the built-in list.
  static Potential custom(std::string name, std::function<double(double)> f,
                          double lower_bound, Tail tail,
                          double support_radius = 0.0,
                          std::optional<double> period = std::nullopt) {
    Potential p;
    p.f_ = std::move(f);
    p.name_ = std::move(name);
    p.lower_bound_ = lower_bound;
    p.tail_ = tail;
    p.support_radius_ = support_radius;
    p.period_ = period;
    return p;
  }

 private:
  Potential() = default;
  std::function<double(double)> f_;
  std::string name_;
  std::vector<std::pair<std::string, double>> params_;
  double lower_bound_ = 0.0;
  std::optional<double> period_;
  double origin_ = 0.0;
  Tail tail_ = Tail::constant_beyond;
  double support_radius_ = 0.0;
  std::vector<double> breakpoints_;
};

struct DirichletPoint {
  double x;
};

enum class Side { left, right };

namespace detail {

// Where to start the decaying solution so the initial-condition error has
// damped below ~1e-12 by the time the integration reaches x.
inline double weyl_cutoff(const Potential& V, Complex z, double x, Side side) {
  const double sgn = (side == Side::right) ? 1.0 : -1.0;
  if (V.tail() == Tail::constant_beyond) {
    // V is exactly constant beyond the support: the seed is exact there.
    return sgn * std::max(std::abs(x), V.support_radius()) + sgn;
  }
  if (V.tail() == Tail::confining) {
    const double E = z.real();
    double X = std::max(std::abs(x), 0.5);
    while (V(sgn * X) < E) {
      X += 0.5 + 0.05 * X;
      if (X > 1e6)
        throw quality_error("weyl cutoff: no turning point found (potential not confining?)");
    }
    // push past the turning point until the WKB action buys ~e^{-14} damping
    double action = 0.0;
    const double dx = 0.25;
    while (action < 14.0) {
      const double mid = V(sgn * (X + dx / 2));
      action += std::sqrt(std::max(mid - E, 0.0)) * dx;
      X += dx;
      if (X > 1e6 + 2000)
        throw quality_error("weyl cutoff: forbidden region too shallow");
    }
    return sgn * X;
  }
  throw std::invalid_argument(
      "weyl cutoff: periodic potentials use the Floquet route");
}

inline Complex qfun(const Potential& V, double x, Complex z) {
  return Complex(V(x), 0.0) - z;
}

// Monodromy of -u'' + V u = z u over [x0, x0 + L]: columns are the
// solutions with data (1,0) and (0,1) at x0.
struct Monodromy2 {
  Complex a, b, c, d;  // [u_c(L) u_s(L); u_c'(L) u_s'(L)]
  Complex trace() const { return a + d; }
  Complex det() const { return a * d - b * c; }
};

inline Monodromy2 monodromy_complex(const Potential& V, double x0, Complex z,
                                    double ode_tol) {
  if (!V.period())
    throw std::invalid_argument("monodromy: potential is not periodic");
  const double L = *V.period();
  const auto breaks = V.breakpoints_in(x0, x0 + L);
  auto coeff = [&V, z](double x) { return qfun(V, x, z); };
  Complex phase_c[2], phase_s[2];
  {
    auto tr = integrate_ode(coeff, 1.0, 0.0, RealInterval(x0, x0 + L), ode_tol,
                            false, breaks);
    phase_c[0] = tr.back().value;
    phase_c[1] = tr.back().derivative;
  }
  {
    auto tr = integrate_ode(coeff, 0.0, 1.0, RealInterval(x0, x0 + L), ode_tol,
                            false, breaks);
    phase_s[0] = tr.back().value;
    phase_s[1] = tr.back().derivative;
  }
  return {phase_c[0], phase_s[0], phase_c[1], phase_s[1]};
}

// Floquet log-derivatives of the two Weyl solutions at x. No cutoff enters:
// the multiplier with |rho| < 1 belongs to the solution decaying at +inf.
inline std::pair<Complex, Complex> floquet_m(const Potential& V, double x,
                                             Complex z, double ode_tol) {
  const Monodromy2 M = monodromy_complex(V, x, z, ode_tol);
  const Complex tr = M.trace();
  const Complex disc = std::sqrt(tr * tr - 4.0);
  Complex r1 = (tr + disc) / 2.0, r2 = (tr - disc) / 2.0;
  if (std::abs(r1) > std::abs(r2)) std::swap(r1, r2);  // r1 decays at +inf
  if (std::abs(M.b) < 1e-14)
    throw quality_error("floquet: monodromy is diagonal at this z");
  const Complex m_plus = (r1 - M.a) / M.b;
  const Complex m_minus = (r2 - M.a) / M.b;
  return {m_plus, m_minus};
}

}  // namespace detail

// Weyl solution: the solution of -u'' + V u = z u square-integrable toward
// +infinity (side = right) or -infinity (side = left), evaluated at x and
// normalized to u(x) = 1. The seed at the cutoff is u'/u = -sqrt(V - z)
// (principal branch), which is exact on constant tails and has
// exponentially damped error otherwise. With check_cutoff the computation
// repeats from a pushed-out cutoff and must agree.
struct WeylSolution {
  Complex value;       // 1 by normalization
  Complex derivative;  // the log-derivative m(x)
  double cutoff_used = 0.0;
  double cutoff_drift = 0.0;

  Complex m() const { return derivative / value; }
};

inline WeylSolution weyl_solution(const Potential& V, Complex z, Side side,
                                  double x, double cutoff,
                                  double ode_tol = 1e-11,
                                  bool check_cutoff = false,
                                  double drift_tol = 1e-7) {
  if (!(z.imag() > 0))
    throw std::invalid_argument("weyl_solution: need Im z > 0");
  const double sgn = (side == Side::right) ? 1.0 : -1.0;
  if (!(sgn * (cutoff - x) > 0))
    throw std::invalid_argument("weyl_solution: cutoff must lie beyond x");
  auto solve_from = [&](double X) {
    const Complex m0 = -sgn * std::sqrt(Complex(V(X), 0.0) - z);
    std::vector<double> breaks;
    {
      const double lo = std::min(x, X), hi = std::max(x, X);
      breaks = V.breakpoints_in(lo, hi);
    }
    auto coeff = [&V, z](double t) { return detail::qfun(V, t, z); };
    const ScaledSolution s =
        integrate_ode_scaled(coeff, 1.0, m0, X, x, ode_tol, breaks);
    if (std::abs(s.value) == 0.0)
      throw quality_error("weyl_solution: vanishing value (should not happen for Im z > 0)");
    return s.log_derivative();
  };
  WeylSolution w;
  w.cutoff_used = cutoff;
  const Complex m = solve_from(cutoff);
  w.value = 1.0;
  w.derivative = m;
  if (check_cutoff) {
    const double farther = x + 2.0 * (cutoff - x);
    const Complex m2 = solve_from(farther);
    w.cutoff_drift = std::abs(m2 - m) / (1.0 + std::abs(m));
    if (w.cutoff_drift > drift_tol)
      throw quality_error(
          "weyl_solution: log-derivative drifts when the cutoff is pushed out "
          "(drift " +
          format_g12(w.cutoff_drift) + "); cutoff too close");
  }
  return w;
}

// Diagonal Green's function G(x, x; z) = 2 / (m_minus - m_plus), the
// normalization that makes the free value (-z)^{-1/2}. Herglotz in z; xi is
// its boundary argument over pi.
inline GreensValue green_diagonal_schrodinger(const Potential& V, double x,
                                              Complex z,
                                              double ode_tol = 1e-11) {
  if (!(z.imag() > 0))
    throw std::invalid_argument("green_diagonal_schrodinger: need Im z > 0");
  Complex mp, mm;
  if (V.period()) {
    std::tie(mp, mm) = detail::floquet_m(V, x, z, ode_tol);
  } else {
    const double cr = detail::weyl_cutoff(V, z, x, Side::right);
    const double cl = detail::weyl_cutoff(V, z, x, Side::left);
    mp = weyl_solution(V, z, Side::right, x, cr, ode_tol).m();
    mm = weyl_solution(V, z, Side::left, x, cl, ode_tol).m();
  }
  return {z, 2.0 / (mm - mp)};
}

inline XiPoint xi_schrodinger(const Potential& V, double x, double lambda,
                              const std::vector<double>& eps_schedule =
                                  default_eps_schedule(),
                              double ode_tol = 1e-11) {
  detail::check_eps_schedule(eps_schedule);
  std::vector<double> raw;
  raw.reserve(eps_schedule.size());
  for (double eps : eps_schedule) {
    const GreensValue g =
        green_diagonal_schrodinger(V, x, {lambda, eps}, ode_tol);
    raw.push_back(arg_over_pi(g.value));
  }
  return detail::xi_from_eps_samples(eps_schedule, raw);
}

// ---------------------------------------------------------------------------
// Dirichlet eigenvalues by Pruefer-angle shooting.
//
// With u = r sin(theta), u' = r cos(theta), the angle obeys
//   theta' = cos^2(theta) + (lambda - V) sin^2(theta),   theta(a) = 0,
// theta(b; lambda) is strictly increasing in lambda, and lambda is the k-th
// Dirichlet eigenvalue on [a, b] exactly when theta(b) = k pi. The angle
// freezes (no spurious oscillation) in classically forbidden regions.
// ---------------------------------------------------------------------------

namespace detail {

inline double prufer_angle(const Potential& V, RealInterval box, double lambda,
                           double ode_tol) {
  auto rhs = [&V, lambda](double x, const StateN<1>& y, StateN<1>& dy) {
    const double s = std::sin(y[0]), c = std::cos(y[0]);
    dy[0] = c * c + (lambda - V(x)) * s * s;
  };
  StateN<1> y{0.0};
  const auto breaks = V.breakpoints_in(box.lo, box.hi);
  rk45_segmented<1>(rhs, box.lo, box.hi, y, ode_tol, breaks,
                    [](double, const StateN<1>&) {});
  return y[0];
}

}  // namespace detail

// Number of Dirichlet eigenvalues on the box strictly below lambda.
inline int oscillation_count(const Potential& V, RealInterval box,
                             double lambda, double ode_tol = 1e-9) {
  const double theta = detail::prufer_angle(V, box, lambda, ode_tol);
  return std::max(0, static_cast<int>(std::floor(theta / pi)));
}

// First `count` Dirichlet eigenvalues of -u'' + V u on the box, ascending.
inline std::vector<double> dirichlet_eigenvalues(const Potential& V,
                                                 RealInterval box, int count,
                                                 double root_tol = 1e-10,
                                                 double ode_tol = 1e-11) {
  if (count < 1) throw std::invalid_argument("dirichlet_eigenvalues: count >= 1");
  std::vector<double> out;
  out.reserve(count);
  double lo = V.lower_bound() - 1e-9;
  double theta_lo = detail::prufer_angle(V, box, lo, ode_tol);
  double gap_guess = 1.0;
  for (int k = 1; k <= count; ++k) {
    const double target = k * pi;
    if (theta_lo >= target)
      throw quality_error("dirichlet_eigenvalues: angle not increasing (bad bracket)");
    double hi = lo + gap_guess;
    double theta_hi = detail::prufer_angle(V, box, hi, ode_tol);
    int doublings = 0;
    while (theta_hi <= target) {
      lo = hi;
      theta_lo = theta_hi;
      gap_guess *= 2.0;
      hi += gap_guess;
      theta_hi = detail::prufer_angle(V, box, hi, ode_tol);
      if (++doublings > 120)
        throw quality_error("dirichlet_eigenvalues: could not bracket eigenvalue");
    }
    const double ek = find_root_bracketed(
        [&](double lambda) {
          return detail::prufer_angle(V, box, lambda, ode_tol) - target;
        },
        lo, hi, root_tol);
    out.push_back(ek);
    if (out.size() >= 2)
      gap_guess = std::max(1e-3, 0.75 * (out[out.size() - 1] - out[out.size() - 2]));
    lo = ek;
    theta_lo = target;  // exact at the root up to root_tol; safe lower edge
  }
  return out;
}

namespace detail {

// Box for the half/whole-line problem: walls pushed past the turning points
// of `energy` until the WKB action margin damps wall effects below ~1e-12.
inline double wall_position(const Potential& V, double energy, double from,
                            Side side) {
  const double sgn = (side == Side::right) ? 1.0 : -1.0;
  double X = std::max(std::abs(from), 0.5);
  while (V(sgn * X) < energy) {
    X += 0.5 + 0.05 * X;
    if (X > 1e6)
      throw quality_error("wall_position: potential does not confine at this energy");
  }
  double action = 0.0;
  const double dx = 0.25;
  while (action < 14.0) {
    action += std::sqrt(std::max(V(sgn * (X + dx / 2)) - energy, 0.0)) * dx;
    X += dx;
    if (X > 1e6 + 2000)
      throw quality_error("wall_position: forbidden region too shallow");
  }
  return sgn * X;
}

// Smallest energy with at least `count` box eigenvalues below it, found by
// doubling; the matching box is returned through `box`.
inline double energy_reaching_count(const Potential& V, double anchor_lo,
                                    double anchor_hi, bool grow_left,
                                    bool grow_right, int count,
                                    double ode_tol, RealInterval* box) {
  double E = V.lower_bound() + 1.0;
  for (int tries = 0; tries < 200; ++tries) {
    const double a =
        grow_left ? wall_position(V, E, anchor_lo, Side::left) : anchor_lo;
    const double b =
        grow_right ? wall_position(V, E, anchor_hi, Side::right) : anchor_hi;
    RealInterval candidate(a, b);
    if (oscillation_count(V, candidate, E, ode_tol) >= count) {
      *box = candidate;
      return E;
    }
    E = V.lower_bound() + 2.0 * (E - V.lower_bound()) + 1.0;
  }
  throw quality_error("confining eigenvalues: energy search did not terminate");
}

}  // namespace detail

// Confining whole-line problem (V -> +inf both sides): first `count`
// eigenvalues. The box is auto-grown from the turning points; the top
// eigenvalue (the one closest to the walls) is recomputed in a pushed-out
// box and must move by less than box_tol.
inline std::vector<double> dirichlet_eigenvalues_line(const Potential& V,
                                                      int count,
                                                      double root_tol = 1e-10,
                                                      double ode_tol = 1e-11,
                                                      double box_tol = 1e-8) {
  if (V.tail() != Tail::confining)
    throw std::invalid_argument("dirichlet_eigenvalues_line: potential must confine");
  RealInterval box(-1.0, 1.0);
  detail::energy_reaching_count(V, 0.0, 0.0, true, true, count, ode_tol, &box);
  auto evs = dirichlet_eigenvalues(V, box, count, root_tol, ode_tol);
  // wall-sensitivity check on the top eigenvalue
  const double top = evs.back();
  RealInterval wide(detail::wall_position(V, top, box.lo, Side::left) - 5.0,
                    detail::wall_position(V, top, box.hi, Side::right) + 5.0);
  const double target = count * pi;
  const double pad = std::max(1e-5, 1e-6 * std::abs(top));
  double moved;
  try {
    moved = find_root_bracketed(
        [&](double lambda) {
          return detail::prufer_angle(V, wide, lambda, ode_tol) - target;
        },
        top - pad, top + pad, root_tol);
  } catch (const std::invalid_argument&) {
    throw quality_error(
        "dirichlet_eigenvalues_line: spectrum moved past the check bracket "
        "when the box was widened (box too small)");
  }
  if (std::abs(moved - top) > box_tol)
    throw quality_error("dirichlet_eigenvalues_line: box-sensitive spectrum (moved " +
                        format_g12(std::abs(moved - top)) + ")");
  evs.back() = moved;
  return evs;
}

// Half-line problem on [x0, +inf) (side = right) or (-inf, x0] (side = left)
// with a Dirichlet condition at x0, for confining V.
inline std::vector<double> dirichlet_eigenvalues_halfline(
    const Potential& V, double x0, Side side, int count,
    double root_tol = 1e-10, double ode_tol = 1e-11) {
  if (V.tail() != Tail::confining)
    throw std::invalid_argument("dirichlet_eigenvalues_halfline: potential must confine");
  RealInterval box(-1.0, 1.0);
  if (side == Side::right)
    detail::energy_reaching_count(V, x0, x0, false, true, count, ode_tol, &box);
  else
    detail::energy_reaching_count(V, x0, x0, true, false, count, ode_tol, &box);
  return dirichlet_eigenvalues(V, box, count, root_tol, ode_tol);
}

// ---------------------------------------------------------------------------
// Exact step-function xi for confining potentials from eigenvalue counting:
// +1 jumps at eigenvalues of H, -1 jumps at eigenvalues of H with an extra
// Dirichlet condition at x (the union of the two half-line spectra).
// ---------------------------------------------------------------------------

// Builds xi from spectral data. e_list are whole-line eigenvalues starting
// at the ground state; mu_list the Dirichlet eigenvalues at the base point
// (both half-lines merged, ascending, ties kept). Interlacing
// e_{k-1} <= mu_k <= e_k is validated to data_tol. The result is exact up to
// e_list[mu_list.size()], beyond which unknown mu's would enter.
inline XiGrid xi_confining(const std::vector<double>& e_list,
                           const std::vector<double>& mu_list,
                           double base_point, double data_tol = 1e-6) {
  if (e_list.empty()) throw std::invalid_argument("xi_confining: empty e_list");
  if (e_list.size() < mu_list.size() + 1)
    throw std::invalid_argument(
        "xi_confining: need one more eigenvalue than mu (coverage)");
  for (std::size_t i = 1; i < e_list.size(); ++i)
    if (!(e_list[i - 1] < e_list[i]))
      throw std::invalid_argument("xi_confining: eigenvalues must increase");
  for (std::size_t k = 0; k < mu_list.size(); ++k) {
    if (k > 0 && mu_list[k] < mu_list[k - 1] - data_tol)
      throw std::invalid_argument("xi_confining: mu must be non-decreasing");
    if (mu_list[k] < e_list[k] - data_tol || mu_list[k] > e_list[k + 1] + data_tol)
      throw quality_error("xi_confining: interlacing violated at mu[" +
                          std::to_string(k) + "]");
  }
  // Only the first mu_list.size() + 1 eigenvalues participate: past
  // e_list[#mu] the next (unknown) mu would already matter. Extra
  // eigenvalues are accepted but ignored.
  std::vector<std::pair<double, int>> events;
  for (std::size_t k = 0; k <= mu_list.size(); ++k)
    events.push_back({e_list[k], +1});
  for (double m : mu_list) events.push_back({m, -1});
  std::sort(events.begin(), events.end());
  std::vector<double> jumps;
  std::vector<double> plateaus{0.0};
  int level = 0;
  std::size_t i = 0;
  while (i < events.size()) {
    const double loc = events[i].first;
    int step = 0;
    while (i < events.size() &&
           events[i].first <= loc + data_tol * (1.0 + std::abs(loc)))
      step += events[i++].second;
    if (step == 0) continue;
    level += step;
    if (level < 0 || level > 1)
      throw quality_error("xi_confining: counting left [0, 1] near lambda = " +
                          format_g12(loc));
    jumps.push_back(loc);
    plateaus.push_back(static_cast<double>(level));
  }
  const double cover_hi = e_list[mu_list.size()];
  return XiGrid::piecewise(base_point, std::move(jumps), std::move(plateaus),
                           -std::numeric_limits<double>::infinity(), cover_hi);
}

// End-to-end variant: computes the spectral data by shooting until xi is
// covered past lambda_max.
inline XiGrid xi_confining(const Potential& V, double x, double lambda_max,
                           double root_tol = 1e-10, double ode_tol = 1e-11) {
  if (V.tail() != Tail::confining)
    throw std::invalid_argument("xi_confining: potential must confine");
  if (!(lambda_max > V.lower_bound()))
    throw std::invalid_argument("xi_confining: lambda_max below the potential");
  double slack = 1e-3 * (lambda_max - V.lower_bound()) + 1e-6;
  for (int attempt = 0; attempt < 6; ++attempt) {
    const double cap = lambda_max + slack;
    RealInterval line_box(detail::wall_position(V, cap, 0.0, Side::left),
                          detail::wall_position(V, cap, 0.0, Side::right));
    RealInterval rbox(x, detail::wall_position(V, cap, x, Side::right));
    RealInterval lbox(detail::wall_position(V, cap, x, Side::left), x);

    const int n_e = oscillation_count(V, line_box, cap, ode_tol) + 1;
    const int n_r = oscillation_count(V, rbox, cap, ode_tol);
    const int n_l = oscillation_count(V, lbox, cap, ode_tol);
    if (n_e < n_r + n_l + 1)
      throw quality_error("xi_confining: inconsistent counting data");

    const auto e_list =
        dirichlet_eigenvalues(V, line_box, n_e, root_tol, ode_tol);
    std::vector<double> mu;
    if (n_r > 0) {
      const auto r = dirichlet_eigenvalues(V, rbox, n_r, root_tol, ode_tol);
      mu.insert(mu.end(), r.begin(), r.end());
    }
    if (n_l > 0) {
      const auto l = dirichlet_eigenvalues(V, lbox, n_l, root_tol, ode_tol);
      mu.insert(mu.end(), l.begin(), l.end());
    }
    std::sort(mu.begin(), mu.end());
    while (!mu.empty() && mu.back() > e_list.back()) mu.pop_back();
    // Coverage reaches only e_list[#mu]; if an unlucky gap alignment leaves
    // that short of lambda_max, enlarge the probe window and redo.
    if (mu.size() < e_list.size() && e_list[mu.size()] >= lambda_max)
      return xi_confining(e_list, mu, x, std::max(100.0 * root_tol, 1e-7));
    slack = 2.0 * slack +
            2.0 * (e_list.back() - e_list[e_list.size() - 2]) + 0.5;
  }
  throw quality_error("xi_confining: could not cover lambda_max");
}

}  // namespace xitrace
