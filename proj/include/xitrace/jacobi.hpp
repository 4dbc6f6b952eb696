#pragma once

// Discrete (Jacobi) side: doubly infinite tridiagonal operators with unit
// off-diagonal and bounded site potential v. Spectral shift data comes from
// two routes that must agree: eigenvalue counting on truncations, and the
// boundary value arg G(n, n; lambda + i0) / pi of the diagonal Green's
// function, computed by continued fractions.

#include <Eigen/Dense>
#include <cstdint>
#include <functional>
#include <utility>

#include "xitrace/xi_grid.hpp"

namespace xitrace {

namespace detail {

inline std::uint64_t splitmix64(std::uint64_t x) {
  x += 0x9e3779b97f4a7c15ULL;
  x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
  x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
  return x ^ (x >> 31);
}

}  // namespace detail

// (h u)(n) = u(n+1) + u(n-1) + v(n) u(n) on l^2(Z), |v| <= bound.
// The spectrum is contained in [-2 - bound, 2 + bound].
class JacobiOperator {
 public:
  JacobiOperator(std::function<double(std::int64_t)> v, double bound,
                 std::string description)
      : v_(std::move(v)), bound_(bound), description_(std::move(description)) {
    if (!(bound_ >= 0) || !std::isfinite(bound_))
      throw std::invalid_argument("JacobiOperator: bound must be finite, >= 0");
  }

  static JacobiOperator constant(double c) {
    return JacobiOperator([c](std::int64_t) { return c; }, std::abs(c),
                          "constant");
  }

  static JacobiOperator periodic(std::vector<double> cell) {
    if (cell.empty())
      throw std::invalid_argument("JacobiOperator::periodic: empty cell");
    double b = 0;
    for (double v : cell) b = std::max(b, std::abs(v));
    const auto T = static_cast<std::int64_t>(cell.size());
    return JacobiOperator(
        [cell = std::move(cell), T](std::int64_t n) {
          std::int64_t r = n % T;
          if (r < 0) r += T;
          return cell[static_cast<std::size_t>(r)];
        },
        b, "periodic");
  }

  // v(n) = coupling * cos(pi * (p/q) * n + theta), p/q in lowest terms.
  static JacobiOperator almost_mathieu(double coupling, std::int64_t p,
                                       std::int64_t q, double theta = 0.0) {
    if (q <= 0 || p < 0)
      throw std::invalid_argument("almost_mathieu: need q >= 1, p >= 0");
    return JacobiOperator(
        [coupling, p, q, theta](std::int64_t n) {
          return coupling *
                 std::cos(pi * static_cast<double>(p) * static_cast<double>(n) /
                              static_cast<double>(q) +
                          theta);
        },
        std::abs(coupling), "almost_mathieu");
  }

  // Finitely supported v: entries[i] sits at site first_index + i, zero
  // elsewhere.
  static JacobiOperator finite(std::vector<double> entries,
                               std::int64_t first_index) {
    double b = 0;
    for (double v : entries) b = std::max(b, std::abs(v));
    const auto m = static_cast<std::int64_t>(entries.size());
    return JacobiOperator(
        [entries = std::move(entries), first_index, m](std::int64_t n) {
          const std::int64_t k = n - first_index;
          return (k >= 0 && k < m) ? entries[static_cast<std::size_t>(k)] : 0.0;
        },
        b, "finite");
  }

  // Deterministic site-iid uniform values in [-bound, bound], reproducible
  // from (seed, n) via a counter-based hash, defined on all of Z.
  static JacobiOperator random_uniform(double bound, std::uint64_t seed) {
    if (!(bound > 0))
      throw std::invalid_argument("random_uniform: bound must be > 0");
    return JacobiOperator(
        [bound, seed](std::int64_t n) {
          const std::uint64_t h = detail::splitmix64(
              seed ^ detail::splitmix64(static_cast<std::uint64_t>(n) +
                                        0x632be59bd9b4e019ULL));
          const double u =
              static_cast<double>(h >> 11) * (1.0 / 9007199254740992.0);
          return bound * (2.0 * u - 1.0);
        },
        bound, "random_uniform");
  }

  double v(std::int64_t n) const { return v_(n); }
  double bound() const { return bound_; }
  const std::string& description() const { return description_; }
  double spectrum_lo() const { return -2.0 - bound_; }
  double spectrum_hi() const { return 2.0 + bound_; }

 private:
  std::function<double(std::int64_t)> v_;
  double bound_;
  std::string description_;
};

struct DirichletSite {
  std::int64_t n;
};

// Finite section over sites [first, last] with Dirichlet (zero) boundary
// conditions outside the window.
class TruncatedJacobi {
 public:
  TruncatedJacobi(std::int64_t first, std::vector<double> diag)
      : first_(first), diag_(std::move(diag)) {}

  std::int64_t first() const { return first_; }
  std::int64_t last() const {
    return first_ + static_cast<std::int64_t>(diag_.size()) - 1;
  }
  std::size_t size() const { return diag_.size(); }
  const std::vector<double>& diagonal() const { return diag_; }
  bool contains(std::int64_t n) const { return n >= first_ && n <= last(); }

 private:
  std::int64_t first_;
  std::vector<double> diag_;
};

inline TruncatedJacobi truncate(const JacobiOperator& h, std::int64_t first,
                                std::int64_t last) {
  if (last < first)
    throw std::invalid_argument("truncate: window must be non-empty");
  std::vector<double> diag;
  diag.reserve(static_cast<std::size_t>(last - first + 1));
  for (std::int64_t n = first; n <= last; ++n) diag.push_back(h.v(n));
  return TruncatedJacobi(first, std::move(diag));
}

// Removes the site entirely (the boundary-condition convention used
// throughout): the complement splits into the blocks left and right of it.
// Either block may be empty.
inline std::pair<TruncatedJacobi, TruncatedJacobi> dirichlet_decouple(
    const TruncatedJacobi& t, DirichletSite site) {
  if (!t.contains(site.n))
    throw std::invalid_argument("dirichlet_decouple: site outside window");
  const auto k = static_cast<std::size_t>(site.n - t.first());
  std::vector<double> left(t.diagonal().begin(), t.diagonal().begin() + k);
  std::vector<double> right(t.diagonal().begin() + k + 1, t.diagonal().end());
  return {TruncatedJacobi(t.first(), std::move(left)),
          TruncatedJacobi(site.n + 1, std::move(right))};
}

// Eigenvalues of the finite section (unit off-diagonal), ascending.
inline std::vector<double> eigenvalues_tridiagonal(const TruncatedJacobi& t) {
  const auto n = static_cast<Eigen::Index>(t.size());
  if (n == 0) return {};
  Eigen::VectorXd diag(n);
  for (Eigen::Index i = 0; i < n; ++i)
    diag[i] = t.diagonal()[static_cast<std::size_t>(i)];
  Eigen::VectorXd sub = Eigen::VectorXd::Ones(std::max<Eigen::Index>(n - 1, 0));
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> solver;
  solver.computeFromTridiagonal(diag, sub, Eigen::EigenvaluesOnly);
  if (solver.info() != Eigen::Success)
    throw quality_error("eigenvalues_tridiagonal: eigensolver failed");
  std::vector<double> out(static_cast<std::size_t>(n));
  for (Eigen::Index i = 0; i < n; ++i) out[static_cast<std::size_t>(i)] = solver.eigenvalues()[i];
  std::sort(out.begin(), out.end());
  return out;
}

// Counting form of the shift function for a finite section:
//   xi(lambda) = #{eig(t) <= lambda} - #{eig(t with site removed) <= lambda},
// right-continuous in lambda. Interlacing pins the value to {0, 1}.
inline int xi_counting(const TruncatedJacobi& t, DirichletSite site,
                       double lambda) {
  const auto [left, right] = dirichlet_decouple(t, site);
  const auto full = eigenvalues_tridiagonal(t);
  auto count = [lambda](const std::vector<double>& e) {
    return static_cast<int>(std::upper_bound(e.begin(), e.end(), lambda) -
                            e.begin());
  };
  int c = count(full);
  c -= count(eigenvalues_tridiagonal(left));
  c -= count(eigenvalues_tridiagonal(right));
  return c;
}

// The same data as an exact step function of lambda (valid on the whole
// line: below the union of spectra it is 0, above it is 1).
inline XiGrid xi_counting_grid(const TruncatedJacobi& t, DirichletSite site) {
  const auto [left, right] = dirichlet_decouple(t, site);
  const auto full = eigenvalues_tridiagonal(t);
  auto lefts = eigenvalues_tridiagonal(left);
  auto rights = eigenvalues_tridiagonal(right);
  std::vector<std::pair<double, int>> events;
  events.reserve(full.size() + lefts.size() + rights.size());
  for (double e : full) events.push_back({e, +1});
  for (double e : lefts) events.push_back({e, -1});
  for (double e : rights) events.push_back({e, -1});
  std::sort(events.begin(), events.end());

  // Eigenvalues of the section and its decoupling can coincide to machine
  // precision (near-degenerate pairs from states far from the site); cluster
  // such events so rounding cannot flip their order and fake a plateau of -1.
  // The tolerance sits well above eigensolver noise (~n eps |T|) yet shifts
  // jump locations by far less than anything downstream integrates to.
  const double merge_tol = 1e-13 * (4.0 + 2.0 * std::abs(events.back().first));
  std::vector<double> jumps;
  std::vector<double> plateaus{0.0};
  int level = 0;
  std::size_t i = 0;
  while (i < events.size()) {
    const double loc = events[i].first;
    int step = 0;
    double loc_sum = 0.0;
    int merged = 0;
    while (i < events.size() && events[i].first <= loc + merge_tol) {
      loc_sum += events[i].first;
      ++merged;
      step += events[i++].second;
    }
    if (step == 0) continue;
    level += step;
    jumps.push_back(loc_sum / merged);
    plateaus.push_back(static_cast<double>(level));
  }
  for (double p : plateaus)
    if (p < 0.0 || p > 1.0)
      throw quality_error("xi_counting_grid: interlacing violated");
  return XiGrid::piecewise(static_cast<double>(site.n), std::move(jumps),
                           std::move(plateaus));
}

// Diagonal Green's function by continued fractions: the half-line functions
// obey m = 1 / (v(k) - z - m_next), seeded with m = 0 at the given depth, and
//   G(n, n; z) = 1 / (v(n) - z - m_plus - m_minus).
// Im G > 0 whenever Im z > 0 (each CF level preserves the half-plane).
inline GreensValue green_diagonal(const JacobiOperator& h, std::int64_t n,
                                  Complex z, std::int64_t depth) {
  if (depth < 1) throw std::invalid_argument("green_diagonal: depth >= 1");
  if (!(z.imag() > 0))
    throw std::invalid_argument("green_diagonal: need Im z > 0");
  Complex mp = 0.0, mm = 0.0;
  for (std::int64_t k = depth; k >= 1; --k) mp = 1.0 / (h.v(n + k) - z - mp);
  for (std::int64_t k = depth; k >= 1; --k) mm = 1.0 / (h.v(n - k) - z - mm);
  return {z, 1.0 / (h.v(n) - z - mp - mm)};
}

// Depth heuristic for direct green_diagonal use; near the real axis inside a
// band the continued fraction contracts by only 1 - O(Im z) per level, so
// the converged variant below is what xi extraction uses.
inline std::int64_t default_green_depth(Complex z) {
  const double im = z.imag();
  if (!(im > 0)) throw std::invalid_argument("default_green_depth: Im z > 0");
  return std::min<std::int64_t>(
      1000000, static_cast<std::int64_t>(std::ceil(20.0 / im)) + 16);
}

namespace detail {

// Evaluates one half-line continued fraction at geometrically growing depths
// until two consecutive checkpoints agree to reltol (two, because a slowly
// rotating tail can alias a single comparison). Throws if the cap is hit.
inline Complex halfline_cf_converged(const JacobiOperator& h, std::int64_t n,
                                     int dir, Complex z, double reltol,
                                     std::int64_t max_depth) {
  auto eval = [&](std::int64_t depth) {
    Complex m = 0.0;
    for (std::int64_t k = depth; k >= 1; --k)
      m = 1.0 / (h.v(n + dir * k) - z - m);
    return m;
  };
  std::int64_t depth = 32;
  Complex prev = eval(depth);
  int agreements = 0;
  while (depth < max_depth) {
    depth = depth + depth / 2 + 8;
    if (depth > max_depth) depth = max_depth;
    const Complex cur = eval(depth);
    if (std::abs(cur - prev) <= reltol * (1.0 + std::abs(cur))) {
      if (++agreements >= 2) return cur;
    } else {
      agreements = 0;
    }
    prev = cur;
  }
  throw quality_error("green_diagonal: continued fraction did not settle");
}

}  // namespace detail

inline GreensValue green_diagonal_converged(const JacobiOperator& h,
                                            std::int64_t n, Complex z,
                                            double reltol = 1e-11,
                                            std::int64_t max_depth = 60000000) {
  if (!(z.imag() > 0))
    throw std::invalid_argument("green_diagonal_converged: need Im z > 0");
  const Complex mp = detail::halfline_cf_converged(h, n, +1, z, reltol, max_depth);
  const Complex mm = detail::halfline_cf_converged(h, n, -1, z, reltol, max_depth);
  return {z, 1.0 / (h.v(n) - z - mp - mm)};
}

inline XiPoint xi_arg(const JacobiOperator& h, std::int64_t n, double lambda,
                      const std::vector<double>& eps_schedule =
                          default_eps_schedule()) {
  detail::check_eps_schedule(eps_schedule);
  std::vector<double> raw;
  raw.reserve(eps_schedule.size());
  for (double eps : eps_schedule) {
    const GreensValue g = green_diagonal_converged(h, n, {lambda, eps});
    raw.push_back(arg_over_pi(g.value));
  }
  return detail::xi_from_eps_samples(eps_schedule, raw);
}

// Trace identity for finite sections: with step data xi and the spectrum
// enclosed in [e_minus, e_plus],
//   v(site) = (e_minus + e_plus) / 2 + integral over [e_minus, e_plus] of
//             (1/2 - xi). Exact for counting data.
inline double trace_formula_jacobi(const XiGrid& xi, double e_minus,
                                   double e_plus) {
  if (!(e_minus < e_plus))
    throw std::invalid_argument("trace_formula_jacobi: need e_minus < e_plus");
  if (!xi.covers(e_minus, e_plus))
    throw std::invalid_argument("trace_formula_jacobi: xi does not cover range");
  double integral;
  if (xi.rep() == XiGrid::Rep::piecewise) {
    integral = integrate_piecewise_constant(xi.affine_step(-1.0, 0.5),
                                            RealInterval(e_minus, e_plus));
  } else {
    const GriddedFn f = xi.affine_grid(-1.0, 0.5);
    integral = 0.0;
    for (std::size_t i = 1; i < f.lambdas.size(); ++i) {
      const double a = std::clamp(f.lambdas[i - 1], e_minus, e_plus);
      const double b = std::clamp(f.lambdas[i], e_minus, e_plus);
      if (b > a) integral += 0.5 * (f.values[i - 1] + f.values[i]) * (b - a);
    }
  }
  return 0.5 * (e_minus + e_plus) + integral;
}

// Tight enclosure of the union spectrum of the section and its decoupling,
// the natural [e_minus, e_plus] for the identity above.
inline std::pair<double, double> spectral_enclosure(const TruncatedJacobi& t,
                                                    DirichletSite site) {
  const auto [left, right] = dirichlet_decouple(t, site);
  auto full = eigenvalues_tridiagonal(t);
  double lo = full.front(), hi = full.back();
  for (const auto& part : {left, right}) {
    const auto e = eigenvalues_tridiagonal(part);
    if (!e.empty()) {
      lo = std::min(lo, e.front());
      hi = std::max(hi, e.back());
    }
  }
  // single-site section with nothing left after deletion: the identity holds
  // on any interval containing the spectrum, so pad the degenerate point
  if (!(lo < hi)) {
    lo -= 0.5;
    hi += 0.5;
  }
  return {lo, hi};
}

}  // namespace xitrace
