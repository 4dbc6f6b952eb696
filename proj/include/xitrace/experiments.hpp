#pragma once

// Numerical experiments built on the library: almost-Mathieu spectra at
// rational frequency with the |spec| >= 4 - 2|coupling| measure bound, and
// an inverse-spectral demonstration recovering V(0) of an even confining
// potential from its eigenvalues alone.

#include <Eigen/Dense>
#include <numeric>

#include "xitrace/jacobi.hpp"
#include "xitrace/numerics.hpp"
#include "xitrace/schrodinger.hpp"
#include "xitrace/trace.hpp"

namespace xitrace {

struct AlmostMathieuSpectrum {
  double coupling = 0.0;
  std::int64_t p = 0, q = 1;
  double theta = 0.0;
  std::int64_t period = 1;           // q for even p, 2q otherwise
  std::vector<RealInterval> bands;   // merged, disjoint
  double measure = 0.0;
  double lower_bound = 0.0;          // 4 - 2|coupling|, clamped at 0
};

namespace detail {

inline std::vector<double> bloch_cell_eigenvalues(
    const std::vector<double>& diag, double corner) {
  const auto T = static_cast<Eigen::Index>(diag.size());
  Eigen::MatrixXd M = Eigen::MatrixXd::Zero(T, T);
  for (Eigen::Index i = 0; i < T; ++i) M(i, i) = diag[static_cast<std::size_t>(i)];
  for (Eigen::Index i = 0; i + 1 < T; ++i) {
    M(i, i + 1) += 1.0;
    M(i + 1, i) += 1.0;
  }
  // periodic / antiperiodic closure; for T = 1 and T = 2 the wrap lands on
  // entries already holding hopping terms, which the += handles
  M(0, T - 1) += corner;
  M(T - 1, 0) += corner;
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> solver(M, Eigen::EigenvaluesOnly);
  if (solver.info() != Eigen::Success)
    throw quality_error("bloch cell: eigensolver failed");
  std::vector<double> out(static_cast<std::size_t>(T));
  for (Eigen::Index i = 0; i < T; ++i)
    out[static_cast<std::size_t>(i)] = solver.eigenvalues()[i];
  std::sort(out.begin(), out.end());
  return out;
}

inline std::vector<RealInterval> merge_intervals(
    std::vector<std::pair<double, double>> raw) {
  std::sort(raw.begin(), raw.end());
  std::vector<RealInterval> out;
  double lo = raw.front().first, hi = raw.front().second;
  for (std::size_t i = 1; i < raw.size(); ++i) {
    if (raw[i].first <= hi + 1e-12) {
      hi = std::max(hi, raw[i].second);
    } else {
      out.emplace_back(lo, hi);
      lo = raw[i].first;
      hi = raw[i].second;
    }
  }
  out.emplace_back(lo, hi);
  return out;
}

}  // namespace detail

// Spectrum of u(n+1) + u(n-1) + coupling cos(pi p n / q + theta) u(n) for
// rational frequency p/q in lowest terms: the union over the Bloch phase of
// the cell eigenvalues. Band j runs between the j-th periodic and j-th
// antiperiodic eigenvalue (the discriminant is monotone across each band),
// so the sorted union of the two corner cases gives all band edges.
inline AlmostMathieuSpectrum almost_mathieu_spectrum(double coupling,
                                                     std::int64_t p,
                                                     std::int64_t q,
                                                     double theta = 0.0) {
  if (q < 1 || p < 0) throw std::invalid_argument("almost_mathieu_spectrum: bad p/q");
  if (std::gcd(p, q) != 1)
    throw std::invalid_argument("almost_mathieu_spectrum: p/q must be in lowest terms");
  AlmostMathieuSpectrum s;
  s.coupling = coupling;
  s.p = p;
  s.q = q;
  s.theta = theta;
  s.period = (p % 2 == 0) ? q : 2 * q;
  const JacobiOperator h = JacobiOperator::almost_mathieu(coupling, p, q, theta);
  std::vector<double> diag;
  diag.reserve(static_cast<std::size_t>(s.period));
  for (std::int64_t n = 0; n < s.period; ++n) diag.push_back(h.v(n));

  const auto per = detail::bloch_cell_eigenvalues(diag, +1.0);
  const auto anti = detail::bloch_cell_eigenvalues(diag, -1.0);
  std::vector<double> edges;
  edges.reserve(per.size() + anti.size());
  edges.insert(edges.end(), per.begin(), per.end());
  edges.insert(edges.end(), anti.begin(), anti.end());
  std::sort(edges.begin(), edges.end());

  std::vector<std::pair<double, double>> raw;
  for (std::size_t j = 0; j + 1 < edges.size(); j += 2)
    raw.push_back({edges[j], edges[j + 1]});
  s.bands = detail::merge_intervals(std::move(raw));
  s.measure = 0.0;
  for (const auto& b : s.bands) s.measure += b.length();
  s.lower_bound = std::max(0.0, 4.0 - 2.0 * std::abs(coupling));
  return s;
}

struct AcBoundRow {
  std::int64_t p = 0, q = 1;
  double alpha = 0.0;     // p / q
  double measure = 0.0;   // |spec intersect S|
  double bound = 0.0;     // 4 - 2|coupling|
};

struct AcBoundReport {
  double coupling = 0.0;
  RealInterval window{-5.0, 5.0};  // S
  std::vector<AcBoundRow> rows;
  double tail_max = 0.0;  // max measure over the tail half of the sequence
};

// Measures |spec(h_{p/q}) intersect S| along a sequence of rationals. For
// S containing [-2 - |coupling|, 2 + |coupling|] each row is bounded below
// by 4 - 2|coupling|; the tail max is the finite-sequence stand-in for the
// limsup along approximants of an irrational frequency.
inline AcBoundReport ac_bound_experiment(
    double coupling, const std::vector<std::pair<std::int64_t, std::int64_t>>& pq,
    RealInterval window) {
  if (pq.empty()) throw std::invalid_argument("ac_bound_experiment: no approximants");
  AcBoundReport rep;
  rep.coupling = coupling;
  rep.window = window;
  for (const auto& [p, q] : pq) {
    const auto s = almost_mathieu_spectrum(coupling, p, q);
    double m = 0.0;
    for (const auto& b : s.bands) {
      const double lo = std::max(b.lo, window.lo);
      const double hi = std::min(b.hi, window.hi);
      if (hi > lo) m += hi - lo;
    }
    rep.rows.push_back({p, q, static_cast<double>(p) / static_cast<double>(q),
                        m, std::max(0.0, 4.0 - 2.0 * std::abs(coupling))});
  }
  const std::size_t from = rep.rows.size() / 2;
  for (std::size_t i = from; i < rep.rows.size(); ++i)
    rep.tail_max = std::max(rep.tail_max, rep.rows[i].measure);
  return rep;
}

struct BorgReport {
  std::vector<double> eigenvalues;   // E_0 < E_1 < ... as computed
  XiGrid xi0;                        // xi(0, .) implied by evenness
  ReconstructionResult reconstruction;
  double v0_reconstructed = 0.0;
  double v0_true = 0.0;
  double abs_error = 0.0;
  bool low_confidence = false;  // too few levels for a small alpha schedule
};

// Even confining V: the Dirichlet spectrum at x = 0 is the odd-indexed
// eigenvalues doubled (each odd eigenfunction vanishes at 0 and restricts to
// both half-lines), so xi(0, .) follows from the eigenvalues alone:
// +1 jumps at every E_n, -2 jumps at odd-indexed E_n. Feeding that into the
// Abel-regularized trace formula recovers V(0). The alpha schedule is
// derived from the highest computed level via the cutoff rule.
inline BorgReport borg_demo(const Potential& V, int n_levels,
                            double root_tol = 1e-10, double ode_tol = 1e-11) {
  if (n_levels < 8) throw std::invalid_argument("borg_demo: need n_levels >= 8");
  for (double t : {0.3, 0.7, 1.3, 2.1, 3.4}) {
    if (std::abs(V(t) - V(-t)) > 1e-10 * (1.0 + std::abs(V(t))))
      throw std::invalid_argument("borg_demo: potential must be even");
  }
  const auto E = dirichlet_eigenvalues_line(V, n_levels, root_tol, ode_tol);

  std::vector<double> mu;
  for (std::size_t n = 1; n + 1 < E.size(); n += 2) {
    mu.push_back(E[n]);
    mu.push_back(E[n]);
  }
  XiGrid xi = xi_confining(E, mu, 0.0, std::max(100.0 * root_tol, 1e-7));

  // largest alpha_min consistent with the computed levels: the weight left
  // beyond coverage must be below 1e-8
  const double e0 = E.front();
  const double covered = xi.cover_hi() - e0;
  const double alpha_min = std::log(1e8) / covered;
  AbelSchedule schedule{{4.0 * alpha_min, 2.0 * alpha_min, alpha_min},
                        e0 + covered * (1.0 - 1e-9)};
  schedule.validate();
  const ReconstructionResult rec = reconstruct_V(xi, e0, schedule);

  BorgReport rep{E,
                 std::move(xi),
                 rec,
                 rec.value,
                 V(0.0),
                 std::abs(rec.value - V(0.0)),
                 alpha_min > 0.12};
  return rep;
}

}  // namespace xitrace
