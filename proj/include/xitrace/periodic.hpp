#pragma once

// Periodic potentials: monodromy matrix, Hill discriminant, band/gap
// structure, Dirichlet eigenvalues over one period, and the resulting step
// function xi (1/2 on bands; 1 then 0 across each open gap, split at mu).

#include "xitrace/schrodinger.hpp"

namespace xitrace {

struct Monodromy {
  double a, b, c, d;  // [u_c(L) u_s(L); u_c'(L) u_s'(L)] based at x0
  double trace() const { return a + d; }
  double det() const { return a * d - b * c; }
};

inline Monodromy monodromy(const Potential& V, double lambda, double x0 = 0.0,
                           double ode_tol = 1e-12) {
  const detail::Monodromy2 M =
      detail::monodromy_complex(V, x0, Complex(lambda, 0.0), ode_tol);
  return {M.a.real(), M.b.real(), M.c.real(), M.d.real()};
}

// Hill discriminant; |Delta| <= 2 exactly on the bands.
inline double discriminant(const Potential& V, double lambda,
                           double ode_tol = 1e-12) {
  return monodromy(V, lambda, 0.0, ode_tol).trace();
}

struct BandStructure {
  std::vector<double> edges;        // E_0 <= E_1 <= ... (2 per band)
  std::vector<double> gap_lengths;  // E_{2n} - E_{2n-1}, one per interior gap
  double period;

  std::size_t band_count() const { return edges.size() / 2; }
  RealInterval band(std::size_t n) const {
    return RealInterval(edges.at(2 * n), edges.at(2 * n + 1));
  }
  // closed gaps are recorded with coinciding edges
  bool gap_closed(std::size_t n, double tol = 1e-9) const {
    return gap_lengths.at(n) < tol;
  }
};

namespace detail {

struct EdgeScan {
  std::function<double(double)> delta;
  double xtol;

  double refine_crossing(double lo, double hi, double level) const {
    return find_root_bracketed(
        [&](double l) { return delta(l) - level; }, lo, hi, xtol);
  }

  // golden-section extremum of sign * delta on [lo, hi] (unimodal there)
  double refine_extremum(double lo, double hi, double sign) const {
    const double phi = 0.5 * (std::sqrt(5.0) - 1.0);
    double a = lo, b = hi;
    double c = b - phi * (b - a), d = a + phi * (b - a);
    double fc = sign * delta(c), fd = sign * delta(d);
    while (b - a > xtol) {
      if (fc > fd) {
        b = d;
        d = c;
        fd = fc;
        c = b - phi * (b - a);
        fc = sign * delta(c);
      } else {
        a = c;
        c = d;
        fc = fd;
        d = a + phi * (b - a);
        fd = sign * delta(d);
      }
    }
    return 0.5 * (a + b);
  }
};

}  // namespace detail

// First n_bands spectral bands by scanning the discriminant. Band interiors
// have |Delta| < 2 with Delta strictly monotone; every band-to-band stretch
// carries exactly one extremum of Delta beyond (or tangent to) +/-2, so open
// gaps come from bracketed crossings and tangencies give closed gaps. A
// three-point extremum watch guards against the scan stepping over a narrow
// gap (inside a band run) or a narrow band (inside a gap run). Gaps shorter
// than closed_tol are collapsed to a double edge.
inline BandStructure band_edges(const Potential& V, int n_bands,
                                double ode_tol = 1e-12, double xtol = 1e-12,
                                double closed_tol = 1e-9) {
  if (!V.period()) throw std::invalid_argument("band_edges: V must be periodic");
  if (n_bands < 1) throw std::invalid_argument("band_edges: n_bands >= 1");
  const double L = *V.period();
  const std::size_t want = 2 * static_cast<std::size_t>(n_bands);
  auto delta = [&V, ode_tol](double lambda) {
    return discriminant(V, lambda, ode_tol);
  };
  const detail::EdgeScan scan{delta, xtol};

  BandStructure bs;
  bs.period = L;

  // below the spectrum Delta > 2
  double x_prev = V.lower_bound() - 1e-6;
  double f_prev = delta(x_prev);
  while (f_prev <= 2.0) {
    x_prev -= 1.0 + 0.2 * std::abs(x_prev);
    f_prev = delta(x_prev);
    if (x_prev < V.lower_bound() - 1e6)
      throw quality_error("band_edges: no region with Delta > 2 found");
  }

  auto push_edge = [&bs, want](double e) {
    if (bs.edges.size() % 2 == 0 && !bs.edges.empty())
      bs.gap_lengths.push_back(e - bs.edges.back());
    bs.edges.push_back(e);
    return bs.edges.size() >= want;
  };

  // above +2 / inside the strip / below -2
  auto region = [](double f) { return (f > 2.0) ? +1 : (f < -2.0 ? -1 : 0); };

  // Resolves every strip-boundary crossing inside (a, b) in ascending order.
  // Adjacent gaps carry opposite signs of Delta, so a segment that straddles
  // the whole strip (a band narrower than the scan step) always separates
  // into single crossings under bisection.
  std::function<bool(double, double, double, double, int)> process =
      [&](double a, double fa, double b, double fb, int depth) -> bool {
    const int ra = region(fa), rb = region(fb);
    if (ra == rb) return false;
    if (ra * rb < 0) {
      if (depth > 80)
        throw quality_error("band_edges: could not separate a strip transit");
      const double m = 0.5 * (a + b), fm = delta(m);
      if (process(a, fa, m, fm, depth + 1)) return true;
      return process(m, fm, b, fb, depth + 1);
    }
    const double level = (ra + rb > 0) ? 2.0 : -2.0;
    return push_edge(scan.refine_crossing(a, b, level));
  };

  // Scan resolution tracks the free-operator edge spacing at this lambda.
  auto step_at = [&](double lambda) {
    const double above = std::max(lambda - V.lower_bound(), 1.0);
    return std::max(1e-3, 2.0 * pi * std::sqrt(above) / L / 16.0);
  };

  // three-point history within the current in-strip run, for gaps too
  // narrow for the scan step to land inside
  double h2x = 0, h2f = 0, h1x = x_prev, h1f = f_prev;
  int hist = 0;

  while (true) {
    const double x_cur = x_prev + step_at(x_prev);
    const double f_cur = delta(x_cur);
    const std::size_t edges_before = bs.edges.size();
    bool fired = false;

    if (process(x_prev, f_prev, x_cur, f_cur, 0)) break;

    if (bs.edges.size() == edges_before && hist >= 2 && region(f_cur) == 0 &&
        region(h1f) == 0 && region(h2f) == 0) {
      // a gap stepped over shows up as a local extremum of Delta grazing or
      // poking through the strip boundary
      const bool is_max = h1f > h2f && h1f > f_cur && h1f > 1.5;
      const bool is_min = h1f < h2f && h1f < f_cur && h1f < -1.5;
      if (is_max || is_min) {
        const double s = is_max ? 1.0 : -1.0;
        const double xe = scan.refine_extremum(h2x, x_cur, s);
        const double fe = delta(xe);
        if (s * fe > 2.0 + closed_tol) {
          // narrow open gap: one crossing on each side of the extremum
          if (process(h2x, h2f, xe, fe, 0)) break;
          if (process(xe, fe, x_cur, f_cur, 0)) break;
          fired = true;
        } else if (s * fe > 2.0 - closed_tol &&
                   (bs.edges.empty() || xe > bs.edges.back() + 10.0 * xtol)) {
          // tangency: closed gap, double edge
          if (push_edge(xe)) break;
          if (push_edge(xe)) break;
          fired = true;
        }
        // an extremum well inside the strip cannot occur for a Hill
        // discriminant; anything else is scan noise
      }
    }

    if (bs.edges.size() != edges_before || fired) {
      hist = 0;  // history straddling an edge would confuse the watch
    } else {
      h2x = h1x;
      h2f = h1f;
      h1x = x_cur;
      h1f = f_cur;
      ++hist;
    }
    x_prev = x_cur;
    f_prev = f_cur;
    if (x_cur > V.lower_bound() + 1e7)
      throw quality_error("band_edges: ran away without finding bands");
  }

  for (std::size_t i = 1; i < bs.edges.size(); ++i)
    if (bs.edges[i] < bs.edges[i - 1])
      throw quality_error("band_edges: edges out of order");
  for (double e : bs.edges)
    if (std::abs(std::abs(delta(e)) - 2.0) > 1e-7)
      throw quality_error("band_edges: edge failed |Delta| = 2 check");
  return bs;
}

// Dirichlet eigenvalues mu_1 < mu_2 < ... over one period cell [x, x + L].
// With a band structure supplied, mu_n is validated to lie in the n-th gap
// closure [E_{2n-1}, E_{2n}].
inline std::vector<double> dirichlet_mu(const Potential& V, double x, int count,
                                        const BandStructure* bands = nullptr,
                                        double root_tol = 1e-10,
                                        double ode_tol = 1e-11) {
  if (!V.period()) throw std::invalid_argument("dirichlet_mu: V must be periodic");
  const double L = *V.period();
  auto mu = dirichlet_eigenvalues(V, RealInterval(x, x + L), count, root_tol,
                                  ode_tol);
  if (bands) {
    // Edges of narrow gaps come from a tangent |Delta| = 2 crossing and carry
    // sqrt-conditioned errors that grow with energy, so this is a
    // wrong-gap-labeling guard, not a precision check: gaps are separated by
    // O(1) bands and the slack stays far below that.
    for (std::size_t n = 1; n <= mu.size(); ++n) {
      if (bands->edges.size() < 2 * n + 1) break;  // gap n not computed
      const double lo = bands->edges[2 * n - 1], hi = bands->edges[2 * n];
      const double tol = 1e-6 * std::max(1.0, std::abs(hi));
      if (mu[n - 1] < lo - tol || mu[n - 1] > hi + tol)
        throw quality_error("dirichlet_mu: mu_" + std::to_string(n) +
                            " outside its gap closure");
    }
  }
  return mu;
}

// Step-function xi for a periodic problem: 0 below E_0, 1/2 on every band,
// and across the n-th open gap: 1 on (E_{2n-1}, mu_n), 0 on (mu_n, E_{2n}).
// Closed gaps (and mu sitting at a closed-gap edge) contribute no feature.
// Coverage ends at the last computed band edge.
inline XiGrid xi_periodic(const BandStructure& bands,
                          const std::vector<double>& mu, double x,
                          double closed_tol = 1e-9) {
  const std::size_t nb = bands.band_count();
  if (nb < 1 || bands.edges.size() != 2 * nb)
    throw std::invalid_argument("xi_periodic: malformed band structure");
  if (mu.size() + 1 < nb)
    throw std::invalid_argument("xi_periodic: need a mu for every interior gap");
  std::vector<double> jumps;
  std::vector<double> plateaus{0.0};
  jumps.push_back(bands.edges[0]);
  plateaus.push_back(0.5);
  for (std::size_t n = 1; n < nb; ++n) {
    const double glo = bands.edges[2 * n - 1], ghi = bands.edges[2 * n];
    if (ghi - glo < closed_tol) continue;  // closed gap: xi stays 1/2
    const double m = mu.at(n - 1);
    const double mc = std::clamp(m, glo, ghi);
    if (mc - glo > closed_tol) {
      jumps.push_back(glo);
      plateaus.push_back(1.0);
      if (ghi - mc > closed_tol) {
        jumps.push_back(mc);
        plateaus.push_back(0.0);
      }
      jumps.push_back(ghi);
      plateaus.push_back(0.5);
    } else {
      // mu at the lower edge: gap is entirely at xi = 0
      jumps.push_back(glo);
      plateaus.push_back(0.0);
      jumps.push_back(ghi);
      plateaus.push_back(0.5);
    }
  }
  return XiGrid::piecewise(x, std::move(jumps), std::move(plateaus),
                           -std::numeric_limits<double>::infinity(),
                           bands.edges.back());
}

}  // namespace xitrace
