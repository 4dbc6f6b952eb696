#pragma once

// Trace-formula reconstructions of the potential from spectral shift data:
//   V(x) = e0 + lim_{a->0} integral_{e0}^{inf} exp(-a(l - e0)) (1 - 2 xi) dl
// (Abel-regularized; the plain integral exists only when |xi - 1/2| is
// integrable), and the periodic band/mu form
//   V(x) = E_0 + sum_n (E_{2n} + E_{2n-1} - 2 mu_n(x)).

#include "xitrace/periodic.hpp"
#include "xitrace/xi_grid.hpp"

namespace xitrace {

struct ReconstructionResult {
  double value = 0.0;      // reconstructed V at the base point of xi
  double e0 = 0.0;
  AbelResult abel;         // raw I(alpha) data and extrapolants
  bool summable = false;   // cumulative |xi - 1/2| plateaued before cutoff
  double summability_mass = 0.0;  // integral of |xi - 1/2| up to cutoff
};

// Cumulative integral of |xi - 1/2| from e0, sampled at the natural points
// of the representation. Plateauing indicates the plain (unregularized)
// integral converges.
inline std::vector<std::pair<double, double>> summability_profile(
    const XiGrid& xi, double e0, double lambda_max) {
  if (!(lambda_max > e0))
    throw std::invalid_argument("summability_profile: need lambda_max > e0");
  std::vector<std::pair<double, double>> out;
  out.push_back({e0, 0.0});
  double acc = 0.0;
  if (xi.rep() == XiGrid::Rep::piecewise) {
    const auto& f = xi.step();
    double left = e0;
    for (std::size_t k = 0; k < f.jumps.size(); ++k) {
      const double j = std::clamp(f.jumps[k], e0, lambda_max);
      if (j > left) {
        acc += std::abs(f.values[k] - 0.5) * (j - left);
        out.push_back({j, acc});
        left = j;
      }
    }
    if (lambda_max > left) {
      acc += std::abs(f.values.back() - 0.5) * (lambda_max - left);
      out.push_back({lambda_max, acc});
    }
  } else {
    const auto& ls = xi.lambdas();
    const auto& vs = xi.values();
    for (std::size_t i = 1; i < ls.size(); ++i) {
      const double a = std::clamp(ls[i - 1], e0, lambda_max);
      const double b = std::clamp(ls[i], e0, lambda_max);
      if (b > a) {
        acc += 0.5 * (std::abs(vs[i - 1] - 0.5) + std::abs(vs[i] - 0.5)) * (b - a);
        out.push_back({b, acc});
      }
    }
  }
  return out;
}

namespace detail {

// Heuristic: the profile has plateaued if the last quarter of the range adds
// less than 2% of the total mass (and the total is non-trivial).
inline bool profile_plateaued(const std::vector<std::pair<double, double>>& prof) {
  if (prof.size() < 3) return true;
  const double lo = prof.front().first, hi = prof.back().first;
  const double knee = hi - 0.25 * (hi - lo);
  double at_knee = 0.0;
  for (const auto& [l, m] : prof)
    if (l <= knee) at_knee = m;
  const double total = prof.back().second;
  return total - at_knee <= 0.02 * total + 1e-12;
}

}  // namespace detail

// Abel-regularized reconstruction at the base point of xi. Requires e0 at or
// below the bottom of the spectrum and xi coverage up to the schedule cutoff.
inline ReconstructionResult reconstruct_V(const XiGrid& xi, double e0,
                                          const AbelSchedule& schedule) {
  schedule.validate();
  if (!xi.covers(e0, schedule.cutoff))
    throw std::invalid_argument(
        "reconstruct_V: xi does not cover [e0, cutoff]; compute more data or "
        "shorten the schedule");
  ReconstructionResult r;
  r.e0 = e0;
  if (xi.rep() == XiGrid::Rep::piecewise)
    r.abel = abel_limit(xi.affine_step(-2.0, 1.0), e0, schedule);
  else
    r.abel = abel_limit(xi.affine_grid(-2.0, 1.0), e0, schedule);
  r.value = e0 + r.abel.limit;
  const auto prof = summability_profile(xi, e0, schedule.cutoff);
  r.summability_mass = prof.back().second;
  r.summable = detail::profile_plateaued(prof);
  return r;
}

struct PeriodicReconstruction {
  double value = 0.0;                // E_0 + all computed terms
  double e0 = 0.0;
  std::vector<double> terms;         // E_{2n} + E_{2n-1} - 2 mu_n
  std::vector<double> partial_sums;  // E_0 + terms 1..n
  double tail_bound = 0.0;           // last included gap length + margin
};

// Band/mu form of the reconstruction. Each term is bounded by its gap
// length, so the series converges at least as fast as the gap lengths; the
// reported tail bound is the last included gap length plus a small margin
// for the edge/mu tolerances.
inline PeriodicReconstruction reconstruct_V_periodic(
    const BandStructure& bands, const std::vector<double>& mu,
    double edge_tol = 1e-8) {
  const std::size_t nb = bands.band_count();
  if (nb < 2)
    throw std::invalid_argument("reconstruct_V_periodic: need >= 2 bands");
  const std::size_t terms = std::min(mu.size(), nb - 1);
  if (terms == 0)
    throw std::invalid_argument("reconstruct_V_periodic: no usable gap terms");
  PeriodicReconstruction r;
  r.e0 = bands.edges[0];
  double acc = r.e0;
  for (std::size_t n = 1; n <= terms; ++n) {
    const double glo = bands.edges[2 * n - 1], ghi = bands.edges[2 * n];
    const double m = mu[n - 1];
    // slack scales with energy: narrow-gap edges are sqrt-conditioned, and
    // this only guards against mu landing in the wrong gap
    const double slack = 1e-6 * std::max(1.0, std::abs(ghi));
    if (m < glo - slack || m > ghi + slack)
      throw quality_error("reconstruct_V_periodic: mu_" + std::to_string(n) +
                          " violates gap interlacing");
    const double t = glo + ghi - 2.0 * m;
    r.terms.push_back(t);
    acc += t;
    r.partial_sums.push_back(acc);
  }
  r.value = acc;
  r.tail_bound = bands.gap_lengths.at(terms - 1) +
                 edge_tol * static_cast<double>(terms + 2);
  return r;
}

}  // namespace xitrace
