#pragma once

// Spectral shift data xi(x, .) as a function of lambda, either sampled on a
// grid (argument-of-Green computations) or as an exact step function
// (eigenvalue-counting computations).

#include <cstdint>
#include <limits>
#include <utility>
#include <vector>

#include "xitrace/numerics.hpp"

namespace xitrace {

// arg(G)/pi mapped into [0, 1]. G is Herglotz, so arg lies in [0, pi] up to
// rounding; tiny negative arguments clamp to 0 and near -pi wraps to 1.
inline double arg_over_pi(Complex g) {
  double a = std::arg(g);
  if (a < -pi / 2) a += 2.0 * pi;
  return std::clamp(a / pi, 0.0, 1.0);
}

// Boundary values are reached by shrinking the offset and extrapolating the
// last pair linearly; the residual is O(eps_last^2), so stopping at 1e-5 is
// already far below every tolerance in use. (Pushing deeper is expensive for
// continued fractions, which contract by only 1 - O(eps) inside a band.)
inline std::vector<double> default_eps_schedule() {
  return {1e-2, 1e-3, 1e-4, 1e-5};
}

// One boundary-value sample of xi: arg G(lambda + i eps) / pi extrapolated
// linearly in eps over the tail of the schedule. flagged marks points where
// the schedule oscillates instead of settling (lambda at or near a jump).
struct XiPoint {
  double value = 0.0;
  bool flagged = false;
  double uncertainty = 0.0;
  std::vector<double> raw;  // xi at each eps, schedule order
};

namespace detail {

inline void check_eps_schedule(const std::vector<double>& eps) {
  if (eps.size() < 2)
    throw std::invalid_argument("eps schedule: need >= 2 entries");
  for (std::size_t i = 0; i < eps.size(); ++i) {
    if (!(eps[i] > 0))
      throw std::invalid_argument("eps schedule: entries must be > 0");
    if (i > 0 && !(eps[i] < eps[i - 1]))
      throw std::invalid_argument("eps schedule: entries must strictly decrease");
  }
}

inline XiPoint xi_from_eps_samples(const std::vector<double>& eps,
                                   const std::vector<double>& raw) {
  XiPoint p;
  p.raw = raw;
  std::vector<double> extr;
  for (std::size_t i = 1; i < raw.size(); ++i) {
    const double e0 = eps[i - 1], e1 = eps[i];
    extr.push_back(raw[i] + (raw[i] - raw[i - 1]) * e1 / (e0 - e1));
  }
  const double last = extr.empty() ? raw.back() : extr.back();
  p.value = std::clamp(last, 0.0, 1.0);
  if (extr.size() >= 2) {
    const double spread =
        std::abs(extr[extr.size() - 1] - extr[extr.size() - 2]);
    p.uncertainty = spread;
    if (spread > 0.02) p.flagged = true;
  }
  if (raw.size() >= 3) {
    const double d_last = std::abs(raw[raw.size() - 1] - raw[raw.size() - 2]);
    const double d_prev = std::abs(raw[raw.size() - 2] - raw[raw.size() - 3]);
    if (d_last > d_prev + 1e-6 && d_last > 0.02) p.flagged = true;
  }
  return p;
}

}  // namespace detail

class XiGrid {
 public:
  enum class Rep { grid, piecewise };

  static XiGrid from_grid(double base_point, std::vector<double> lambdas,
                          std::vector<double> values,
                          std::vector<std::uint8_t> flags = {}) {
    XiGrid g;
    g.rep_ = Rep::grid;
    g.base_point_ = base_point;
    g.lambdas_ = std::move(lambdas);
    g.values_ = std::move(values);
    g.flags_ = std::move(flags);
    if (g.lambdas_.size() != g.values_.size() || g.lambdas_.size() < 2)
      throw std::invalid_argument("XiGrid: need >= 2 matching samples");
    if (!g.flags_.empty() && g.flags_.size() != g.lambdas_.size())
      throw std::invalid_argument("XiGrid: flags size mismatch");
    for (std::size_t i = 1; i < g.lambdas_.size(); ++i)
      if (!(g.lambdas_[i - 1] < g.lambdas_[i]))
        throw std::invalid_argument("XiGrid: lambda grid must strictly increase");
    for (double& v : g.values_) {
      if (v < -1e-9 || v > 1.0 + 1e-9)
        throw std::invalid_argument("XiGrid: values must lie in [0, 1]");
      v = std::clamp(v, 0.0, 1.0);
    }
    g.cover_lo_ = g.lambdas_.front();
    g.cover_hi_ = g.lambdas_.back();
    return g;
  }

  // plateaus[0] is the value below jumps[0] and must be 0: below the bottom
  // of the spectrum the shift function vanishes.
  static XiGrid piecewise(double base_point, std::vector<double> jumps,
                          std::vector<double> plateaus,
                          double cover_lo = -std::numeric_limits<double>::infinity(),
                          double cover_hi = std::numeric_limits<double>::infinity()) {
    XiGrid g;
    g.rep_ = Rep::piecewise;
    g.base_point_ = base_point;
    g.step_.jumps = std::move(jumps);
    g.step_.values = std::move(plateaus);
    g.step_.validate();
    if (g.step_.jumps.empty())
      throw std::invalid_argument("XiGrid: piecewise data needs >= 1 jump");
    if (g.step_.values.front() != 0.0)
      throw std::invalid_argument("XiGrid: value below the spectrum must be 0");
    for (double& v : g.step_.values) {
      if (v < -1e-9 || v > 1.0 + 1e-9)
        throw std::invalid_argument("XiGrid: values must lie in [0, 1]");
      v = std::clamp(v, 0.0, 1.0);
    }
    g.cover_lo_ = cover_lo;
    g.cover_hi_ = cover_hi;
    return g;
  }

  Rep rep() const { return rep_; }
  double base_point() const { return base_point_; }
  bool covers(double lo, double hi) const {
    return cover_lo_ <= lo && hi <= cover_hi_;
  }
  double cover_lo() const { return cover_lo_; }
  double cover_hi() const { return cover_hi_; }

  // Right-continuous evaluation for step data, linear interpolation for grid
  // data (clamped at the ends).
  double value_at(double lambda) const {
    if (rep_ == Rep::piecewise) return step_.at(lambda);
    if (lambda <= lambdas_.front()) return values_.front();
    if (lambda >= lambdas_.back()) return values_.back();
    const auto it = std::upper_bound(lambdas_.begin(), lambdas_.end(), lambda);
    const std::size_t i = it - lambdas_.begin();
    const double t = (lambda - lambdas_[i - 1]) / (lambdas_[i] - lambdas_[i - 1]);
    return values_[i - 1] + t * (values_[i] - values_[i - 1]);
  }

  // grid representation
  const std::vector<double>& lambdas() const { return lambdas_; }
  const std::vector<double>& values() const { return values_; }
  const std::vector<std::uint8_t>& flags() const { return flags_; }

  // piecewise representation
  const std::vector<double>& jump_points() const { return step_.jumps; }
  const std::vector<double>& plateaus() const { return step_.values; }
  const PiecewiseConstantFn& step() const { return step_; }

  // g(lambda) = a * xi + b as an integrand description for abel_limit.
  PiecewiseConstantFn affine_step(double a, double b) const {
    if (rep_ != Rep::piecewise)
      throw std::invalid_argument("XiGrid: affine_step needs piecewise data");
    PiecewiseConstantFn f = step_;
    for (double& v : f.values) v = a * v + b;
    return f;
  }
  GriddedFn affine_grid(double a, double b) const {
    if (rep_ != Rep::grid)
      throw std::invalid_argument("XiGrid: affine_grid needs grid data");
    GriddedFn f{lambdas_, values_};
    for (double& v : f.values) v = a * v + b;
    return f;
  }

 private:
  XiGrid() = default;
  Rep rep_ = Rep::grid;
  double base_point_ = 0.0;
  double cover_lo_ = 0.0, cover_hi_ = 0.0;
  std::vector<double> lambdas_, values_;
  std::vector<std::uint8_t> flags_;
  PiecewiseConstantFn step_;
};

}  // namespace xitrace
