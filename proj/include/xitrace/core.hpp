#pragma once

#include <cmath>
#include <complex>
#include <cstdio>
#include <limits>
#include <stdexcept>
#include <string>

namespace xitrace {

using Complex = std::complex<double>;

// Thrown when a problem description (config file, descriptor) is malformed.
class config_error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// Thrown when a computation cannot reach its accuracy contract
// (cutoff sensitivity, non-bracketing, inconsistent spectral data, ...).
class quality_error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

struct RealInterval {
  double lo;
  double hi;

  RealInterval(double lo_, double hi_) : lo(lo_), hi(hi_) {
    if (!(std::isfinite(lo) && std::isfinite(hi)) || !(lo < hi))
      throw std::invalid_argument("RealInterval: need finite lo < hi");
  }
  double length() const { return hi - lo; }
  bool contains(double x) const { return lo <= x && x <= hi; }
};

// Diagonal Green's function value at a point z of the upper half-plane.
// Normalized so that the free Schrodinger value is (-z)^{-1/2}; any positive
// normalization gives the same arg, which is all xi depends on.
struct GreensValue {
  Complex z;
  Complex value;
};

// Fixed 12-significant-digit formatting used for all emitted tables.
inline std::string format_g12(double x) {
  char buf[40];
  std::snprintf(buf, sizeof(buf), "%.12g", x);
  return std::string(buf);
}

inline constexpr double pi = 3.14159265358979323846;

}  // namespace xitrace
