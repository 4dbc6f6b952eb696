// Jost solutions, reflection/transmission data, and the scattering form of
// xi on the a.c. spectrum.

#include <catch2/catch_amalgamated.hpp>

#include "xitrace/scattering.hpp"

using namespace xitrace;
using Catch::Approx;

namespace {

// Rectangular well/barrier R and T by plane-wave matching (right incidence;
// equal to left incidence for a symmetric well centered at the origin).
struct WellRT {
  Complex R, T;
};

WellRT square_well_rt(double depth, double width, double lambda) {
  const double k = std::sqrt(lambda);
  // complex q continues the formula through the tunneling regime
  const Complex q = std::sqrt(Complex(lambda - depth, 0.0));
  const Complex s = std::sin(q * width), c = std::cos(q * width);
  const Complex i(0.0, 1.0);
  const Complex denom = c - i * (k * k + q * q) / (2.0 * k * q) * s;
  const Complex phase = std::exp(-i * k * width);
  WellRT out;
  out.T = phase / denom;
  out.R = phase * i * (q * q - k * k) / (2.0 * k * q) * s / denom;
  return out;
}

Potential sech_well() {
  return Potential::custom(
      "sech2", [](double x) { return -2.0 / std::pow(std::cosh(x), 2); }, -2.0,
      Tail::constant_beyond, /*support_radius=*/11.0);
}

}  // namespace

TEST_CASE("free Jost solutions are plane waves") {
  const auto V = Potential::zero();
  const double lambda = 2.0, k = std::sqrt(lambda);
  const auto fp = jost_solution(V, lambda, Side::right, 0.4);
  CHECK(std::abs(fp.value - std::exp(Complex(0.0, k * 0.4))) < 1e-10);
  CHECK(std::abs(fp.derivative - Complex(0.0, k) * fp.value) < 1e-10);
  const auto fm = jost_solution(V, lambda, Side::left, -0.3);
  CHECK(std::abs(fm.value - std::exp(Complex(0.0, k * 0.3))) < 1e-10);

  const auto d = reflection_coefficient(V, lambda);
  CHECK(std::abs(d.reflection) < 1e-10);
  CHECK(std::abs(d.transmission - 1.0) < 1e-10);
  CHECK(d.unitarity_defect < 1e-10);
}

TEST_CASE("square well R and T against the matching closed form") {
  const double depth = -1.0, width = 2.0;
  const auto V = Potential::square_well(depth, width);
  for (double lambda : {0.3, 1.0, 2.7, 6.0}) {
    const auto mine = reflection_coefficient(V, lambda);
    const auto oracle = square_well_rt(depth, width, lambda);
    CHECK(std::abs(mine.reflection - oracle.R) < 1e-9);
    CHECK(std::abs(mine.transmission - oracle.T) < 1e-9);
    CHECK(mine.unitarity_defect < 1e-10);
  }
  // a barrier too
  const auto B = Potential::square_well(1.5, 1.0);
  for (double lambda : {0.4, 2.0}) {
    const auto mine = reflection_coefficient(B, lambda);
    const auto oracle = square_well_rt(1.5, 1.0, lambda);
    CHECK(std::abs(mine.reflection - oracle.R) < 1e-9);
    CHECK(std::abs(mine.transmission - oracle.T) < 1e-9);
  }
}

TEST_CASE("the sech-squared well is reflectionless with known phase") {
  const auto V = sech_well();
  for (double lambda : {0.5, 1.0, 3.3}) {
    const double k = std::sqrt(lambda);
    const auto d = reflection_coefficient(V, lambda);
    CHECK(std::abs(d.reflection) < 1e-6);
    // transmission (k + i)/(k - i): unit modulus, zero of 1/T at the bound
    // state k = i
    const Complex expect = Complex(k, 1.0) / Complex(k, -1.0);
    CHECK(std::abs(d.transmission - expect) < 1e-6);
    CHECK(d.unitarity_defect < 1e-9);
  }
}

TEST_CASE("xi stays within |R|/2 of one half") {
  const auto V = Potential::square_well(-1.0, 2.0);
  for (double lambda : {0.2, 0.9, 1.7, 4.2}) {
    for (double x : {-1.3, 0.0, 0.6, 2.5}) {
      const auto p = xi_scattering(V, x, lambda);
      CHECK(p.value >= 0.0);
      CHECK(p.value <= 1.0);
      CHECK(std::abs(p.value - 0.5) <= p.half_r_bound + 1e-12);
      CHECK(p.bracket_real > 0.0);
    }
  }
  // reflectionless potential: xi is 1/2 on the nose
  const auto S = sech_well();
  CHECK(std::abs(xi_scattering(S, 0.7, 2.0).value - 0.5) < 1e-7);
  CHECK(std::abs(xi_scattering(S, -1.2, 0.8).value - 0.5) < 1e-7);
}

TEST_CASE("scattering xi matches the Green's-function boundary argument") {
  const auto V = Potential::square_well(-1.0, 2.0);
  for (double lambda : {0.6, 1.4, 3.1}) {
    for (double x : {0.0, 0.8, -1.6}) {
      const double a = xi_scattering(V, x, lambda).value;
      const double b = xi_schrodinger(V, x, lambda).value;
      CHECK(std::abs(a - b) < 5e-3);
    }
  }
}

TEST_CASE("admission checks") {
  CHECK_THROWS_AS(jost_solution(Potential::mathieu(1.0), 1.0, Side::right, 0.0),
                  std::invalid_argument);
  CHECK_THROWS_AS(
      jost_solution(Potential::harmonic(1.0, 0.0), 1.0, Side::right, 0.0),
      std::invalid_argument);
  CHECK_THROWS_AS(jost_solution(Potential::zero(), -1.0, Side::right, 0.0),
                  std::invalid_argument);

  // a Lorentzian tail carries too much mass past any modest cutoff
  const auto slow = Potential::custom(
      "lorentz", [](double x) { return 0.1 / (1.0 + x * x); }, 0.0,
      Tail::constant_beyond, 2.0);
  CHECK_THROWS_AS(jost_solution(slow, 1.0, Side::right, 0.0), quality_error);
}
