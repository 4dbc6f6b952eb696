// Discrete half of the library: finite sections, counting form of the shift
// function, continued-fraction Green's functions, and the diagonal trace
// identity.

#include <catch2/catch_amalgamated.hpp>
#include <random>

#include "xitrace/jacobi.hpp"

using namespace xitrace;
using Catch::Approx;

namespace {

// Free whole-line diagonal Green's function, branch of sqrt(z^2-4) chosen
// ~ z at infinity (cut on the spectrum [-2, 2]).
Complex free_green(Complex z) {
  return -1.0 / (std::sqrt(z - 2.0) * std::sqrt(z + 2.0));
}

// G(k, k; z) of a finite section by a complex Thomas solve of (J - z) u = e_k.
// Completely independent of the continued-fraction code path.
Complex thomas_green(const std::vector<double>& diag, std::size_t k, Complex z) {
  const std::size_t n = diag.size();
  std::vector<Complex> cp(n), dp(n);
  auto b = [&](std::size_t i) { return Complex(diag[i]) - z; };
  cp[0] = 1.0 / b(0);
  dp[0] = (k == 0 ? 1.0 : 0.0) / b(0);
  for (std::size_t i = 1; i < n; ++i) {
    const Complex denom = b(i) - cp[i - 1];
    cp[i] = 1.0 / denom;
    dp[i] = ((i == k ? 1.0 : 0.0) - dp[i - 1]) / denom;
  }
  Complex x = dp[n - 1];
  for (std::size_t i = n - 1; i-- > k;) x = dp[i] - cp[i] * x;
  return x;
}

}  // namespace

TEST_CASE("operator factories") {
  const auto c = JacobiOperator::constant(0.7);
  CHECK(c.v(-5) == 0.7);
  CHECK(c.v(12) == 0.7);
  CHECK(c.bound() == Approx(0.7));

  const auto p = JacobiOperator::periodic({1.0, -2.0, 0.5});
  CHECK(p.v(0) == 1.0);
  CHECK(p.v(4) == -2.0);
  CHECK(p.v(-1) == 0.5);   // wraps below zero
  CHECK(p.v(-3) == 1.0);
  CHECK(p.bound() == Approx(2.0));
  CHECK_THROWS_AS(JacobiOperator::periodic({}), std::invalid_argument);

  const auto am = JacobiOperator::almost_mathieu(1.5, 1, 3, 0.2);
  CHECK(am.v(0) == Approx(1.5 * std::cos(0.2)));
  CHECK(am.v(3) == Approx(1.5 * std::cos(pi + 0.2)));
  CHECK_THROWS_AS(JacobiOperator::almost_mathieu(1.0, 1, 0, 0.0),
                  std::invalid_argument);

  const auto r1 = JacobiOperator::random_uniform(1.0, 42);
  const auto r2 = JacobiOperator::random_uniform(1.0, 42);
  const auto r3 = JacobiOperator::random_uniform(1.0, 43);
  bool all_equal = true, any_differ = false, bounded = true;
  for (std::int64_t n = -50; n <= 50; ++n) {
    all_equal = all_equal && (r1.v(n) == r2.v(n));
    any_differ = any_differ || (r1.v(n) != r3.v(n));
    bounded = bounded && std::abs(r1.v(n)) <= 1.0;
  }
  CHECK(all_equal);
  CHECK(any_differ);
  CHECK(bounded);
}

TEST_CASE("truncate and decouple") {
  const auto h = JacobiOperator::finite({1.0, 2.0, 3.0, 4.0}, 0);
  const auto t = truncate(h, 0, 3);
  CHECK(t.size() == 4);
  CHECK(t.diagonal() == std::vector<double>{1.0, 2.0, 3.0, 4.0});

  const auto [l, r] = dirichlet_decouple(t, {1});
  CHECK(l.diagonal() == std::vector<double>{1.0});
  CHECK(r.diagonal() == std::vector<double>{3.0, 4.0});
  CHECK(r.first() == 2);

  const auto [l2, r2] = dirichlet_decouple(t, {0});
  CHECK(l2.size() == 0);
  CHECK(r2.size() == 3);
  CHECK_THROWS_AS(dirichlet_decouple(t, {7}), std::invalid_argument);
}

TEST_CASE("eigenvalues of the free section: 2 cos(k pi / (n+1))") {
  for (std::size_t n = 1; n <= 8; ++n) {
    const auto t = TruncatedJacobi(0, std::vector<double>(n, 0.0));
    const auto e = eigenvalues_tridiagonal(t);
    REQUIRE(e.size() == n);
    for (std::size_t k = 0; k < n; ++k) {
      const double expect = 2.0 * std::cos(pi * static_cast<double>(n - k) /
                                           static_cast<double>(n + 1));
      CHECK(e[k] == Approx(expect).margin(1e-12));
    }
  }
  // constant diagonal just shifts the spectrum
  const auto t = TruncatedJacobi(0, std::vector<double>(5, 1.3));
  const auto e = eigenvalues_tridiagonal(t);
  CHECK(e[2] == Approx(1.3).margin(1e-12));
}

TEST_CASE("counting xi: hand-worked 3x3 sections") {
  // diag {0,0,0}, middle site removed: eigenvalues -sqrt2, 0, sqrt2 vs {0},{0}
  const auto free3 = TruncatedJacobi(0, {0.0, 0.0, 0.0});
  CHECK(xi_counting(free3, {1}, -1.0) == 1);
  CHECK(xi_counting(free3, {1}, 0.0) == 0);  // right-continuous at the tie
  CHECK(xi_counting(free3, {1}, 1.0) == 0);
  CHECK(xi_counting(free3, {1}, 2.0) == 1);
  CHECK(xi_counting(free3, {1}, -5.0) == 0);

  // diag {1,0,-1}: full eigenvalues are -sqrt3, 0, sqrt3 (char poly 3L - L^3),
  // decoupled singletons at 1 and -1, so xi alternates across five jumps
  const auto t = TruncatedJacobi(0, {1.0, 0.0, -1.0});
  const auto xi = xi_counting_grid(t, {1});
  const double s3 = std::sqrt(3.0);
  REQUIRE(xi.jump_points().size() == 5);
  CHECK(xi.jump_points()[0] == Approx(-s3).margin(1e-12));
  CHECK(xi.jump_points()[1] == Approx(-1.0).margin(1e-12));
  CHECK(xi.jump_points()[2] == Approx(0.0).margin(1e-12));
  CHECK(xi.jump_points()[3] == Approx(1.0).margin(1e-12));
  CHECK(xi.jump_points()[4] == Approx(s3).margin(1e-12));
  CHECK(xi.plateaus() == std::vector<double>{0, 1, 0, 1, 0, 1});
  CHECK(xi.value_at(-1.5) == 1.0);
  CHECK(xi.value_at(-0.5) == 0.0);
  CHECK(xi.value_at(0.5) == 1.0);
  CHECK(xi.value_at(9.0) == 1.0);

  // the trace identity is exact here: v(site) = 0
  const auto [lo, hi] = spectral_enclosure(t, {1});
  CHECK(lo == Approx(-s3).margin(1e-12));
  CHECK(hi == Approx(s3).margin(1e-12));
  CHECK(trace_formula_jacobi(xi, lo, hi) == Approx(0.0).margin(1e-12));
}

TEST_CASE("counting xi is {0,1}-valued and the trace identity is exact") {
  std::mt19937 rng(90210);
  std::uniform_real_distribution<double> vu(-2.0, 2.0);
  std::uniform_int_distribution<int> nu(2, 40);
  for (int trial = 0; trial < 200; ++trial) {
    const int n = nu(rng);
    std::vector<double> diag(n);
    for (double& d : diag) d = vu(rng);
    const TruncatedJacobi t(-(n / 2), std::move(diag));
    std::uniform_int_distribution<std::int64_t> su(t.first(), t.last());
    const DirichletSite site{su(rng)};

    const auto xi = xi_counting_grid(t, site);  // throws if not {0,1}
    for (double p : xi.plateaus()) CHECK((p == 0.0 || p == 1.0));
    CHECK(xi.plateaus().back() == 1.0);

    const auto [lo, hi] = spectral_enclosure(t, site);
    const double v_rec = trace_formula_jacobi(xi, lo, hi);
    CHECK(std::abs(v_rec - t.diagonal()[site.n - t.first()]) < 1e-10);
  }
}

TEST_CASE("free Green's function against the closed form") {
  const auto h = JacobiOperator::constant(0.0);
  const Complex z1(0.0, 2.0);
  const auto g1 = green_diagonal_converged(h, 0, z1);
  CHECK(std::abs(g1.value - Complex(0.0, 1.0 / (2.0 * std::sqrt(2.0)))) < 1e-10);
  CHECK(std::abs(g1.value - free_green(z1)) < 1e-10);

  for (const Complex z : {Complex(3.0, 0.5), Complex(-2.7, 1e-5),
                          Complex(0.3, 1e-3), Complex(1.9, 0.01)}) {
    const auto g = green_diagonal_converged(h, 0, z);
    CHECK(std::abs(g.value - free_green(z)) < 1e-8);
  }

  // a constant diagonal translates the energy variable
  const auto hc = JacobiOperator::constant(0.9);
  const Complex z(0.4, 0.2);
  CHECK(std::abs(green_diagonal_converged(hc, 3, z).value -
                 free_green(z - 0.9)) < 1e-10);
}

TEST_CASE("literal-depth Green matches a hand-rolled two-level fraction") {
  const auto h = JacobiOperator::constant(0.3);
  const Complex z(1.0, 2.0);
  const Complex m1 = 1.0 / (0.3 - z);
  const Complex expect = 1.0 / (0.3 - z - 2.0 * m1);
  CHECK(std::abs(green_diagonal(h, 5, z, 1).value - expect) < 1e-15);
  CHECK_THROWS_AS(green_diagonal(h, 0, z, 0), std::invalid_argument);
  CHECK_THROWS_AS(green_diagonal(h, 0, Complex(1.0, -0.1), 4),
                  std::invalid_argument);
  CHECK(default_green_depth(Complex(0.0, 1e-3)) == 20016);
}

TEST_CASE("Green's function against an independent tridiagonal solve") {
  const auto h = JacobiOperator::random_uniform(1.0, 1234);
  const std::int64_t w = 2000;
  std::vector<double> diag;
  for (std::int64_t n = -w; n <= w; ++n) diag.push_back(h.v(n));

  for (const Complex z : {Complex(0.7, 0.05), Complex(-1.2, 0.02),
                          Complex(2.4, 0.1)}) {
    const Complex oracle = thomas_green(diag, static_cast<std::size_t>(w), z);
    const auto mine = green_diagonal_converged(h, 0, z);
    CHECK(std::abs(mine.value - oracle) < 1e-8);
    const auto literal = green_diagonal(h, 0, z, default_green_depth(z));
    CHECK(std::abs(literal.value - oracle) < 1e-3);
  }
}

TEST_CASE("Green's function is Herglotz") {
  std::mt19937 rng(555);
  std::uniform_real_distribution<double> re(-3.5, 3.5);
  std::uniform_real_distribution<double> im(0.01, 2.0);
  const auto h = JacobiOperator::random_uniform(1.2, 99);
  for (int i = 0; i < 50; ++i) {
    const Complex z(re(rng), im(rng));
    CHECK(green_diagonal_converged(h, 0, z).value.imag() > 0.0);
  }
}

TEST_CASE("xi from the boundary argument: free values") {
  const auto h = JacobiOperator::constant(0.0);
  CHECK(std::abs(xi_arg(h, 0, 0.0).value - 0.5) < 1e-3);
  CHECK(std::abs(xi_arg(h, 0, 1.5).value - 0.5) < 1e-3);
  CHECK(std::abs(xi_arg(h, 0, -1.5).value - 0.5) < 1e-3);
  CHECK(std::abs(xi_arg(h, 0, -3.0).value - 0.0) < 1e-3);
  CHECK(std::abs(xi_arg(h, 0, 3.0).value - 1.0) < 1e-3);
}

TEST_CASE("xi is covariant under relabeling the sites") {
  const auto h = JacobiOperator::random_uniform(1.0, 2024);
  const auto shifted = JacobiOperator(
      [&h](std::int64_t n) { return h.v(n + 5); }, h.bound(), "shifted");
  const auto a = xi_arg(h, 5, 0.37);
  const auto b = xi_arg(shifted, 0, 0.37);
  CHECK(a.value == Approx(b.value).margin(1e-12));
}

TEST_CASE("argument xi agrees with windowed counting on a random operator") {
  const auto h = JacobiOperator::random_uniform(1.0, 7);
  const auto t = truncate(h, -200, 200);
  const auto xi_c = xi_counting_grid(t, {0});

  // compare at plateau midpoints near the band center, where the windowed
  // step function has stabilized
  const auto& jp = xi_c.jump_points();
  int tested = 0;
  for (std::size_t i = 1; i < jp.size() && tested < 4; ++i) {
    const double mid = 0.5 * (jp[i - 1] + jp[i]);
    if (std::abs(mid) > 0.4 || jp[i] - jp[i - 1] < 5e-3) continue;
    const auto p = xi_arg(h, 0, mid);
    CHECK(std::abs(p.value - xi_c.value_at(mid)) < 0.05);
    ++tested;
  }
  CHECK(tested > 0);
}

TEST_CASE("trace identity on grid data") {
  // linear ramp xi from 0 to 1 over [0,1]: integral of (1/2 - xi) is 0
  const auto xi = XiGrid::from_grid(0.0, {0.0, 1.0}, {0.0, 1.0});
  CHECK(trace_formula_jacobi(xi, 0.0, 1.0) == Approx(0.5).margin(1e-14));
  CHECK_THROWS_AS(trace_formula_jacobi(xi, 1.0, 0.0), std::invalid_argument);
  CHECK_THROWS_AS(trace_formula_jacobi(xi, -1.0, 1.0), std::invalid_argument);
}
