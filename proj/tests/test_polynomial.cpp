#include <doctest.h>

#include <Eigen/Dense>
#include <algorithm>
#include <complex>

#include "wadc/polynomial.hpp"
#include "wadc/rng.hpp"
#include "test_util.hpp"

using namespace wadc;
using Eigen::VectorXd;

TEST_CASE("roots of a factored quadratic") {
  VectorXd c(3);  // (x - 0.5)(x - 0.9) = x^2 - 1.4x + 0.45
  c << 1.0, -1.4, 0.45;
  const Eigen::VectorXcd r = poly_roots(c);
  REQUIRE(r.size() == 2);
  std::vector<double> re{r[0].real(), r[1].real()};
  std::sort(re.begin(), re.end());
  CHECK(re[0] == doctest::Approx(0.5).epsilon(1e-12));
  CHECK(re[1] == doctest::Approx(0.9).epsilon(1e-12));
  CHECK(std::abs(r[0].imag()) < 1e-12);
}

TEST_CASE("leading zeros are stripped before the companion build") {
  VectorXd c(4);
  c << 0.0, 1.0, 0.0, -4.0;  // x^2 = 4... actually x^2 - 4 has roots +-2
  const Eigen::VectorXcd r = poly_roots(c);
  REQUIRE(r.size() == 2);
  CHECK(std::abs(std::abs(r[0].real()) - 2.0) < 1e-10);
}

TEST_CASE("poly_from_roots round-trips poly_roots") {
  Rng rng(11);
  for (int trial = 0; trial < 20; ++trial) {
    const int order = 2 + rng.uniform_int(5);
    const VectorXd p = testutil::random_stable_poly(rng, order, 0.95);
    const Eigen::VectorXcd roots = poly_roots(p);
    std::vector<Cplx> rts(roots.data(), roots.data() + roots.size());
    const VectorXd back = poly_from_roots(rts);
    REQUIRE(back.size() == p.size());
    for (int i = 0; i < p.size(); ++i) CHECK(back[i] == doctest::Approx(p[i]).epsilon(1e-8));
  }
}

TEST_CASE("poly_from_roots rejects a conjugate-open set") {
  CHECK_THROWS(poly_from_roots({Cplx(0.3, 0.4)}));
}

TEST_CASE("polyval matches Horner by hand") {
  VectorXd c(4);
  c << 2.0, -1.0, 0.5, 3.0;  // 2x^3 - x^2 + 0.5x + 3
  const Cplx v = polyval(c, Cplx(1.5, 0.0));
  CHECK(v.real() == doctest::Approx(2 * 3.375 - 2.25 + 0.75 + 3.0).epsilon(1e-14));
  CHECK(v.imag() == doctest::Approx(0.0));
}

TEST_CASE("derivative of x^3 + 2x") {
  VectorXd c(4);
  c << 1.0, 0.0, 2.0, -7.0;
  const VectorXd d = poly_derivative(c);
  REQUIRE(d.size() == 3);
  CHECK(d[0] == 3.0);
  CHECK(d[1] == 0.0);
  CHECK(d[2] == 2.0);
}

TEST_CASE("long division identity num = quot * den + rem") {
  Rng rng(5);
  for (int trial = 0; trial < 20; ++trial) {
    VectorXd num(5), den(3);
    for (int i = 0; i < 5; ++i) num[i] = rng.uniform(-2.0, 2.0);
    den << 1.0, rng.uniform(-1.0, 1.0), rng.uniform(-1.0, 1.0);
    VectorXd quot, rem;
    poly_divide(num, den, quot, rem);
    CHECK(rem.size() < den.size());
    // evaluate both sides at a few points
    for (double x : {-1.3, 0.2, 0.9, 2.7}) {
      const Cplx lhs = polyval(num, Cplx(x, 0.0));
      const Cplx rhs = polyval(quot, Cplx(x, 0.0)) * polyval(den, Cplx(x, 0.0)) +
                       polyval(rem, Cplx(x, 0.0));
      CHECK(std::abs(lhs - rhs) < 1e-10);
    }
  }
}

TEST_CASE("hand-derived expansion of (2x+5)/((x+1)(x+2))") {
  VectorXd num(2), den(3);
  num << 2.0, 5.0;
  den << 1.0, 3.0, 2.0;
  const PartialFractions pf = partial_fraction_expand(num, den);
  REQUIRE(pf.poles.size() == 2);
  CHECK(pf.direct.size() == 0);
  // poles sorted by real part: -2 first, then -1
  CHECK(std::abs(pf.poles[0] - Cplx(-2.0, 0.0)) < 1e-12);
  CHECK(std::abs(pf.poles[1] - Cplx(-1.0, 0.0)) < 1e-12);
  CHECK(std::abs(pf.residues[0] - Cplx(-1.0, 0.0)) < 1e-12);
  CHECK(std::abs(pf.residues[1] - Cplx(3.0, 0.0)) < 1e-12);
  CHECK_FALSE(pf.near_repeated);
}

TEST_CASE("random stable rationals reconstruct at random points") {
  Rng rng(17);
  int checked = 0;
  for (int trial = 0; trial < 100; ++trial) {
    const int order = 2 + rng.uniform_int(5);  // 2..6
    const VectorXd den = testutil::random_stable_poly(rng, order, 0.95);
    VectorXd num(order);  // strictly proper
    for (int i = 0; i < order; ++i) num[i] = rng.uniform(-2.0, 2.0);
    const PartialFractions pf = partial_fraction_expand(num, den);
    if (pf.near_repeated) continue;  // formula degrades there by design
    for (int pt = 0; pt < 5; ++pt) {
      const Cplx x(rng.uniform(-2.0, 2.0), rng.uniform(0.1, 2.0));
      const Cplx direct = polyval(num, x) / polyval(den, x);
      const Cplx viapf = pf.eval(x);
      CHECK(std::abs(direct - viapf) <= 1e-8 * std::max(1.0, std::abs(direct)));
      ++checked;
    }
  }
  CHECK(checked > 400);  // near-repeated draws should be rare
}

TEST_CASE("improper ratio produces a direct quotient term") {
  VectorXd num(3), den(2);
  num << 1.0, 0.0, -1.0;  // x^2 - 1
  den << 1.0, -0.5;       // x - 0.5
  const PartialFractions pf = partial_fraction_expand(num, den);
  REQUIRE(pf.direct.size() == 2);  // quotient x + 0.5
  CHECK(pf.direct[0] == doctest::Approx(1.0));
  CHECK(pf.direct[1] == doctest::Approx(0.5));
  const Cplx x(1.7, 0.3);
  CHECK(std::abs(pf.eval(x) - polyval(num, x) / polyval(den, x)) < 1e-10);
}

TEST_CASE("near-coincident poles are clustered and flagged") {
  std::vector<Cplx> roots{Cplx(0.5, 0.0), Cplx(0.5 + 1e-9, 0.0), Cplx(-0.3, 0.0)};
  const VectorXd den = poly_from_roots(roots);
  VectorXd num(3);
  num << 0.0, 1.0, 0.0;
  const PartialFractions pf = partial_fraction_expand(num, den);
  CHECK(pf.near_repeated);
  bool found_pair = false;
  for (const auto& cluster : pf.clusters)
    if (cluster.size() == 2) found_pair = true;
  CHECK(found_pair);
}

TEST_CASE("poles come out sorted by real part then imaginary") {
  std::vector<Cplx> roots{Cplx(0.2, 0.5), Cplx(0.2, -0.5), Cplx(-0.6, 0.0)};
  const VectorXd den = poly_from_roots(roots);
  VectorXd num(3);
  num << 1.0, 0.0, 0.0;
  const PartialFractions pf = partial_fraction_expand(num, den);
  REQUIRE(pf.poles.size() == 3);
  CHECK(pf.poles[0].real() == doctest::Approx(-0.6));
  CHECK(pf.poles[1].imag() < pf.poles[2].imag());
}
