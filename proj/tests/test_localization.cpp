#include <doctest.h>

#include <cmath>

#include "oracles.hpp"
#include "uhe/errors.hpp"
#include "uhe/localization.hpp"
#include "uhe/rng.hpp"

using namespace uhe;

TEST_CASE("regions normalize on construction") {
  // Unordered, touching, and overlapping intervals merge into a sorted list.
  Region1D r{{{3.0, 4.0}, {0.0, 1.0}, {1.0, 2.0}, {3.5, 5.0}}};
  REQUIRE(r.intervals.size() == 2);
  CHECK(r.intervals[0] == std::pair<double, double>{0.0, 2.0});
  CHECK(r.intervals[1] == std::pair<double, double>{3.0, 5.0});
  CHECK(r.total_length() == doctest::Approx(4.0));

  CHECK_THROWS_AS((Region1D{{{1.0, 1.0}}}), ValidationError);  // empty interval
  CHECK_THROWS_AS((Region1D{{{2.0, 1.0}}}), ValidationError);  // reversed
  CHECK_THROWS_AS((Region1D{{}}), ValidationError);            // no intervals
  const double inf = std::numeric_limits<double>::infinity();
  CHECK_THROWS_AS((Region1D{{{0.0, inf}}}), ValidationError);
}

TEST_CASE("region membership uses closed intervals") {
  Region1D r{{{0.0, 1.0}, {2.0, 3.0}}};
  CHECK(r.contains(0.0));
  CHECK(r.contains(1.0));
  CHECK(r.contains(2.5));
  CHECK_FALSE(r.contains(1.5));
  CHECK_FALSE(r.contains(-0.1));

  Grid1D g(8, -4.0, 4.0);
  CHECK(Region1D{{{-4.0, 3.0}}}.within(g));
  CHECK_FALSE(Region1D{{{-5.0, 0.0}}}.within(g));
}

TEST_CASE("indicator picks cells by their sample points") {
  Grid1D g(8, 0.0, 8.0);  // cells at 0, 1, ..., 7
  Eigen::VectorXd ind = region_indicator(g, Region1D{{{1.5, 4.0}}});
  Eigen::VectorXd expected(8);
  expected << 0, 0, 1, 1, 1, 0, 0, 0;  // cells 2, 3, 4 lie in [1.5, 4]
  CHECK((ind - expected).cwiseAbs().maxCoeff() == 0.0);

  Observable p = region_projector(g, Region1D{{{1.5, 4.0}}});
  CHECK(p.matrix.diagonal().real().sum() == doctest::Approx(3.0));
  CHECK(oracle::max_abs_diff(p.matrix, ind.cast<Complex>().asDiagonal().toDenseMatrix()) == 0.0);

  CHECK_THROWS_AS(region_projector(g, Region1D{{{-1.0, 2.0}}}), ValidationError);
}

TEST_CASE("localization degrees") {
  Grid1D g(8, 0.0, 8.0);
  Vector amps = Vector::Zero(8);
  amps[2] = Complex(std::sqrt(0.5));
  amps[3] = Complex(0.0, std::sqrt(0.3));
  amps[6] = Complex(std::sqrt(0.2));
  StateVector psi{amps};
  Region1D a{{{1.5, 4.0}}};

  CHECK(degree_probability(psi, g, a) == doctest::Approx(0.8).epsilon(1e-14));
  // Literal amplitude sum weighted by the cell size.
  Complex amp = degree_amplitude(psi, g, a);
  CHECK(std::abs(amp - (amps[2] + amps[3]) * g.dx()) < 1e-14);

  StateVector unnorm{(2.0 * amps).eval()};
  CHECK_THROWS_AS(degree_probability(unnorm, g, a), ValidationError);

  // is_localized renormalizes and honors the threshold inclusively.
  CHECK(is_localized(unnorm, g, a, 0.8 - 1e-9));
  CHECK(is_localized(psi, g, a, 0.8));
  CHECK_FALSE(is_localized(psi, g, a, 0.80001));
  CHECK_THROWS_AS(is_localized(psi, g, a, 0.0), ValidationError);
  CHECK_THROWS_AS(is_localized(psi, g, a, 1.5), ValidationError);
}
