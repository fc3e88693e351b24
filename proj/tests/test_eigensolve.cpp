#include <doctest.h>

#include <cmath>
#include <complex>

#include "oracles.hpp"
#include "uhe/eigensolve.hpp"
#include "uhe/errors.hpp"
#include "uhe/rng.hpp"

using namespace uhe;

namespace {

// Hermitian PSD matrix with a planted spectrum (descending values).
Matrix planted(Rng& rng, const std::vector<double>& values) {
  const Eigen::Index n = static_cast<Eigen::Index>(values.size());
  Matrix q = oracle::random_unitary(rng, n);
  Matrix d = Matrix::Zero(n, n);
  for (Eigen::Index i = 0; i < n; ++i) d(i, i) = values[i];
  Matrix m = q * d * q.adjoint();
  return 0.5 * (m + m.adjoint()).eval();
}

}  // namespace

TEST_CASE("dense solver recovers a planted top eigenpair") {
  Rng rng(61);
  std::vector<double> values{2.5, 1.9, 1.2, 0.7, 0.3, 0.1};
  Matrix m = planted(rng, values);

  TopEigenResult r = top_eigen_dense(m);
  CHECK(r.value == doctest::Approx(2.5).epsilon(1e-12));
  CHECK(std::abs(r.vector.norm() - 1.0) < 1e-12);
  // Eigenvector residual.
  CHECK((m * r.vector - r.value * r.vector).norm() < 1e-10);
  // Spectrum head is the leading eigenvalues in descending order.
  REQUIRE(r.spectrum_head.size() == 5);
  for (std::size_t i = 0; i < r.spectrum_head.size(); ++i)
    CHECK(r.spectrum_head[i] == doctest::Approx(values[i]).epsilon(1e-10));
}

TEST_CASE("dense solver fixes the phase deterministically") {
  Rng rng(62);
  Matrix m = planted(rng, {3.0, 1.0, 0.5});
  TopEigenResult r1 = top_eigen_dense(m);
  TopEigenResult r2 = top_eigen_dense(m);
  CHECK(r1.vector == r2.vector);  // bitwise

  // Leading significant entry is real positive.
  for (Eigen::Index i = 0; i < r1.vector.size(); ++i) {
    if (std::abs(r1.vector[i]) > 1e-8) {
      CHECK(std::abs(std::imag(r1.vector[i])) < 1e-14);
      CHECK(std::real(r1.vector[i]) > 0.0);
      break;
    }
  }
}

TEST_CASE("degenerate top eigenspaces give a stable representative") {
  // P projects onto span{e1, e3} (a twofold-degenerate top eigenvalue).  The
  // tie-break picks the normalized projection of the first basis vector that
  // projects nonzero, here e1 itself.
  Matrix p = Matrix::Zero(4, 4);
  p(1, 1) = 1.0;
  p(3, 3) = 1.0;
  TopEigenResult r = top_eigen_dense(p);
  CHECK(r.value == doctest::Approx(1.0).epsilon(1e-12));
  CHECK(std::abs(r.vector[1] - Complex(1.0, 0.0)) < 1e-12);
  CHECK(std::abs(r.vector[0]) < 1e-12);
  CHECK(std::abs(r.vector[2]) < 1e-12);
  CHECK(std::abs(r.vector[3]) < 1e-12);

  // Conjugating by a unitary that mixes the degenerate pair must not change
  // the reported eigenvalue, and the representative stays in the eigenspace.
  Rng rng(63);
  Matrix q = oracle::random_unitary(rng, 4);
  Matrix m = q * p * q.adjoint();
  m = 0.5 * (m + m.adjoint()).eval();
  TopEigenResult rm = top_eigen_dense(m);
  CHECK(rm.value == doctest::Approx(1.0).epsilon(1e-12));
  CHECK((m * rm.vector - rm.vector).norm() < 1e-10);
  TopEigenResult rm2 = top_eigen_dense(m);
  CHECK(rm.vector == rm2.vector);  // rerun is bitwise identical
}

TEST_CASE("fix_phase rotates the leading significant entry onto the real axis") {
  Vector v(3);
  v << Complex(0.0, 1e-12), Complex(0.0, -0.6), Complex(0.8, 0.0);
  fix_phase(v);
  // First entry is below the significance floor and ignored.
  CHECK(std::real(v[1]) == doctest::Approx(0.6).epsilon(1e-12));
  CHECK(std::abs(std::imag(v[1])) < 1e-14);
  CHECK(std::abs(v[2] - Complex(0.0, 0.8)) < 1e-12);  // rotated along

  Vector zero = Vector::Zero(2);
  fix_phase(zero);  // no significant entry: a quiet no-op
  CHECK(zero.norm() == 0.0);
}

TEST_CASE("lanczos agrees with the dense solver") {
  Rng rng(64);
  for (Eigen::Index dim : {32, 100}) {
    Matrix g = oracle::random_hermitian(rng, dim);
    // Make it PSD with a clear top: shift by the dimension.
    Matrix m = (g + static_cast<double>(dim) * Matrix::Identity(dim, dim)).eval();
    m = 0.5 * (m + m.adjoint()).eval();

    TopEigenResult dense = top_eigen_dense(m);
    TopEigenResult fast = top_eigen_lanczos(
        [&](const Vector& x) { return Vector(m * x); }, dim);
    CHECK(fast.value == doctest::Approx(dense.value).epsilon(1e-8));
    // Same ray: overlap magnitude 1.
    CHECK(std::abs(fast.vector.dot(dense.vector)) == doctest::Approx(1.0).epsilon(1e-6));
    CHECK((m * fast.vector - fast.value * fast.vector).norm() < 1e-7);
    CHECK(fast.iterations > 0);
  }
}

TEST_CASE("lanczos handles an invariant starting subspace") {
  // The all-ones start vector is an exact eigenvector of the all-ones matrix;
  // the Krylov space is one-dimensional and must still converge.
  const Eigen::Index dim = 16;
  Matrix m = Matrix::Constant(dim, dim, Complex(1.0, 0.0));
  TopEigenResult r = top_eigen_lanczos(
      [&](const Vector& x) { return Vector(m * x); }, dim);
  CHECK(r.value == doctest::Approx(static_cast<double>(dim)).epsilon(1e-10));
  CHECK((m * r.vector - r.value * r.vector).norm() < 1e-8);
}

TEST_CASE("lanczos reports failure to converge") {
  Rng rng(65);
  Matrix m = planted(rng, {2.0, 1.99, 1.98, 1.0, 0.5, 0.25, 0.1, 0.05});
  CHECK_THROWS_AS(top_eigen_lanczos([&](const Vector& x) { return Vector(m * x); },
                                    8, 1e-14, 2),
                  ConvergenceError);
}

TEST_CASE("spectrum head is descending and capped at five entries") {
  Rng rng(66);
  Matrix m = planted(rng, {5.0, 4.0, 3.0, 2.0, 1.0, 0.5, 0.25});
  TopEigenResult dense = top_eigen_dense(m);
  REQUIRE(dense.spectrum_head.size() == 5);
  for (std::size_t i = 0; i + 1 < dense.spectrum_head.size(); ++i)
    CHECK(dense.spectrum_head[i] >= dense.spectrum_head[i + 1]);

  Matrix small = planted(rng, {1.5, 0.5});
  CHECK(top_eigen_dense(small).spectrum_head.size() == 2);
}
