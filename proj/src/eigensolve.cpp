#include "uhe/eigensolve.hpp"

#include <Eigen/Eigenvalues>

#include <algorithm>
#include <cmath>
#include <limits>

#include "uhe/errors.hpp"

namespace uhe {

void fix_phase(Vector& v) {
  for (Eigen::Index i = 0; i < v.size(); ++i) {
    const double a = std::abs(v[i]);
    if (a > 1e-8) {
      v *= std::conj(v[i]) / a;
      return;
    }
  }
}

namespace {

std::vector<double> head_descending(const Eigen::VectorXd& ascending, int count) {
  std::vector<double> head;
  for (Eigen::Index i = ascending.size() - 1; i >= 0 && head.size() < size_t(count); --i)
    head.push_back(ascending[i]);
  return head;
}

}  // namespace

TopEigenResult top_eigen_dense(const Matrix& m) {
  if (m.rows() != m.cols() || m.rows() == 0)
    throw ValidationError("top_eigen_dense: matrix must be square");
  Eigen::SelfAdjointEigenSolver<Matrix> es(m);
  if (es.info() != Eigen::Success)
    throw ConvergenceError("top_eigen_dense: eigendecomposition failed");

  const Eigen::Index n = m.rows();
  const double top = es.eigenvalues()[n - 1];

  // Basis of the (possibly degenerate) top eigenspace.
  constexpr double kDegenTol = 1e-10;
  Eigen::Index first = n - 1;
  while (first > 0 && top - es.eigenvalues()[first - 1] <= kDegenTol) --first;
  const Eigen::Index mult = n - first;

  Vector v;
  if (mult == 1) {
    v = es.eigenvectors().col(n - 1);
  } else {
    // Deterministic representative: project basis vectors e_k into the
    // eigenspace until one has significant weight; that choice maximizes
    // |v_k| over unit vectors of the subspace with v_0..v_{k-1} forced small.
    const auto basis = es.eigenvectors().rightCols(mult);
    v = basis.col(mult - 1);
    for (Eigen::Index k = 0; k < n; ++k) {
      Vector coeffs = basis.adjoint() * Vector::Unit(n, k);
      if (coeffs.norm() > 1e-8) {
        v = basis * coeffs;
        v /= v.norm();
        break;
      }
    }
  }
  fix_phase(v);

  TopEigenResult res;
  res.value = top;
  res.vector = std::move(v);
  res.spectrum_head = head_descending(es.eigenvalues(), 5);
  res.iterations = 1;
  return res;
}

TopEigenResult top_eigen_lanczos(const MatVec& apply, Eigen::Index dim,
                                 double tol, int max_iterations) {
  if (dim <= 0) throw ValidationError("top_eigen_lanczos: dim must be > 0");

  // Deterministic start: uniform positive vector.
  Vector v = Vector::Constant(dim, Complex(1.0, 0.0));
  v /= v.norm();

  const int max_steps =
      static_cast<int>(std::min<Eigen::Index>(dim, max_iterations));
  std::vector<Vector> basis;
  std::vector<double> alpha, beta;  // tridiagonal entries
  basis.push_back(v);

  double residual = std::numeric_limits<double>::infinity();
  int matvecs = 0;

  // Solves the k x k tridiagonal Rayleigh-Ritz problem; next_beta is the norm
  // of the not-yet-appended residual vector, which bounds the top Ritz pair's
  // residual as |next_beta * s_last|.
  auto solve_tridiag = [&](double next_beta, TopEigenResult& out) {
    const int k = static_cast<int>(alpha.size());
    Eigen::MatrixXd t = Eigen::MatrixXd::Zero(k, k);
    for (int i = 0; i < k; ++i) {
      t(i, i) = alpha[i];
      if (i + 1 < k) t(i, i + 1) = t(i + 1, i) = beta[i];
    }
    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(t);
    out.value = es.eigenvalues()[k - 1];
    Vector ritz = Vector::Zero(dim);
    for (int i = 0; i < k; ++i) ritz += es.eigenvectors()(i, k - 1) * basis[i];
    ritz /= ritz.norm();
    fix_phase(ritz);
    out.vector = std::move(ritz);
    out.spectrum_head = head_descending(es.eigenvalues(), 5);
    residual = std::abs(next_beta * es.eigenvectors()(k - 1, k - 1));
  };

  TopEigenResult out;
  for (int step = 0; step < max_steps; ++step) {
    Vector w = apply(basis.back());
    ++matvecs;
    if (w.size() != dim)
      throw ValidationError("top_eigen_lanczos: operator changed dimension");
    const double a = (basis.back().adjoint() * w).value().real();
    alpha.push_back(a);
    w -= a * basis.back();
    if (!beta.empty()) w -= beta.back() * basis[basis.size() - 2];
    // Full reorthogonalization keeps the basis numerically orthonormal.
    for (const Vector& b : basis) w -= (b.adjoint() * w).value() * b;
    const double nb = w.norm();

    solve_tridiag(nb, out);
    out.iterations = matvecs;
    // nb below noise means the Krylov space is invariant and exact.
    if (residual <= tol || nb < 1e-14) return out;

    beta.push_back(nb);
    basis.push_back(w / nb);
  }

  if (residual <= tol) return out;
  throw ConvergenceError(
      "top_eigen_lanczos: no convergence after " + std::to_string(matvecs) +
      " iterations (residual " + std::to_string(residual) + ", tol " +
      std::to_string(tol) + ")");
}

}  // namespace uhe
