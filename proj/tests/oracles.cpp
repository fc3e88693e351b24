#include "oracles.hpp"

#include <cmath>
#include <stdexcept>

namespace oracle {

Matrix expm_taylor(const Matrix& a) {
  const Eigen::Index n = a.rows();
  if (n != a.cols()) throw std::invalid_argument("expm_taylor: square matrix required");
  // Scale down until the norm is small, exponentiate the scaled matrix by its
  // Taylor series, then square back up.
  const double norm = a.cwiseAbs().rowwise().sum().maxCoeff();  // inf-norm
  int squarings = 0;
  double scale = 1.0;
  while (norm * scale > 0.25) {
    scale *= 0.5;
    ++squarings;
  }
  const Matrix t = a * scale;
  Matrix result = Matrix::Identity(n, n);
  Matrix term = Matrix::Identity(n, n);
  for (int k = 1; k <= 40; ++k) {
    term = (term * t / static_cast<double>(k)).eval();
    result += term;
    if (term.cwiseAbs().maxCoeff() < 1e-20) break;
  }
  for (int s = 0; s < squarings; ++s) result = (result * result).eval();
  return result;
}

Matrix propagator_expm(const Matrix& h, double dt) {
  return expm_taylor(Complex(0.0, -dt) * h);
}

double gaussian_mass(double lo, double hi, double mu, double sigma) {
  const double root2 = std::sqrt(2.0);
  return 0.5 * (std::erf((hi - mu) / (sigma * root2)) - std::erf((lo - mu) / (sigma * root2)));
}

double spread_variance(double sigma0, double mass, double t) {
  const double drift = t / (2.0 * mass * sigma0);
  return sigma0 * sigma0 + drift * drift;
}

Matrix dft_matrix(int n) {
  Matrix w(n, n);
  const double step = -2.0 * M_PI / n;
  for (int j = 0; j < n; ++j)
    for (int k = 0; k < n; ++k) w(j, k) = std::polar(1.0, step * j * k);
  return w;
}

Matrix free_particle_dense(const uhe::Grid1D& grid, double mass, double dt) {
  const int n = grid.n;
  const Eigen::VectorXd k = grid.momenta();
  Vector phases(n);
  for (int j = 0; j < n; ++j) {
    phases[j] = std::polar(1.0, -k[j] * k[j] * dt / (2.0 * mass));
  }
  const Matrix w = dft_matrix(n);
  return w.adjoint() * phases.asDiagonal() * w / static_cast<double>(n);
}

Matrix random_unitary(uhe::Rng& rng, Eigen::Index n) {
  Matrix g(n, n);
  for (Eigen::Index i = 0; i < n; ++i)
    for (Eigen::Index j = 0; j < n; ++j) g(i, j) = rng.complex_normal();
  Eigen::HouseholderQR<Matrix> qr(g);
  Matrix q = qr.householderQ();
  Matrix r = qr.matrixQR().triangularView<Eigen::Upper>();
  for (Eigen::Index i = 0; i < n; ++i) {
    Complex d = r(i, i);
    q.col(i) *= (std::abs(d) > 0.0) ? d / std::abs(d) : Complex(1.0, 0.0);
  }
  return q;
}

Matrix random_hermitian(uhe::Rng& rng, Eigen::Index n) {
  Matrix g(n, n);
  for (Eigen::Index i = 0; i < n; ++i)
    for (Eigen::Index j = 0; j < n; ++j) g(i, j) = rng.complex_normal();
  return 0.5 * (g + g.adjoint());
}

Matrix random_projector(uhe::Rng& rng, Eigen::Index n, Eigen::Index r) {
  Matrix q = random_unitary(rng, n);
  return q.leftCols(r) * q.leftCols(r).adjoint();
}

Vector random_state(uhe::Rng& rng, Eigen::Index n) {
  Vector v(n);
  for (Eigen::Index i = 0; i < n; ++i) v[i] = rng.complex_normal();
  return v / v.norm();
}

double max_abs_diff(const Matrix& a, const Matrix& b) {
  return (a - b).cwiseAbs().maxCoeff();
}

}  // namespace oracle
