#include "uhe/hilbert.hpp"

#include <Eigen/Eigenvalues>

#include <algorithm>
#include <cmath>
#include <limits>
#include <numbers>

#include "uhe/fft.hpp"

namespace uhe {

namespace {

bool power_of_two(int n) { return n > 0 && (n & (n - 1)) == 0; }

void require_finite(const Vector& v, const char* what) {
  for (Eigen::Index i = 0; i < v.size(); ++i) {
    if (!std::isfinite(v[i].real()) || !std::isfinite(v[i].imag()))
      throw ValidationError(std::string(what) + ": non-finite amplitude");
  }
}

}  // namespace

// ===== states =====

StateVector::StateVector(Vector a) : amplitudes(std::move(a)) {
  require_finite(amplitudes, "StateVector");
}

bool StateVector::is_normalized(double tol) const {
  return std::abs(norm() - 1.0) <= tol;
}

StateVector StateVector::normalized() const {
  const double n = norm();
  if (n <= 0.0) throw ValidationError("normalized(): zero state vector");
  return StateVector(amplitudes / n);
}

StateVector basis_state(Eigen::Index dim, Eigen::Index k) {
  if (dim <= 0 || k < 0 || k >= dim)
    throw ValidationError("basis_state: index out of range");
  Vector v = Vector::Zero(dim);
  v[k] = 1.0;
  return StateVector(std::move(v));
}

StateVector tensor(const StateVector& psi1, const StateVector& psi2) {
  const Eigen::Index d1 = psi1.dim(), d2 = psi2.dim();
  if (d1 == 0 || d2 == 0) throw ValidationError("tensor: empty factor");
  Vector out(d1 * d2);
  for (Eigen::Index i = 0; i < d1; ++i)
    out.segment(i * d2, d2) = psi1.amplitudes[i] * psi2.amplitudes;
  return StateVector(std::move(out));
}

double born_probability(const StateVector& psi, const StateVector& phi) {
  if (psi.dim() != phi.dim())
    throw ValidationError("born_probability: dimension mismatch");
  if (!psi.is_normalized() || !phi.is_normalized())
    throw ValidationError("born_probability: states must be normalized");
  const Complex amp = phi.amplitudes.dot(psi.amplitudes);
  return std::norm(amp);
}

// ===== grid =====

Grid1D::Grid1D(int n_points, double lo, double hi)
    : n(n_points), x_min(lo), x_max(hi) {
  if (!power_of_two(n)) throw ValidationError("Grid1D: n must be a power of two");
  if (!(x_max > x_min)) throw ValidationError("Grid1D: x_max must exceed x_min");
  if (!std::isfinite(x_min) || !std::isfinite(x_max))
    throw ValidationError("Grid1D: non-finite bounds");
}

Eigen::VectorXd Grid1D::momenta() const {
  Eigen::VectorXd k(n);
  const double dk = 2.0 * std::numbers::pi / length();
  for (int j = 0; j < n; ++j) {
    const int f = (j < n / 2) ? j : j - n;
    k[j] = dk * f;
  }
  return k;
}

StateVector gaussian_packet(const Grid1D& grid, double center, double sigma0,
                            double k0) {
  if (!(sigma0 > 0.0)) throw ValidationError("gaussian_packet: sigma0 must be > 0");
  Vector v(grid.n);
  for (int i = 0; i < grid.n; ++i) {
    const double x = grid.coord(i);
    const double d = x - center;
    v[i] = std::exp(Complex(-d * d / (4.0 * sigma0 * sigma0), k0 * x));
  }
  return StateVector(std::move(v)).normalized();
}

double position_mean(const Grid1D& grid, const StateVector& psi) {
  if (psi.dim() != grid.n) throw ValidationError("position_mean: dimension mismatch");
  double m = 0.0;
  for (int i = 0; i < grid.n; ++i) m += grid.coord(i) * std::norm(psi.amplitudes[i]);
  return m;
}

double position_variance(const Grid1D& grid, const StateVector& psi) {
  const double mu = position_mean(grid, psi);
  double v = 0.0;
  for (int i = 0; i < grid.n; ++i) {
    const double d = grid.coord(i) - mu;
    v += d * d * std::norm(psi.amplitudes[i]);
  }
  return v;
}

// ===== operators =====

bool is_hermitian(const Matrix& m, double tol) {
  if (m.rows() != m.cols()) return false;
  return (m - m.adjoint()).cwiseAbs().maxCoeff() <= tol;
}

bool is_unitary(const Matrix& m, double tol) {
  if (m.rows() != m.cols()) return false;
  Matrix g = m.adjoint() * m;
  g.diagonal().array() -= 1.0;
  return g.cwiseAbs().maxCoeff() <= tol;
}

Observable::Observable(Matrix m, std::string lbl)
    : matrix(std::move(m)), label(std::move(lbl)) {
  if (!is_hermitian(matrix))
    throw ValidationError("Observable '" + label + "': matrix is not Hermitian");
}

Matrix eigenspace_projector(const Observable& obs, double value, double eig_tol) {
  Eigen::SelfAdjointEigenSolver<Matrix> es(obs.matrix);
  if (es.info() != Eigen::Success)
    throw ValidationError("eigenspace_projector: eigendecomposition failed");
  Matrix proj = Matrix::Zero(obs.dim(), obs.dim());
  bool found = false;
  for (Eigen::Index i = 0; i < obs.dim(); ++i) {
    if (std::abs(es.eigenvalues()[i] - value) <= eig_tol) {
      proj += es.eigenvectors().col(i) * es.eigenvectors().col(i).adjoint();
      found = true;
    }
  }
  if (!found)
    throw ValidationError("eigenspace_projector: " + std::to_string(value) +
                          " is not an eigenvalue of " + obs.label);
  return proj;
}

Hamiltonian::Hamiltonian(Matrix m) : matrix(std::move(m)) {
  if (!is_hermitian(matrix))
    throw ValidationError("Hamiltonian: matrix is not Hermitian");
}

// ===== propagator =====

void Propagator::push_factor(Factor f) {
  if (!factors_.empty()) {
    Factor& last = factors_.back();
    // Merge adjacent factors of the same kind so composed small systems stay
    // a single dense matrix and stacked kinetic steps stay one phase table.
    if (auto* d_new = std::get_if<DenseFactor>(&f)) {
      if (auto* d_last = std::get_if<DenseFactor>(&last)) {
        d_last->u = (d_new->u * d_last->u).eval();
        return;
      }
    } else if (auto* m_new = std::get_if<MomentumDiagonalFactor>(&f)) {
      if (auto* m_last = std::get_if<MomentumDiagonalFactor>(&last)) {
        if (m_last->grid == m_new->grid) {
          m_last->phases = m_last->phases.cwiseProduct(m_new->phases).eval();
          return;
        }
      }
    }
  }
  factors_.push_back(std::move(f));
}

Propagator Propagator::identity(Eigen::Index dim, double t) {
  if (dim <= 0) throw ValidationError("Propagator::identity: dim must be > 0");
  Propagator p;
  p.dim_ = dim;
  p.t_a_ = p.t_b_ = t;
  return p;
}

Propagator Propagator::dense(Matrix u, double t_a, double t_b) {
  if (u.rows() != u.cols() || u.rows() == 0)
    throw ValidationError("Propagator::dense: matrix must be square");
  if (!is_unitary(u))
    throw ValidationError("Propagator::dense: matrix is not unitary");
  Propagator p;
  p.dim_ = u.rows();
  p.t_a_ = t_a;
  p.t_b_ = t_b;
  p.factors_.push_back(DenseFactor{std::move(u)});
  return p;
}

Propagator Propagator::momentum_phases(const Grid1D& grid, Vector phases,
                                       double t_a, double t_b) {
  if (phases.size() != grid.n)
    throw ValidationError("Propagator::momentum_phases: phase table size mismatch");
  for (Eigen::Index i = 0; i < phases.size(); ++i) {
    if (std::abs(std::abs(phases[i]) - 1.0) > kUnitaryTol)
      throw ValidationError("Propagator::momentum_phases: non-unimodular phase");
  }
  Propagator p;
  p.dim_ = grid.n;
  p.t_a_ = t_a;
  p.t_b_ = t_b;
  p.factors_.push_back(MomentumDiagonalFactor{grid, std::move(phases)});
  return p;
}

Vector Propagator::apply_raw(Vector psi) const {
  if (psi.size() != dim_) throw ValidationError("Propagator::apply: dimension mismatch");
  for (const Factor& f : factors_) {
    if (const auto* d = std::get_if<DenseFactor>(&f)) {
      psi = (d->u * psi).eval();
    } else {
      const auto& m = std::get<MomentumDiagonalFactor>(f);
      apply_momentum_phases(psi, m.phases);
    }
  }
  return psi;
}

StateVector Propagator::apply(const StateVector& psi) const {
  return StateVector(apply_raw(psi.amplitudes));
}

Propagator Propagator::adjoint() const {
  Propagator p;
  p.dim_ = dim_;
  p.t_a_ = -t_b_;
  p.t_b_ = -t_a_;
  for (auto it = factors_.rbegin(); it != factors_.rend(); ++it) {
    if (const auto* d = std::get_if<DenseFactor>(&*it)) {
      p.factors_.push_back(DenseFactor{d->u.adjoint()});
    } else {
      const auto& m = std::get<MomentumDiagonalFactor>(*it);
      p.factors_.push_back(MomentumDiagonalFactor{m.grid, m.phases.conjugate()});
    }
  }
  return p;
}

Propagator Propagator::relabeled(double t_a, double t_b) const {
  Propagator p = *this;
  p.t_a_ = t_a;
  p.t_b_ = t_b;
  return p;
}

Matrix Propagator::to_dense() const {
  Matrix u = Matrix::Identity(dim_, dim_);
  for (Eigen::Index c = 0; c < dim_; ++c) u.col(c) = apply_raw(u.col(c));
  return u;
}

bool Propagator::operator==(const Propagator& other) const {
  if (dim_ != other.dim_ || t_a_ != other.t_a_ || t_b_ != other.t_b_) return false;
  if (factors_.size() != other.factors_.size()) return false;
  for (std::size_t i = 0; i < factors_.size(); ++i) {
    const Factor& a = factors_[i];
    const Factor& b = other.factors_[i];
    if (a.index() != b.index()) return false;
    if (const auto* da = std::get_if<DenseFactor>(&a)) {
      const auto& db = std::get<DenseFactor>(b);
      if (da->u.rows() != db.u.rows() || da->u != db.u) return false;
    } else {
      const auto& ma = std::get<MomentumDiagonalFactor>(a);
      const auto& mb = std::get<MomentumDiagonalFactor>(b);
      if (!(ma.grid == mb.grid) || ma.phases != mb.phases) return false;
    }
  }
  return true;
}

Propagator compose(const Propagator& later, const Propagator& earlier) {
  if (later.dim_ != earlier.dim_)
    throw ValidationError("compose: dimension mismatch");
  Propagator p;
  p.dim_ = earlier.dim_;
  p.t_a_ = earlier.t_a_;
  p.t_b_ = later.t_b_;
  for (const auto& f : earlier.factors_) p.push_factor(f);
  for (const auto& f : later.factors_) p.push_factor(f);
  return p;
}

Propagator make_propagator(const Hamiltonian& h, double t_a, double t_b) {
  if (t_b < t_a)
    throw ValidationError("make_propagator: t_b < t_a (use adjoint() for backward maps)");
  Eigen::SelfAdjointEigenSolver<Matrix> es(h.matrix);
  if (es.info() != Eigen::Success)
    throw ValidationError("make_propagator: eigendecomposition failed");
  const double dt = t_b - t_a;
  Vector phases(h.dim());
  for (Eigen::Index i = 0; i < h.dim(); ++i)
    phases[i] = std::exp(Complex(0.0, -es.eigenvalues()[i] * dt));
  Matrix u = es.eigenvectors() * phases.asDiagonal() * es.eigenvectors().adjoint();
  return Propagator::dense(std::move(u), t_a, t_b);
}

Propagator compose_time_ordered(
    Eigen::Index dim,
    const std::vector<std::pair<Hamiltonian, double>>& segments,
    double t_start) {
  Propagator acc = Propagator::identity(dim, t_start);
  double t = t_start;
  for (const auto& [h, duration] : segments) {
    if (duration < 0.0)
      throw ValidationError("compose_time_ordered: negative segment duration");
    if (h.dim() != dim)
      throw ValidationError("compose_time_ordered: segment dimension mismatch");
    acc = compose(make_propagator(h, t, t + duration), acc);
    t += duration;
  }
  return acc;
}

Propagator free_particle_propagator(const Grid1D& grid, double mass, double dt) {
  if (!(mass > 0.0)) throw ValidationError("free_particle_propagator: mass must be > 0");
  const Eigen::VectorXd k = grid.momenta();
  Vector phases(grid.n);
  for (int j = 0; j < grid.n; ++j)
    phases[j] = std::exp(Complex(0.0, -k[j] * k[j] * dt / (2.0 * mass)));
  return Propagator::momentum_phases(grid, std::move(phases), 0.0, dt);
}

StateVector evolve(const StateVector& psi, const Propagator& u) {
  return u.apply(psi);
}

// ===== families =====

std::pair<double, double> PropagatorFamily::span() const {
  return {-std::numeric_limits<double>::infinity(),
          std::numeric_limits<double>::infinity()};
}

Propagator PropagatorFamily::checked_between(double t_from, double t_to) const {
  const auto [lo, hi] = span();
  constexpr double slack = 1e-9;
  for (double t : {t_from, t_to}) {
    if (t < lo - slack || t > hi + slack)
      throw TimeSpanError("propagator family: time " + std::to_string(t) +
                          " outside span [" + std::to_string(lo) + ", " +
                          std::to_string(hi) + "]");
  }
  return between(t_from, t_to);
}

TimeIndependentFamily::TimeIndependentFamily(Hamiltonian h) {
  Eigen::SelfAdjointEigenSolver<Matrix> es(h.matrix);
  if (es.info() != Eigen::Success)
    throw ValidationError("TimeIndependentFamily: eigendecomposition failed");
  eigvals_ = es.eigenvalues();
  eigvecs_ = es.eigenvectors();
}

Propagator TimeIndependentFamily::between(double t_from, double t_to) const {
  const double dt = t_to - t_from;
  Vector phases(eigvals_.size());
  for (Eigen::Index i = 0; i < eigvals_.size(); ++i)
    phases[i] = std::exp(Complex(0.0, -eigvals_[i] * dt));
  Matrix u = eigvecs_ * phases.asDiagonal() * eigvecs_.adjoint();
  return Propagator::dense(std::move(u), t_from, t_to);
}

FreeParticleFamily::FreeParticleFamily(const Grid1D& grid, double mass)
    : grid_(grid), mass_(mass) {
  if (!(mass > 0.0)) throw ValidationError("FreeParticleFamily: mass must be > 0");
}

Propagator FreeParticleFamily::between(double t_from, double t_to) const {
  return free_particle_propagator(grid_, mass_, t_to - t_from)
      .relabeled(t_from, t_to);
}

PiecewiseConstantFamily::PiecewiseConstantFamily(
    double t_start, const std::vector<std::pair<Hamiltonian, double>>& segments)
    : t_start_(t_start) {
  if (segments.empty())
    throw ValidationError("PiecewiseConstantFamily: no segments");
  breakpoints_.push_back(t_start);
  double t = t_start;
  for (const auto& [h, duration] : segments) {
    if (!(duration > 0.0))
      throw ValidationError("PiecewiseConstantFamily: segment duration must be > 0");
    if (h.dim() != segments.front().first.dim())
      throw ValidationError("PiecewiseConstantFamily: segment dimension mismatch");
    pieces_.emplace_back(h);
    t += duration;
    breakpoints_.push_back(t);
  }
}

Eigen::Index PiecewiseConstantFamily::dim() const { return pieces_.front().dim(); }

std::pair<double, double> PiecewiseConstantFamily::span() const {
  return {breakpoints_.front(), breakpoints_.back()};
}

Propagator PiecewiseConstantFamily::between(double t_from, double t_to) const {
  if (t_to < t_from) return between(t_to, t_from).adjoint();
  Propagator acc = Propagator::identity(dim(), t_from);
  for (std::size_t s = 0; s < pieces_.size(); ++s) {
    const double seg_lo = std::max(breakpoints_[s], t_from);
    const double seg_hi = std::min(breakpoints_[s + 1], t_to);
    if (seg_hi > seg_lo) acc = compose(pieces_[s].between(seg_lo, seg_hi), acc);
  }
  return acc.relabeled(t_from, t_to);
}

ReversedFamily::ReversedFamily(std::shared_ptr<const PropagatorFamily> base)
    : base_(std::move(base)) {
  if (!base_) throw ValidationError("ReversedFamily: null base family");
}

std::pair<double, double> ReversedFamily::span() const {
  const auto [lo, hi] = base_->span();
  return {-hi, -lo};
}

Propagator ReversedFamily::between(double t_from, double t_to) const {
  return base_->between(-t_from, -t_to).relabeled(t_from, t_to);
}

// ===== spin helpers =====

Matrix pauli_x() {
  Matrix m(2, 2);
  m << 0, 1, 1, 0;
  return m;
}

Matrix pauli_y() {
  Matrix m(2, 2);
  m << Complex(0, 0), Complex(0, -1), Complex(0, 1), Complex(0, 0);
  return m;
}

Matrix pauli_z() {
  Matrix m(2, 2);
  m << 1, 0, 0, -1;
  return m;
}

namespace {

std::array<double, 3> unit_axis(const std::array<double, 3>& axis) {
  const double n = std::sqrt(axis[0] * axis[0] + axis[1] * axis[1] + axis[2] * axis[2]);
  if (!(n > 0.0)) throw ValidationError("spin axis: zero vector");
  return {axis[0] / n, axis[1] / n, axis[2] / n};
}

}  // namespace

Observable spin_observable(const std::array<double, 3>& axis) {
  const auto n = unit_axis(axis);
  Matrix m = 0.5 * (n[0] * pauli_x() + n[1] * pauli_y() + n[2] * pauli_z());
  return Observable(std::move(m), "S_(" + std::to_string(n[0]) + "," +
                                      std::to_string(n[1]) + "," +
                                      std::to_string(n[2]) + ")");
}

StateVector spin_up(const std::array<double, 3>& axis) {
  const auto n = unit_axis(axis);
  const double theta = std::acos(std::clamp(n[2], -1.0, 1.0));
  const double phi = std::atan2(n[1], n[0]);
  Vector v(2);
  v[0] = std::cos(theta / 2.0);
  v[1] = std::exp(Complex(0.0, phi)) * std::sin(theta / 2.0);
  return StateVector(std::move(v));
}

StateVector spin_down(const std::array<double, 3>& axis) {
  const auto n = unit_axis(axis);
  return spin_up({-n[0], -n[1], -n[2]});
}

StateVector singlet_state() {
  Vector v = Vector::Zero(4);
  const double s = 1.0 / std::sqrt(2.0);
  v[1] = s;   // |01>
  v[2] = -s;  // |10>
  return StateVector(std::move(v));
}

}  // namespace uhe
