#pragma once

#include <Eigen/Dense>

#include <array>
#include <complex>
#include <memory>
#include <string>
#include <utility>
#include <variant>
#include <vector>

#include "uhe/errors.hpp"

namespace uhe {

using Complex = std::complex<double>;
using Vector = Eigen::VectorXcd;
using Matrix = Eigen::MatrixXcd;

inline constexpr double kNormTol = 1e-12;       // |norm - 1| for "normalized"
inline constexpr double kHermitianTol = 1e-10;  // max |A - A^dag| entry
inline constexpr double kUnitaryTol = 1e-10;    // max |U^dag U - I| entry

// ===== states =====

// Finite-dimensional pure state.  Amplitudes are plain l2 coefficients; a
// grid state uses one coefficient per cell with sum |psi_i|^2 = 1 (no dx
// weight folded in).
struct StateVector {
  Vector amplitudes;

  StateVector() = default;
  explicit StateVector(Vector a);

  Eigen::Index dim() const { return amplitudes.size(); }
  double norm() const { return amplitudes.norm(); }
  bool is_normalized(double tol = kNormTol) const;
  StateVector normalized() const;  // error on zero vector
};

StateVector basis_state(Eigen::Index dim, Eigen::Index k);

// Kronecker product, first factor on the slow index:
// (psi1 x psi2)[i1 * d2 + i2] = psi1[i1] * psi2[i2].
StateVector tensor(const StateVector& psi1, const StateVector& psi2);

// |<phi|psi>|^2.  Both states must be normalized.
double born_probability(const StateVector& psi, const StateVector& phi);

// ===== 1-d grid =====

// Uniform periodic grid on [x_min, x_max); cell i sits at x_min + i*dx.
// n_points must be a power of two (spectral evolution runs on radix-2 FFTs).
struct Grid1D {
  int n = 0;
  double x_min = 0.0;
  double x_max = 0.0;

  Grid1D() = default;
  Grid1D(int n_points, double x_min, double x_max);

  double dx() const { return (x_max - x_min) / n; }
  double length() const { return x_max - x_min; }
  double coord(int i) const { return x_min + i * dx(); }
  // FFT-ordered wavenumbers: k_j = 2*pi*j/L for j in [0, n/2), then the
  // negative half.
  Eigen::VectorXd momenta() const;

  bool operator==(const Grid1D&) const = default;
};

// Normalized Gaussian wavepacket exp(-(x-c)^2/(4 sigma0^2) + i k0 x) on the
// grid.  sigma0 is the position-density standard deviation at t = 0.
StateVector gaussian_packet(const Grid1D& grid, double center, double sigma0,
                            double k0 = 0.0);

double position_mean(const Grid1D& grid, const StateVector& psi);
double position_variance(const Grid1D& grid, const StateVector& psi);

// ===== operators =====

// Hermitian operator with a human-readable label.  Hermiticity is checked at
// construction (max-entry tolerance kHermitianTol).
struct Observable {
  Matrix matrix;
  std::string label;

  Observable() = default;
  Observable(Matrix m, std::string label);
  Eigen::Index dim() const { return matrix.rows(); }
};

// Projector onto the eigenspace of `obs` for eigenvalue `value` (eigenvalues
// matched within eig_tol).  Error if no eigenvalue matches.
Matrix eigenspace_projector(const Observable& obs, double value,
                            double eig_tol = 1e-8);

// Dense Hermitian generator (hbar = 1 throughout).
struct Hamiltonian {
  Matrix matrix;

  Hamiltonian() = default;
  explicit Hamiltonian(Matrix m);
  Eigen::Index dim() const { return matrix.rows(); }
};

// ===== propagators =====

// Unitary map from states at time t_a to states at time t_b, stored as an
// ordered product of primitive factors: dense unitaries and momentum-space
// diagonal phase factors (applied via FFT).  Factors are applied
// earliest-first, so to_dense() returns factors.back() * ... * factors.front().
class Propagator {
 public:
  struct DenseFactor {
    Matrix u;
  };
  struct MomentumDiagonalFactor {
    Grid1D grid;
    Vector phases;  // FFT order, |phase| = 1
  };
  using Factor = std::variant<DenseFactor, MomentumDiagonalFactor>;

  Propagator() = default;

  static Propagator identity(Eigen::Index dim, double t = 0.0);
  // Validates unitarity of u (tolerance kUnitaryTol).
  static Propagator dense(Matrix u, double t_a, double t_b);
  static Propagator momentum_phases(const Grid1D& grid, Vector phases,
                                    double t_a, double t_b);

  double t_a() const { return t_a_; }
  double t_b() const { return t_b_; }
  Eigen::Index dim() const { return dim_; }

  StateVector apply(const StateVector& psi) const;
  Vector apply_raw(Vector psi) const;

  // Inverse map; time labels swapped and negated, so adjoint of U(t_b, t_a)
  // carries labels (-t_b) -> (-t_a) and adjoint is an involution.
  Propagator adjoint() const;

  // Same map with different time labels (families use this to stamp the
  // requested interval onto a cached factorization).
  Propagator relabeled(double t_a, double t_b) const;

  Matrix to_dense() const;

  const std::vector<Factor>& factors() const { return factors_; }

  // Structural comparison: same factor sequence with bitwise-equal entries
  // and equal time labels.
  bool operator==(const Propagator& other) const;

  // compose(later, earlier): apply `earlier` first.  Time labels become
  // (earlier.t_a, later.t_b).  Adjacent dense factors are multiplied out and
  // same-grid momentum factors merged, so small-dimension compositions stay
  // a single matrix.
  friend Propagator compose(const Propagator& later, const Propagator& earlier);

 private:
  double t_a_ = 0.0;
  double t_b_ = 0.0;
  Eigen::Index dim_ = 0;
  std::vector<Factor> factors_;  // empty = identity

  void push_factor(Factor f);
};

Propagator compose(const Propagator& later, const Propagator& earlier);

// exp(-i (t_b - t_a) H) computed from the eigendecomposition of H.
// t_b < t_a is rejected; use adjoint() for backward maps.
Propagator make_propagator(const Hamiltonian& h, double t_a, double t_b);

// Ordered product over (Hamiltonian, duration) segments, earliest first,
// with time labels accumulated from t_start.  Durations must be >= 0.
Propagator compose_time_ordered(
    Eigen::Index dim,
    const std::vector<std::pair<Hamiltonian, double>>& segments,
    double t_start = 0.0);

// Spectral free-particle propagator on a periodic grid:
// multiplies momentum component k by exp(-i k^2 dt / (2 m)).  dt may be
// negative (backward evolution).
Propagator free_particle_propagator(const Grid1D& grid, double mass, double dt);

StateVector evolve(const StateVector& psi, const Propagator& u);

// ===== propagator families =====

// Two-parameter family U(t2, t1) over a (possibly infinite) span of times.
// between(t_from, t_to) returns the unitary mapping states at t_from to
// states at t_to, for either time ordering.
class PropagatorFamily {
 public:
  virtual ~PropagatorFamily() = default;

  virtual Eigen::Index dim() const = 0;
  // Inclusive span of valid times; defaults to the whole real line.
  virtual std::pair<double, double> span() const;
  virtual Propagator between(double t_from, double t_to) const = 0;

  // between() with a span check (TimeSpanError outside).
  Propagator checked_between(double t_from, double t_to) const;
};

// Constant dense Hamiltonian: U(t2, t1) = exp(-i (t2 - t1) H).  The
// eigendecomposition is cached, so between() is a couple of matmuls.
class TimeIndependentFamily : public PropagatorFamily {
 public:
  explicit TimeIndependentFamily(Hamiltonian h);

  Eigen::Index dim() const override { return eigvecs_.rows(); }
  Propagator between(double t_from, double t_to) const override;

 private:
  Eigen::VectorXd eigvals_;
  Matrix eigvecs_;
};

// Free particle on a periodic grid.
class FreeParticleFamily : public PropagatorFamily {
 public:
  FreeParticleFamily(const Grid1D& grid, double mass);

  Eigen::Index dim() const override { return grid_.n; }
  Propagator between(double t_from, double t_to) const override;
  const Grid1D& grid() const { return grid_; }
  double mass() const { return mass_; }

 private:
  Grid1D grid_;
  double mass_;
};

// Piecewise-constant Hamiltonian on consecutive segments
// [t0, t1], [t1, t2], ...  Times outside [t0, t_end] are span errors.
class PiecewiseConstantFamily : public PropagatorFamily {
 public:
  PiecewiseConstantFamily(
      double t_start,
      const std::vector<std::pair<Hamiltonian, double>>& segments);

  Eigen::Index dim() const override;
  std::pair<double, double> span() const override;
  Propagator between(double t_from, double t_to) const override;

 private:
  double t_start_;
  std::vector<double> breakpoints_;  // t_start, t_start + d1, ...
  std::vector<TimeIndependentFamily> pieces_;
};

// Time-reversed view of a base family: states indexed by t' evolve as the
// base states at -t', i.e. between(t1, t2) = base.between(-t1, -t2).  The
// backward map V(-t_a, -t_b) then equals base U(t_b, t_a) adjoint.
class ReversedFamily : public PropagatorFamily {
 public:
  explicit ReversedFamily(std::shared_ptr<const PropagatorFamily> base);

  Eigen::Index dim() const override { return base_->dim(); }
  std::pair<double, double> span() const override;
  Propagator between(double t_from, double t_to) const override;
  const std::shared_ptr<const PropagatorFamily>& base() const { return base_; }

 private:
  std::shared_ptr<const PropagatorFamily> base_;
};

// ===== spin helpers =====

Matrix pauli_x();
Matrix pauli_y();
Matrix pauli_z();

// Spin-1/2 component along unit vector n: (n . sigma) / 2.
Observable spin_observable(const std::array<double, 3>& axis);

// Eigenstates of (n . sigma) for eigenvalues +1 / -1.
StateVector spin_up(const std::array<double, 3>& axis);
StateVector spin_down(const std::array<double, 3>& axis);

// (|01> - |10>) / sqrt(2) in the z basis.
StateVector singlet_state();

// Helper checks used across modules and tests.
bool is_hermitian(const Matrix& m, double tol = kHermitianTol);
bool is_unitary(const Matrix& m, double tol = kUnitaryTol);

}  // namespace uhe
