#include "uhe/two_boundary.hpp"

#include <algorithm>
#include <cmath>
#include <complex>
#include <numbers>

namespace uhe {

namespace {

bool use_dense(const TwoBoundaryProblem& p, Eigen::Index dim) {
  switch (p.eigen_mode) {
    case EigenMode::kDense:
      return true;
    case EigenMode::kIterative:
      return false;
    case EigenMode::kAuto:
    default:
      return dim <= kDenseEigenLimit;
  }
}

std::vector<Eigen::Index> region_cells(const Grid1D& grid, const Region1D& a) {
  std::vector<Eigen::Index> cells;
  const Eigen::VectorXd ind = region_indicator(grid, a);
  for (Eigen::Index i = 0; i < ind.size(); ++i)
    if (ind[i] > 0.5) cells.push_back(i);
  return cells;
}

// Builds the dense matrix of the sum operator P_A + U^dag P_B U.
Matrix dense_sum_operator(const TwoBoundaryProblem& p) {
  const Eigen::VectorXd a = region_indicator(p.grid, p.region_a);
  const Eigen::VectorXd b = region_indicator(p.grid, p.region_b);
  const Matrix ud = p.u.to_dense();
  Matrix m = ud.adjoint() * b.cast<Complex>().asDiagonal() * ud;
  m.diagonal() += a.cast<Complex>();
  return 0.5 * (m + m.adjoint()).eval();
}

double recompute_lambda_a(const TwoBoundaryProblem& p, const StateVector& psi) {
  return degree_probability(psi.normalized(), p.grid, p.region_a);
}

double recompute_lambda_b(const TwoBoundaryProblem& p, const StateVector& psi) {
  return degree_probability(evolve(psi.normalized(), p.u), p.grid, p.region_b);
}

JointLocalizationResult package_result(const TwoBoundaryProblem& p,
                                       TopEigenResult eig) {
  JointLocalizationResult res;
  res.psi_star = StateVector(std::move(eig.vector));
  res.lambda_a = recompute_lambda_a(p, res.psi_star);
  res.lambda_b = recompute_lambda_b(p, res.psi_star);
  res.objective_value = eig.value;
  res.spectrum_head = std::move(eig.spectrum_head);
  res.iterations = eig.iterations;
  return res;
}

}  // namespace

void TwoBoundaryProblem::validate() const {
  if (grid.n <= 0) throw ValidationError("TwoBoundaryProblem: missing grid");
  if (!region_a.within(grid) || !region_b.within(grid))
    throw ValidationError("TwoBoundaryProblem: regions must lie inside the grid domain");
  if (region_cells(grid, region_a).empty())
    throw ValidationError("TwoBoundaryProblem: region A covers no grid cell");
  if (region_cells(grid, region_b).empty())
    throw ValidationError("TwoBoundaryProblem: region B covers no grid cell");
  if (t_b < t_a)
    throw ValidationError("TwoBoundaryProblem: t_b must not precede t_a");
  if (u.dim() != grid.n)
    throw ValidationError("TwoBoundaryProblem: propagator/grid dimension mismatch");
  if (!(lambda > 0.0) || lambda > 1.0)
    throw ValidationError("TwoBoundaryProblem: lambda must lie in (0, 1]");
}

JointLocalizationResult max_sum_localization(const TwoBoundaryProblem& p) {
  p.validate();
  if (use_dense(p, p.grid.n)) return package_result(p, top_eigen_dense(dense_sum_operator(p)));

  const Eigen::VectorXd a = region_indicator(p.grid, p.region_a);
  const Eigen::VectorXd b = region_indicator(p.grid, p.region_b);
  const Propagator u_adj = p.u.adjoint();
  MatVec apply = [&](const Vector& v) -> Vector {
    Vector forward = p.u.apply_raw(v);
    forward = forward.cwiseProduct(b.cast<Complex>()).eval();
    Vector back = u_adj.apply_raw(forward);
    return (v.cwiseProduct(a.cast<Complex>()) + back).eval();
  };
  return package_result(p, top_eigen_lanczos(apply, p.grid.n));
}

JointLocalizationResult max_conditional_localization(const TwoBoundaryProblem& p) {
  p.validate();
  const std::vector<Eigen::Index> cells = region_cells(p.grid, p.region_a);
  const Eigen::Index m = static_cast<Eigen::Index>(cells.size());
  const Eigen::VectorXd b = region_indicator(p.grid, p.region_b);

  auto embed = [&](const Vector& x) {
    Vector full = Vector::Zero(p.grid.n);
    for (Eigen::Index i = 0; i < m; ++i) full[cells[i]] = x[i];
    return full;
  };
  auto restrict_to_a = [&](const Vector& full) {
    Vector x(m);
    for (Eigen::Index i = 0; i < m; ++i) x[i] = full[cells[i]];
    return x;
  };

  TopEigenResult eig;
  if (use_dense(p, m)) {
    // Columns of U on A's cells, rows masked by B: G^dag G is the restricted
    // concentration operator.
    Matrix g(p.grid.n, m);
    for (Eigen::Index i = 0; i < m; ++i)
      g.col(i) = p.u.apply_raw(Vector::Unit(p.grid.n, cells[i]));
    g = b.cast<Complex>().asDiagonal() * g;
    Matrix msub = g.adjoint() * g;
    msub = 0.5 * (msub + msub.adjoint()).eval();
    eig = top_eigen_dense(msub);
  } else {
    const Propagator u_adj = p.u.adjoint();
    MatVec apply = [&](const Vector& x) -> Vector {
      Vector forward = p.u.apply_raw(embed(x));
      forward = forward.cwiseProduct(b.cast<Complex>()).eval();
      return restrict_to_a(u_adj.apply_raw(forward));
    };
    eig = top_eigen_lanczos(apply, m);
  }

  Vector full = embed(eig.vector);
  fix_phase(full);
  eig.vector = std::move(full);
  return package_result(p, std::move(eig));
}

namespace {

// Witness for the weighted objective w * Lambda_A + (1 - w) * Lambda_B.
StateVector weighted_witness(const TwoBoundaryProblem& p, double w) {
  const Eigen::VectorXd a = region_indicator(p.grid, p.region_a);
  const Eigen::VectorXd b = region_indicator(p.grid, p.region_b);
  if (use_dense(p, p.grid.n)) {
    const Matrix ud = p.u.to_dense();
    Matrix m = (1.0 - w) * (ud.adjoint() * b.cast<Complex>().asDiagonal() * ud);
    m.diagonal() += w * a.cast<Complex>();
    m = 0.5 * (m + m.adjoint()).eval();
    return StateVector(top_eigen_dense(m).vector);
  }
  const Propagator u_adj = p.u.adjoint();
  MatVec apply = [&](const Vector& v) -> Vector {
    Vector forward = p.u.apply_raw(v);
    forward = forward.cwiseProduct(b.cast<Complex>()).eval();
    Vector back = u_adj.apply_raw(forward);
    return (w * v.cwiseProduct(a.cast<Complex>()) + (1.0 - w) * back).eval();
  };
  return StateVector(top_eigen_lanczos(apply, p.grid.n).vector);
}

}  // namespace

CollapseCheck check_unitary_collapse(const TwoBoundaryProblem& p) {
  p.validate();
  constexpr double kFeasSlack = 1e-12;  // accept exact boundary hits
  const double pass = p.lambda - kFeasSlack;
  CollapseCheck best;
  best.route = "none";
  bool have_candidate = false;

  // Records psi if it improves the min objective; flags feasibility when the
  // recomputed degrees clear lambda.
  auto consider = [&](const StateVector& psi, const char* route) {
    const double la = recompute_lambda_a(p, psi);
    const double lb = recompute_lambda_b(p, psi);
    if (!have_candidate ||
        std::min(la, lb) > std::min(best.lambda_a, best.lambda_b)) {
      have_candidate = true;
      best.lambda_a = la;
      best.lambda_b = lb;
      if (std::min(la, lb) >= pass) {
        best.feasible = true;
        best.witness = psi;
        best.route = route;
      }
    }
    return best.feasible;
  };

  const StateVector a_witness = max_conditional_localization(p).psi_star;
  if (consider(a_witness, "conditional")) return best;
  // Mirror witness: fully localized in B at t_b, maximal mass in A at t_a
  // (the conditional solve of the time-reversed problem, mapped back).
  const StateVector b_witness =
      p.u.adjoint().apply(max_conditional_localization(time_reversed_problem(p)).psi_star);
  if (consider(b_witness, "conditional")) return best;
  if (consider(max_sum_localization(p).psi_star, "sum")) return best;

  // Balanced search on w: raising w favors Lambda_A.  The min objective is
  // maximized near the weight where the two degrees cross.
  StateVector a_heavy = a_witness;  // best iterate seen with Lambda_A >= Lambda_B
  StateVector b_heavy = b_witness;  // best iterate seen with Lambda_A < Lambda_B
  double lo = 0.0, hi = 1.0;
  for (int it = 0; it < 32 && !best.feasible; ++it) {
    const double w = 0.5 * (lo + hi);
    const StateVector psi = weighted_witness(p, w);
    const double la = recompute_lambda_a(p, psi);
    const double lb = recompute_lambda_b(p, psi);
    consider(psi, "balanced");
    if (la < lb) {
      lo = w;
      b_heavy = psi;
    } else {
      hi = w;
      a_heavy = psi;
    }
  }

  // Degenerate weighted spectra can pin every eigensolve to one side of the
  // crossing; coherent mixtures of the two sides then reach the balance the
  // eigenvectors alone miss.
  for (int s = 1; s < 8 && !best.feasible; ++s) {
    const double frac = s / 8.0;
    for (int q = 0; q < 4 && !best.feasible; ++q) {
      const Complex phase = std::polar(1.0, q * std::numbers::pi / 2.0);
      Vector mix = std::sqrt(frac) * a_heavy.amplitudes +
                   std::sqrt(1.0 - frac) * phase * b_heavy.amplitudes;
      const double norm = mix.norm();
      if (norm < 1e-12) continue;
      consider(StateVector(mix / norm), "balanced");
    }
  }
  return best;
}

TwoBoundaryProblem time_reversed_problem(const TwoBoundaryProblem& p) {
  p.validate();
  TwoBoundaryProblem rev;
  rev.grid = p.grid;
  rev.region_a = p.region_b;
  rev.region_b = p.region_a;
  rev.t_a = -p.t_b;
  rev.t_b = -p.t_a;
  rev.u = p.u.adjoint();
  rev.lambda = p.lambda;
  rev.eigen_mode = p.eigen_mode;
  return rev;
}

}  // namespace uhe
