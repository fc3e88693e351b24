#pragma once

#include <optional>
#include <string>
#include <vector>

#include "uhe/eigensolve.hpp"
#include "uhe/hilbert.hpp"
#include "uhe/localization.hpp"

namespace uhe {

enum class EigenMode {
  kAuto,      // dense up to dim 2048, Lanczos above
  kDense,     // force the dense eigensolver
  kIterative  // force Lanczos
};

inline constexpr Eigen::Index kDenseEigenLimit = 2048;

// Joint localization problem: find states localized in A at t_a whose
// evolution under u is localized in B at t_b.
struct TwoBoundaryProblem {
  Grid1D grid;
  Region1D region_a;
  Region1D region_b;
  double t_a = 0.0;
  double t_b = 0.0;
  Propagator u;  // maps states at t_a to states at t_b
  double lambda = 0.9;
  EigenMode eigen_mode = EigenMode::kAuto;

  void validate() const;  // regions in domain and non-empty on the grid,
                          // t_b >= t_a, u matches the grid, 0 < lambda <= 1
};

// Solver output.  lambda_a / lambda_b are always recomputed from psi_star by
// direct evolution and quadrature (never copied from the eigenvalue), so a
// reported witness certifies itself.
struct JointLocalizationResult {
  StateVector psi_star;
  double lambda_a = 0.0;
  double lambda_b = 0.0;
  double objective_value = 0.0;
  std::vector<double> spectrum_head;
  int iterations = 0;
};

// Maximizes Lambda_A(psi) + Lambda_B(U psi) over unit states: top eigenpair
// of P_A + U^dag P_B U.  Eigenvalues lie in [0, 2].
JointLocalizationResult max_sum_localization(const TwoBoundaryProblem& p);

// Maximizes Lambda_B(U psi) over unit states supported in A: top eigenpair of
// the concentration operator P_A U^dag P_B U P_A restricted to A's cells.
// Eigenvalues lie in [0, 1] and the witness has Lambda_A = 1 exactly.
JointLocalizationResult max_conditional_localization(const TwoBoundaryProblem& p);

// Is there a state with min(Lambda_A(psi), Lambda_B(U psi)) >= lambda?
// Tries the conditional witness, then the sum witness, then a balanced
// weighted-sum search maximizing the min objective.  `witness` is set iff
// feasible; lambda_a / lambda_b describe the best state found either way.
struct CollapseCheck {
  bool feasible = false;
  std::optional<StateVector> witness;
  double lambda_a = 0.0;
  double lambda_b = 0.0;
  std::string route;  // "conditional", "sum", "balanced", or "none"
};

CollapseCheck check_unitary_collapse(const TwoBoundaryProblem& p);

// Same physics run backwards: regions swapped, times negated and swapped,
// propagator replaced by its adjoint.  The sum operators of p and its
// reversal are unitarily similar, so their spectra agree.
TwoBoundaryProblem time_reversed_problem(const TwoBoundaryProblem& p);

}  // namespace uhe
