#pragma once

#include <functional>
#include <vector>

#include "uhe/hilbert.hpp"

namespace uhe {

// Largest eigenpair of a Hermitian positive-semidefinite operator, plus the
// top of the spectrum for reporting.
struct TopEigenResult {
  double value = 0.0;
  Vector vector;
  std::vector<double> spectrum_head;  // up to 5 leading eigenvalues
  int iterations = 0;
};

using MatVec = std::function<Vector(const Vector&)>;

// Full dense eigendecomposition; exact tie-breaking on degenerate top
// eigenvalues: among unit vectors of the top eigenspace, take the one with
// the lexicographically largest |amplitude| sequence (the normalized
// projection of the first basis vector with nonzero projection), then fix
// the global phase so the leading significant entry is real positive.
TopEigenResult top_eigen_dense(const Matrix& m);

// Lanczos iteration with full reorthogonalization and a deterministic start
// vector (uniform positive).  Stops when the top Ritz residual
// ||A v - theta v|| drops below tol; throws ConvergenceError (with the last
// residual in the message) if max_iterations matvecs are exhausted first.
TopEigenResult top_eigen_lanczos(const MatVec& apply, Eigen::Index dim,
                                 double tol = 1e-10, int max_iterations = 10000);

// Deterministic phase convention used for every reported eigenvector /
// witness: first entry with |v_i| > 1e-8 made real positive.
void fix_phase(Vector& v);

}  // namespace uhe
