#pragma once

#include <Eigen/Dense>
#include <complex>

namespace uhe {

// Multiplies psi by a diagonal matrix of momentum-space phases:
//   psi <- F^-1 diag(phases) F psi
// with the unnormalized FFTW transforms combined so the round trip carries
// an overall 1/n.  Exactly norm-preserving when |phases_k| = 1 (up to
// floating-point rounding).  n must be a power of two.
void apply_momentum_phases(Eigen::VectorXcd& psi, const Eigen::VectorXcd& phases);

}  // namespace uhe
