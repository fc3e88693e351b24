#pragma once

#include <complex>
#include <initializer_list>
#include <utility>
#include <vector>

#include "uhe/hilbert.hpp"

namespace uhe {

// Finite union of open-ended intervals on the line.  Construction normalizes:
// intervals are sorted, and overlapping or touching intervals are merged, so
// two regions describe the same point set iff their interval lists compare
// equal.
struct Region1D {
  std::vector<std::pair<double, double>> intervals;  // normalized (lo < hi)

  Region1D() = default;
  explicit Region1D(std::vector<std::pair<double, double>> ivals);
  Region1D(std::initializer_list<std::pair<double, double>> ivals);

  bool contains(double x) const;  // closed intervals
  double total_length() const;
  bool empty() const { return intervals.empty(); }
  // Entirely inside [grid.x_min, grid.x_max]?
  bool within(const Grid1D& grid) const;

  bool operator==(const Region1D&) const = default;
};

// Cell-center membership mask: entry i is 1 when grid.coord(i) lies in A.
// This is how every grid operation in the engine discretizes a region, so
// thresholds and projectors stay consistent with each other.
Eigen::VectorXd region_indicator(const Grid1D& grid, const Region1D& a);

// Diagonal 0/1 projector onto the cells of A.  A must lie within the grid
// domain.
Observable region_projector(const Grid1D& grid, const Region1D& a);

// Probability mass in A: sum_{i in A} |psi_i|^2.  psi must be normalized.
double degree_probability(const StateVector& psi, const Grid1D& grid,
                          const Region1D& a);

// Literal complex amplitude integral over A (Riemann sum):
// sum_{i in A} psi_i * dx.  Kept separate from the probability degree; its
// magnitude is basis-dependent and not a probability.
Complex degree_amplitude(const StateVector& psi, const Grid1D& grid,
                         const Region1D& a);

// degree_probability(psi / |psi|) >= lambda.  Renormalizes, so the answer is
// invariant under global phase and positive scaling; lambda must be in (0, 1].
bool is_localized(const StateVector& psi, const Grid1D& grid, const Region1D& a,
                  double lambda);

}  // namespace uhe
