#include "uhe/localization.hpp"

#include <algorithm>
#include <cmath>

namespace uhe {

namespace {

std::vector<std::pair<double, double>> normalize_intervals(
    std::vector<std::pair<double, double>> ivals) {
  for (const auto& [lo, hi] : ivals) {
    if (!std::isfinite(lo) || !std::isfinite(hi))
      throw ValidationError("Region1D: non-finite interval bound");
    if (!(lo < hi)) throw ValidationError("Region1D: interval needs lo < hi");
  }
  std::sort(ivals.begin(), ivals.end());
  std::vector<std::pair<double, double>> merged;
  for (const auto& iv : ivals) {
    if (!merged.empty() && iv.first <= merged.back().second) {
      merged.back().second = std::max(merged.back().second, iv.second);
    } else {
      merged.push_back(iv);
    }
  }
  return merged;
}

}  // namespace

Region1D::Region1D(std::vector<std::pair<double, double>> ivals)
    : intervals(normalize_intervals(std::move(ivals))) {}

Region1D::Region1D(std::initializer_list<std::pair<double, double>> ivals)
    : Region1D(std::vector<std::pair<double, double>>(ivals)) {}

bool Region1D::contains(double x) const {
  for (const auto& [lo, hi] : intervals)
    if (x >= lo && x <= hi) return true;
  return false;
}

double Region1D::total_length() const {
  double len = 0.0;
  for (const auto& [lo, hi] : intervals) len += hi - lo;
  return len;
}

bool Region1D::within(const Grid1D& grid) const {
  for (const auto& [lo, hi] : intervals)
    if (lo < grid.x_min || hi > grid.x_max) return false;
  return true;
}

Eigen::VectorXd region_indicator(const Grid1D& grid, const Region1D& a) {
  Eigen::VectorXd ind = Eigen::VectorXd::Zero(grid.n);
  for (int i = 0; i < grid.n; ++i)
    if (a.contains(grid.coord(i))) ind[i] = 1.0;
  return ind;
}

Observable region_projector(const Grid1D& grid, const Region1D& a) {
  if (!a.within(grid))
    throw ValidationError("region_projector: region extends outside the grid domain");
  Matrix p = region_indicator(grid, a).cast<Complex>().asDiagonal();
  return Observable(std::move(p), "P_region");
}

double degree_probability(const StateVector& psi, const Grid1D& grid,
                          const Region1D& a) {
  if (psi.dim() != grid.n)
    throw ValidationError("degree_probability: state/grid dimension mismatch");
  if (!psi.is_normalized())
    throw ValidationError("degree_probability: state must be normalized");
  double mass = 0.0;
  for (int i = 0; i < grid.n; ++i)
    if (a.contains(grid.coord(i))) mass += std::norm(psi.amplitudes[i]);
  return mass;
}

Complex degree_amplitude(const StateVector& psi, const Grid1D& grid,
                         const Region1D& a) {
  if (psi.dim() != grid.n)
    throw ValidationError("degree_amplitude: state/grid dimension mismatch");
  if (!psi.is_normalized())
    throw ValidationError("degree_amplitude: state must be normalized");
  Complex amp = 0.0;
  for (int i = 0; i < grid.n; ++i)
    if (a.contains(grid.coord(i))) amp += psi.amplitudes[i];
  return amp * grid.dx();
}

bool is_localized(const StateVector& psi, const Grid1D& grid, const Region1D& a,
                  double lambda) {
  if (!(lambda > 0.0) || lambda > 1.0)
    throw ValidationError("is_localized: lambda must lie in (0, 1]");
  return degree_probability(psi.normalized(), grid, a) >= lambda;
}

}  // namespace uhe
