#pragma once

#include <cstdint>
#include <memory>
#include <string>
#include <vector>

#include "uhe/events.hpp"
#include "uhe/hilbert.hpp"
#include "uhe/localization.hpp"

namespace uhe {

// One sampled solution of the free dynamics, identified by its state at the
// ensemble's reference time (the propagator family carries it everywhere
// else).
struct Solution {
  std::uint32_t id = 0;
  StateVector psi0;
};

// Monte-Carlo stand-in for the full solution space: Haar-uniform rays at a
// reference time, with one alive flag per member.  Filtering only clears
// flags; dead members stay in place so branches and histories can share the
// same index space.
struct SolutionEnsemble {
  double t0 = 0.0;
  std::shared_ptr<const PropagatorFamily> family;
  std::vector<Solution> members;
  std::vector<std::uint8_t> alive;
  std::uint64_t seed = 0;

  std::size_t alive_count() const;
  std::vector<std::uint32_t> alive_ids() const;
};

// n Haar-uniform normalized states of the family's dimension.  A fixed seed
// reproduces the ensemble bit for bit.
SolutionEnsemble sample_ensemble(std::shared_ptr<const PropagatorFamily> family,
                                 double t0, std::size_t n, std::uint64_t seed);

// Clears the alive flag of every member violating e; survivors (states and
// flags) are untouched.  Members already dead stay dead.
SolutionEnsemble filter(const SolutionEnsemble& ensemble, const Event& e);

// filter folded over every event of the registry.  Events are independent
// predicates on the member, so the fold is order-independent (exactly, not
// just within tolerance).
SolutionEnsemble solution_set(const SolutionEnsemble& ensemble, const Registry& r);

// Alive membership after applying the sub-registry of events up to each time
// in `times` (which must be ascending).  Later entries are subsets of earlier
// ones.
struct HistoryPoint {
  double t = 0.0;
  std::size_t alive_count = 0;
  std::vector<std::uint32_t> alive_ids;
};

std::vector<HistoryPoint> history_chain(const SolutionEnsemble& ensemble,
                                        const Registry& r,
                                        const std::vector<double>& times);

// Exact solution set for registries made only of epsilon = 0 subspace events:
// pulls every projector back to t0 and assembles the intersection of the
// ranges by null-space SVD.  Returns the orthogonal projector onto the
// intersection (possibly zero).
Observable exact_subspace_solution_set(const Registry& r, double t0,
                                       const PropagatorFamily& family);

// Checks the set identities relating registries and their solution sets on a
// shared ensemble:
//   (1) H(R1) intersect H(R2) == H(R1 union R2)
//   (2) H(R1) union H(R2)     is a subset of H(R1 intersect R2)
//   (3) R1 subset of R2   =>  H(R2) subset of H(R1)
// Identity (3) is reported as holding when R1 is not a subregistry of R2.
struct SetIdentityReport {
  bool union_identity_holds = false;
  bool intersection_bound_holds = false;
  bool monotonicity_holds = false;
  bool subset_applicable = false;  // was R1 a subregistry of R2?
  std::vector<std::uint32_t> union_counterexamples;
  std::vector<std::uint32_t> intersection_counterexamples;
  std::vector<std::uint32_t> monotonicity_counterexamples;
  bool all_hold() const {
    return union_identity_holds && intersection_bound_holds && monotonicity_holds;
  }
};

SetIdentityReport verify_lemma1(const Registry& r1, const Registry& r2,
                                const SolutionEnsemble& ensemble);

// One branch per alternative event: registry R + {alt}, ensemble filtered by
// alt.  The input ensemble should already be consistent with R; branches
// share its dead members.
std::vector<std::pair<Registry, SolutionEnsemble>> branch(
    const SolutionEnsemble& ensemble, const Registry& r,
    const std::vector<Event>& alternatives);

// Ensemble on the reversed time axis: reference time -t0, identical member
// states, reversed family.  Together with reverse_registry this maps
// solutions one to one: member psi'(t) = psi(-t).
SolutionEnsemble time_reversed_ensemble(const SolutionEnsemble& ensemble);

// CSV snapshot at the reference time: header plus one row per member with
// columns member_id, alive, and the probability mass in each probe region.
std::string ensemble_csv(const SolutionEnsemble& ensemble, const Grid1D& grid,
                         const std::vector<Region1D>& probes);

// Same snapshot with projector probes (columns are <psi|P|psi> per probe).
std::string ensemble_csv(const SolutionEnsemble& ensemble,
                         const std::vector<Matrix>& probes);

}  // namespace uhe
