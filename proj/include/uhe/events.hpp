#pragma once

#include <array>
#include <cstdint>
#include <memory>
#include <optional>
#include <variant>
#include <vector>

#include "uhe/hilbert.hpp"
#include "uhe/localization.hpp"

namespace uhe {

class Constraint;

// ===== constraint kinds =====

enum class LocalizationVariant {
  kProbability,        // sum_{i in A} |psi_i|^2        >= threshold
  kAmplitudeMagnitude  // |sum_{i in A} psi_i * dx|     >= threshold
};

// State localized in a spatial region at threshold `threshold`.
struct RegionLocalization {
  Grid1D grid;
  Region1D region;
  double threshold = 0.9;
  LocalizationVariant variant = LocalizationVariant::kProbability;
};

// Weight in the range of a projector: <psi|P|psi> >= 1 - epsilon.
// epsilon = 0 demands exact membership (up to an evaluation slack of 1e-12).
struct SubspaceMembership {
  Matrix projector;  // Hermitian idempotent
  double epsilon = 0.0;
};

// Weight in the eigenspace of `observable` for eigenvalue `value`:
// <psi|E_value|psi> >= 1 - epsilon.
struct EigenspaceProximity {
  Observable observable;
  double value = 0.0;
  double epsilon = 0.0;
  Matrix projector;  // derived; filled in at constraint construction
};

// Constraint on one tensor factor, lifted to the product space by acting with
// the inner constraint's projector on that factor and the identity on the
// other.  Requires a projector-weight inner constraint (region probability,
// subspace, eigenspace, or a disjunction of those); by construction the
// lifted test ignores anything unitary done to the other factor.
struct SubsystemLift {
  int factor = 0;                        // 0 = slow index, 1 = fast index
  std::array<Eigen::Index, 2> dims{};    // (d_factor0, d_factor1)
  std::shared_ptr<const Constraint> inner;
};

// Inner constraint evaluated on forward.apply(psi).  This is how nonlinear
// constraints are pulled back to another reference time.
struct EvolvedConstraint {
  Propagator forward;
  std::shared_ptr<const Constraint> inner;
};

// Satisfied when at least one alternative is satisfied (used for events
// extended over several sample times).
struct Disjunction {
  std::vector<std::shared_ptr<const Constraint>> alternatives;
};

// ===== constraint =====

// Slack applied to every weight comparison (w >= threshold - kEvalSlack), so
// that states constructed exactly on a subspace still pass an epsilon = 0
// membership test after round trips through unitaries.
inline constexpr double kEvalSlack = 1e-12;

// Ray-invariant predicate on states: evaluation renormalizes its input, so
// c(alpha * psi) = c(psi) for any alpha != 0.
class Constraint {
 public:
  using Node = std::variant<RegionLocalization, SubspaceMembership,
                            EigenspaceProximity, SubsystemLift,
                            EvolvedConstraint, Disjunction>;

  Constraint() = default;
  Constraint(Node node);  // validates the payload (NOLINT: implicit by design)

  const Node& node() const { return *node_; }
  Eigen::Index dim() const;

  bool satisfied(const StateVector& psi) const;

  // Equivalent constraint on states at the earlier reference time, given
  // to_initial = U(t0, t): projector payloads are conjugated in place,
  // everything else is composed with the forward map U(t, t0).
  Constraint pulled_back(const Propagator& to_initial) const;

  // Structural equality: same kind and bitwise-equal payload (labels on
  // observables are ignored).
  bool operator==(const Constraint& other) const;

 private:
  std::shared_ptr<const Node> node_;
};

// Convenience builders.
Constraint region_constraint(const Grid1D& grid, const Region1D& region,
                             double threshold,
                             LocalizationVariant variant =
                                 LocalizationVariant::kProbability);
Constraint subspace_constraint(Matrix projector, double epsilon);
Constraint eigenspace_constraint(Observable obs, double value, double epsilon);
Constraint lifted_constraint(int factor, std::array<Eigen::Index, 2> dims,
                             Constraint inner);

// ===== events =====

// Ray-invariant condition attached to one or more sample times.  A plain
// event has a single time t; extra_times model conditions extended over an
// interval, satisfied when the constraint holds at >= 1 sample time.
struct Event {
  double t = 0.0;
  Constraint constraint;
  std::uint64_t id = 0;               // unique token, assigned at creation
  std::vector<double> extra_times{};  // optional additional sample times

  static Event at(double t, Constraint c);
  static Event spanning(std::vector<double> times, Constraint c);

  std::vector<double> sample_times() const;
  // Identity for registry set operations: equal times and equal constraint.
  bool same_content(const Event& other) const;
};

// Finite set of events, kept sorted by time (insertion order among ties).
class Registry {
 public:
  Registry() = default;
  explicit Registry(std::vector<Event> events);

  void add(Event e);
  const std::vector<Event>& events() const { return events_; }
  std::size_t size() const { return events_.size(); }
  bool empty() const { return events_.empty(); }
  bool contains(const Event& e) const;  // by content

  // Structural equality as event multisets (order-insensitive).
  bool operator==(const Registry& other) const;

 private:
  std::vector<Event> events_;
};

// Does the solution described by (psi at t_ref, family) satisfy e?  Evolves
// to each sample time of e and evaluates the constraint there.
bool satisfies(const StateVector& psi_ref, double t_ref,
               const PropagatorFamily& family, const Event& e);

// Constraint on states at reference time t0 equivalent to e.  For e.t == t0
// (and no extra sample times) the original constraint object is returned
// unchanged; multiple sample times pull back to a disjunction.
Constraint pullback(const Event& e, double t0, const PropagatorFamily& family);

// Events with t <= t_cut (inclusive).
Registry sub_registry_upto(const Registry& r, double t_cut);

// Set operations by event content.  Union keeps the first copy of an event
// present in both inputs.
Registry union_registries(const Registry& r1, const Registry& r2);
Registry intersect_registries(const Registry& r1, const Registry& r2);
bool is_subregistry(const Registry& r1, const Registry& r2);  // r1 subset of r2

// Time reversal: each event (t, c) becomes (-t, c) and the family is wrapped
// so that states on the reversed axis evolve as psi'(t) = psi(-t).  Applying
// it twice reproduces the original registry (same event ids) and the original
// family object.
std::pair<Registry, std::shared_ptr<const PropagatorFamily>> reverse_registry(
    const Registry& r, std::shared_ptr<const PropagatorFamily> family);

// ===== config parsing =====

// Event descriptions in JSON configs:
//   {"t": 1.0, "kind": "region",     "region": [[lo,hi],...], "lambda": 0.9,
//    "variant": "probability"|"amplitude"}
//   {"t": 1.0, "kind": "subspace",   "projector": [[...row-major [re,im]...]],
//    "epsilon": 0.0}
//   {"t": 1.0, "kind": "eigenspace", "observable": [[...]], "value": 0.5,
//    "epsilon": 0.01}
// plus optional "times": [t1, t2, ...] for extended events and
// "factor": {"index": 0|1, "dims": [d1, d2]} to lift onto a tensor factor.
struct EventParseContext {
  std::optional<Grid1D> grid;  // required for region events
};

Event event_from_json_text(const std::string& json_text,
                           const EventParseContext& ctx);

}  // namespace uhe
