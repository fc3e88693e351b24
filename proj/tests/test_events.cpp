#include <doctest.h>

#include <cmath>
#include <memory>
#include <string>

#include "oracles.hpp"
#include "uhe/errors.hpp"
#include "uhe/events.hpp"
#include "uhe/rng.hpp"

using namespace uhe;

namespace {

// Runs fn, expecting a ValidationError; hands back its message for inspection.
template <typename Fn>
std::string validation_message(Fn&& fn) {
  try {
    fn();
  } catch (const ValidationError& err) {
    return err.what();
  }
  return {};
}

Matrix kron(const Matrix& a, const Matrix& b) {
  Matrix out(a.rows() * b.rows(), a.cols() * b.cols());
  for (Eigen::Index i = 0; i < a.rows(); ++i)
    for (Eigen::Index j = 0; j < a.cols(); ++j)
      out.block(i * b.rows(), j * b.cols(), b.rows(), b.cols()) = a(i, j) * b;
  return out;
}

}  // namespace

TEST_CASE("constraint builders validate their payloads") {
  Grid1D g(8, 0.0, 8.0);
  Region1D a{{{1.5, 4.0}}};
  CHECK_NOTHROW(region_constraint(g, a, 1.0));
  CHECK_THROWS_AS(region_constraint(g, a, 0.0), ValidationError);
  CHECK_THROWS_AS(region_constraint(g, a, 1.1), ValidationError);
  CHECK_THROWS_AS(region_constraint(g, Region1D{{{-2.0, 1.0}}}, 0.5), ValidationError);

  Rng rng(31);
  Matrix p = oracle::random_projector(rng, 4, 2);
  CHECK_NOTHROW(subspace_constraint(p, 0.0));
  CHECK_THROWS_AS(subspace_constraint(p, -0.1), ValidationError);
  CHECK_THROWS_AS(subspace_constraint(p, 1.1), ValidationError);
  CHECK_THROWS_AS(subspace_constraint(2.0 * p, 0.1), ValidationError);  // not idempotent

  Observable s = spin_observable({0.0, 0.0, 1.0});
  CHECK_NOTHROW(eigenspace_constraint(s, 0.5, 0.1));
  CHECK_THROWS_AS(eigenspace_constraint(s, 0.123, 0.1), ValidationError);  // no eigenvalue

  // Lifting needs a projector-weight inner constraint; the amplitude variant
  // is not one.
  Constraint amp = region_constraint(g, a, 0.5, LocalizationVariant::kAmplitudeMagnitude);
  CHECK_THROWS_AS(lifted_constraint(0, {8, 2}, amp), ValidationError);
  CHECK_THROWS_AS(lifted_constraint(0, {2, 8}, amp), ValidationError);  // dim mismatch
  CHECK_NOTHROW(lifted_constraint(1, {2, 8}, region_constraint(g, a, 0.5)));
  CHECK_THROWS_AS(lifted_constraint(2, {2, 8}, subspace_constraint(p, 0.0)), ValidationError);
}

TEST_CASE("constraints are ray-invariant and respect thresholds") {
  Grid1D g(8, 0.0, 8.0);
  Region1D a{{{1.5, 4.0}}};
  Vector amps = Vector::Zero(8);
  amps[2] = std::sqrt(0.6);
  amps[6] = std::sqrt(0.4);
  StateVector psi{amps};

  CHECK(region_constraint(g, a, 0.6).satisfied(psi));
  CHECK(region_constraint(g, a, 0.5).satisfied(psi));
  CHECK_FALSE(region_constraint(g, a, 0.61).satisfied(psi));

  // Evaluation renormalizes, so scaling the state changes nothing.
  StateVector scaled{(Complex(0.3, 0.4) * amps).eval()};
  CHECK(region_constraint(g, a, 0.6).satisfied(scaled));
  CHECK_FALSE(region_constraint(g, a, 0.61).satisfied(scaled));
}

TEST_CASE("subspace membership at epsilon 0 tolerates only rounding") {
  Rng rng(32);
  Matrix p = oracle::random_projector(rng, 6, 3);
  Constraint c = subspace_constraint(p, 0.0);

  Vector inside = p * oracle::random_state(rng, 6);
  inside /= inside.norm();
  CHECK(c.satisfied(StateVector{inside}));

  // A perpendicular admixture of 1e-5 shifts the weight by 1e-10, well
  // outside the 1e-12 evaluation slack.
  Vector outside = (Matrix::Identity(6, 6) - p) * oracle::random_state(rng, 6);
  outside /= outside.norm();
  Vector mixed = (inside + 1e-5 * outside).normalized();
  CHECK_FALSE(c.satisfied(StateVector{mixed}));
  CHECK(subspace_constraint(p, 1e-9).satisfied(StateVector{mixed}));
}

TEST_CASE("eigenspace proximity uses the eigenvalue's projector") {
  Observable sz = spin_observable({0.0, 0.0, 1.0});
  StateVector xup = spin_up({1.0, 0.0, 0.0});
  // Weight of x-up on the z-up eigenspace is exactly 1/2.
  CHECK(eigenspace_constraint(sz, 0.5, 0.51).satisfied(xup));
  CHECK_FALSE(eigenspace_constraint(sz, 0.5, 0.49).satisfied(xup));
  CHECK(eigenspace_constraint(sz, 0.5, 0.0).satisfied(spin_up({0.0, 0.0, 1.0})));
}

TEST_CASE("lifted constraints act on one tensor factor only") {
  Rng rng(33);
  Matrix p = oracle::random_projector(rng, 2, 1);
  Constraint inner = subspace_constraint(p, 0.3);
  Constraint lift0 = lifted_constraint(0, {2, 3}, inner);
  Constraint lift1 = lifted_constraint(1, {3, 2}, inner);
  CHECK(lift0.dim() == 6);
  CHECK(lift1.dim() == 6);

  for (int trial = 0; trial < 25; ++trial) {
    StateVector psi{oracle::random_state(rng, 6)};
    // Against the explicit Kronecker-product weight.
    const Matrix full0 = kron(p, Matrix::Identity(3, 3));
    const Matrix full1 = kron(Matrix::Identity(3, 3), p);
    const double w0 = std::real(psi.amplitudes.dot(full0 * psi.amplitudes));
    const double w1 = std::real(psi.amplitudes.dot(full1 * psi.amplitudes));
    CHECK(lift0.satisfied(psi) == (w0 >= 0.7 - kEvalSlack));
    CHECK(lift1.satisfied(psi) == (w1 >= 0.7 - kEvalSlack));
  }

  // Unitaries on the untouched factor cannot change the verdict.
  StateVector psi{oracle::random_state(rng, 6)};
  Matrix other = kron(Matrix::Identity(2, 2), oracle::random_unitary(rng, 3));
  StateVector moved{(other * psi.amplitudes).eval()};
  CHECK(lift0.satisfied(psi) == lift0.satisfied(moved));
}

TEST_CASE("disjunctions succeed when any alternative does") {
  Grid1D g(8, 0.0, 8.0);
  Constraint left = region_constraint(g, Region1D{{{0.0, 3.0}}}, 0.9);
  Constraint right = region_constraint(g, Region1D{{{5.0, 7.0}}}, 0.9);
  Constraint either{Constraint::Node{
      Disjunction{{std::make_shared<const Constraint>(left),
                   std::make_shared<const Constraint>(right)}}}};

  Vector amps = Vector::Zero(8);
  amps[6] = 1.0;
  CHECK_FALSE(left.satisfied(StateVector{amps}));
  CHECK(either.satisfied(StateVector{amps}));
  amps.setZero();
  amps[4] = 1.0;
  CHECK_FALSE(either.satisfied(StateVector{amps}));
}

TEST_CASE("pulled-back constraints match evaluation after evolution") {
  Rng rng(34);
  Grid1D g(8, 0.0, 8.0);

  // One constraint of every kind, pulled back through a random unitary.
  std::vector<Constraint> kinds;
  kinds.push_back(region_constraint(g, Region1D{{{1.5, 4.0}}}, 0.4));
  kinds.push_back(
      region_constraint(g, Region1D{{{2.0, 6.0}}}, 0.3, LocalizationVariant::kAmplitudeMagnitude));
  kinds.push_back(subspace_constraint(oracle::random_projector(rng, 8, 3), 0.25));
  kinds.push_back(lifted_constraint(0, {2, 4},
                                    subspace_constraint(oracle::random_projector(rng, 2, 1), 0.4)));

  for (const Constraint& c : kinds) {
    Matrix v = oracle::random_unitary(rng, 8);
    // to_initial maps states at the constraint's time back to the reference.
    Propagator to_initial = Propagator::dense(v, 1.0, 0.0);
    Constraint pulled = c.pulled_back(to_initial);
    int agreements = 0;
    for (int trial = 0; trial < 40; ++trial) {
      StateVector at_t{oracle::random_state(rng, 8)};
      StateVector at_ref{(v * at_t.amplitudes).eval()};
      bool direct = c.satisfied(at_t);
      bool via_pullback = pulled.satisfied(at_ref);
      CHECK(direct == via_pullback);
      agreements += (direct == via_pullback);
    }
    CHECK(agreements == 40);
  }
}

TEST_CASE("pullback through the adjoint round-trips") {
  Rng rng(35);
  Matrix p = oracle::random_projector(rng, 4, 2);
  Constraint c = subspace_constraint(p, 0.1);
  Matrix v = oracle::random_unitary(rng, 4);
  Propagator forward = Propagator::dense(v, 0.0, 1.0);
  Constraint there = c.pulled_back(forward);
  Constraint back = there.pulled_back(forward.adjoint());
  for (int trial = 0; trial < 20; ++trial) {
    StateVector psi{oracle::random_state(rng, 4)};
    CHECK(back.satisfied(psi) == c.satisfied(psi));
  }
}

TEST_CASE("events carry sorted sample times and fresh ids") {
  Grid1D g(8, 0.0, 8.0);
  Constraint c = region_constraint(g, Region1D{{{0.0, 2.0}}}, 0.5);
  Event e1 = Event::at(1.5, c);
  Event e2 = Event::at(1.5, c);
  CHECK(e1.id != e2.id);
  CHECK(e1.same_content(e2));
  CHECK(e1.sample_times() == std::vector<double>{1.5});

  Event span = Event::spanning({2.0, 0.5, 1.0}, c);
  CHECK(span.t == doctest::Approx(0.5));
  CHECK(span.sample_times() == std::vector<double>{0.5, 1.0, 2.0});
  CHECK_FALSE(span.same_content(e1));
  CHECK_THROWS_AS(Event::spanning({}, c), ValidationError);
}

TEST_CASE("satisfies evolves to each sample time") {
  Grid1D g(64, -16.0, 16.0);
  auto family = std::make_shared<FreeParticleFamily>(g, 1.0);
  StateVector packet = gaussian_packet(g, -2.0, 1.0, 2.0);  // drifts right at speed 2

  Region1D right{{{1.0, 5.0}}};
  Event arrives = Event::at(2.0, region_constraint(g, right, 0.5));
  Event never = Event::at(0.0, region_constraint(g, right, 0.5));
  CHECK(satisfies(packet, 0.0, *family, arrives));
  CHECK_FALSE(satisfies(packet, 0.0, *family, never));

  // Extended event: holding at any one sample time suffices.
  Event window = Event::spanning({0.0, 2.0}, region_constraint(g, right, 0.5));
  CHECK(satisfies(packet, 0.0, *family, window));

  // Same verdicts when the reference state lives at a different time.
  StateVector later = evolve(packet, family->between(0.0, 1.0));
  CHECK(satisfies(later, 1.0, *family, arrives));
  CHECK_FALSE(satisfies(later, 1.0, *family, never));
}

TEST_CASE("pullback returns the identical constraint at the reference time") {
  Rng rng(36);
  Matrix h = oracle::random_hermitian(rng, 4);
  auto family = std::make_shared<TimeIndependentFamily>(Hamiltonian{h});
  Constraint c = subspace_constraint(oracle::random_projector(rng, 4, 2), 0.2);

  Event here = Event::at(0.5, c);
  Constraint same = pullback(here, 0.5, *family);
  CHECK(&same.node() == &c.node());  // shared payload, not a copy

  Event there = Event::at(2.0, c);
  Constraint moved = pullback(there, 0.5, *family);
  for (int trial = 0; trial < 20; ++trial) {
    StateVector at_ref{oracle::random_state(rng, 4)};
    CHECK(moved.satisfied(at_ref) == satisfies(at_ref, 0.5, *family, there));
  }

  Event wide = Event::spanning({1.0, 3.0}, c);
  Constraint disj = pullback(wide, 0.5, *family);
  for (int trial = 0; trial < 20; ++trial) {
    StateVector at_ref{oracle::random_state(rng, 4)};
    CHECK(disj.satisfied(at_ref) == satisfies(at_ref, 0.5, *family, wide));
  }
}

TEST_CASE("registries sort by time and compare as multisets") {
  Grid1D g(8, 0.0, 8.0);
  Constraint c1 = region_constraint(g, Region1D{{{0.0, 2.0}}}, 0.5);
  Constraint c2 = region_constraint(g, Region1D{{{3.0, 6.0}}}, 0.5);
  Event e1 = Event::at(2.0, c1);
  Event e2 = Event::at(0.5, c2);
  Event e3 = Event::at(2.0, c2);

  Registry r;
  r.add(e1);
  r.add(e2);
  r.add(e3);
  CHECK(r.events()[0].id == e2.id);  // sorted by time
  CHECK(r.events()[1].id == e1.id);  // insertion order among equal times
  CHECK(r.events()[2].id == e3.id);

  Registry shuffled{{e3, e1, e2}};
  CHECK(r == shuffled);
  CHECK(r.contains(Event::at(2.0, c1)));  // content match despite fresh id
  CHECK_FALSE(r.contains(Event::at(2.1, c1)));
  CHECK_THROWS_AS(r.add(e1), ValidationError);  // duplicate id

  Registry prefix = sub_registry_upto(r, 2.0);
  CHECK(prefix.size() == 3);  // inclusive cut
  CHECK(sub_registry_upto(r, 1.9).size() == 1);
}

TEST_CASE("registry set operations work by event content") {
  Grid1D g(8, 0.0, 8.0);
  Event a = Event::at(0.0, region_constraint(g, Region1D{{{0.0, 2.0}}}, 0.5));
  Event b = Event::at(1.0, region_constraint(g, Region1D{{{3.0, 6.0}}}, 0.5));
  Event c = Event::at(2.0, region_constraint(g, Region1D{{{1.0, 4.0}}}, 0.7));

  Registry r1{{a, b}};
  Registry r2{{b, c}};
  Registry u = union_registries(r1, r2);
  Registry i = intersect_registries(r1, r2);
  CHECK(u.size() == 3);
  CHECK(i.size() == 1);
  CHECK(i.events()[0].same_content(b));
  CHECK(is_subregistry(i, r1));
  CHECK(is_subregistry(i, r2));
  CHECK(is_subregistry(r1, u));
  CHECK_FALSE(is_subregistry(u, r1));
  CHECK(is_subregistry(Registry{}, r1));
}

TEST_CASE("double reversal restores the registry and the family object") {
  Rng rng(37);
  Matrix h = oracle::random_hermitian(rng, 4);
  std::shared_ptr<const PropagatorFamily> family =
      std::make_shared<TimeIndependentFamily>(Hamiltonian{h});

  Constraint c = subspace_constraint(oracle::random_projector(rng, 4, 2), 0.1);
  Registry r{{Event::at(0.5, c), Event::spanning({1.0, 2.0}, c)}};

  auto [rev, rev_family] = reverse_registry(r, family);
  CHECK(rev.size() == 2);
  CHECK(rev.events()[0].t == doctest::Approx(-2.0));  // spanning event, earliest anchor
  CHECK(rev.events()[0].sample_times() == std::vector<double>{-2.0, -1.0});
  CHECK(rev.events()[1].t == doctest::Approx(-0.5));
  CHECK(rev_family.get() != family.get());

  auto [back, back_family] = reverse_registry(rev, rev_family);
  CHECK(back == r);
  CHECK(back_family.get() == family.get());  // unwrapped, not double-wrapped
  // Event ids survive the round trip.
  CHECK(back.events()[0].id == r.events()[0].id);
  CHECK(back.events()[1].id == r.events()[1].id);
}

TEST_CASE("reversed events hold exactly when the originals do") {
  Rng rng(38);
  Matrix h = oracle::random_hermitian(rng, 4);
  std::shared_ptr<const PropagatorFamily> family =
      std::make_shared<TimeIndependentFamily>(Hamiltonian{h});
  Registry r{{Event::at(0.7, subspace_constraint(oracle::random_projector(rng, 4, 2), 0.3)),
              Event::at(-0.4, subspace_constraint(oracle::random_projector(rng, 4, 1), 0.6))}};
  auto [rev, rev_family] = reverse_registry(r, family);

  for (int trial = 0; trial < 30; ++trial) {
    StateVector psi{oracle::random_state(rng, 4)};
    for (std::size_t k = 0; k < r.size(); ++k) {
      // psi'(t) = psi(-t): a state at reference time 0.2 corresponds to the
      // reversed state at -0.2, and each event maps to its mirror.
      bool forward = satisfies(psi, 0.2, *family, r.events()[k]);
      bool mirrored = satisfies(psi, -0.2, *rev_family, rev.events()[r.size() - 1 - k]);
      CHECK(forward == mirrored);
    }
  }
}

TEST_CASE("events parse from JSON descriptions") {
  Grid1D g(8, 0.0, 8.0);
  EventParseContext ctx{g};

  Event region = event_from_json_text(
      R"({"t": 1.5, "kind": "region", "region": [[1.5, 4.0]], "lambda": 0.7})", ctx);
  CHECK(region.t == doctest::Approx(1.5));
  Vector amps = Vector::Zero(8);
  amps[2] = 1.0;
  CHECK(region.constraint.satisfied(StateVector{amps}));

  Event amp_variant = event_from_json_text(
      R"({"t": 0, "kind": "region", "region": [[0, 8]], "lambda": 0.1,
          "variant": "amplitude"})",
      ctx);
  CHECK(amp_variant.constraint.dim() == 8);

  Event spanning = event_from_json_text(
      R"({"t": 9, "kind": "subspace", "times": [2.0, 1.0],
          "projector": [[1, 0], [0, 0]], "epsilon": 0.25})",
      EventParseContext{});
  CHECK(spanning.t == doctest::Approx(1.0));
  CHECK(spanning.sample_times() == std::vector<double>{1.0, 2.0});
  CHECK(spanning.constraint.dim() == 2);

  Event eig = event_from_json_text(
      R"({"t": 0.5, "kind": "eigenspace", "value": 0.5, "epsilon": 0.1,
          "observable": [[[0.5, 0], [0, 0]], [[0, 0], [-0.5, 0]]]})",
      EventParseContext{});
  CHECK(eig.constraint.satisfied(spin_up({0.0, 0.0, 1.0})));

  Event lifted = event_from_json_text(
      R"({"t": 0, "kind": "subspace", "projector": [[1, 0], [0, 0]], "epsilon": 0.5,
          "factor": {"index": 1, "dims": [2, 2]}})",
      EventParseContext{});
  CHECK(lifted.constraint.dim() == 4);

  // Errors name what is missing or malformed.
  std::string msg = validation_message([&] {
    event_from_json_text(R"({"kind": "region", "region": [[0, 1]], "lambda": 0.5})", ctx);
  });
  CHECK(msg.find("'t'") != std::string::npos);
  msg = validation_message([&] {
    event_from_json_text(R"({"t": 0, "kind": "region", "region": [[0, 1]], "lambda": 0.5})",
                         EventParseContext{});
  });
  CHECK(msg.find("grid") != std::string::npos);
  CHECK_THROWS_AS(event_from_json_text("not json", ctx), ValidationError);
  CHECK_THROWS_AS(event_from_json_text(R"({"t": 0, "kind": "mystery"})", ctx), ValidationError);
}
