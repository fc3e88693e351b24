#include "uhe/solution_space.hpp"

#include <Eigen/SVD>

#include <algorithm>
#include <charconv>
#include <cmath>
#include <sstream>

#include "uhe/rng.hpp"

namespace uhe {

std::size_t SolutionEnsemble::alive_count() const {
  return static_cast<std::size_t>(
      std::count(alive.begin(), alive.end(), std::uint8_t{1}));
}

std::vector<std::uint32_t> SolutionEnsemble::alive_ids() const {
  std::vector<std::uint32_t> ids;
  for (std::size_t i = 0; i < members.size(); ++i)
    if (alive[i]) ids.push_back(members[i].id);
  return ids;
}

SolutionEnsemble sample_ensemble(std::shared_ptr<const PropagatorFamily> family,
                                 double t0, std::size_t n, std::uint64_t seed) {
  if (!family) throw ValidationError("sample_ensemble: null family");
  const Eigen::Index dim = family->dim();
  if (dim <= 0) throw ValidationError("sample_ensemble: family has no dimension");

  SolutionEnsemble e;
  e.t0 = t0;
  e.family = std::move(family);
  e.seed = seed;
  e.members.reserve(n);
  e.alive.assign(n, 1);

  // Independent complex-normal components, normalized: Haar-uniform on rays.
  Rng rng(seed);
  for (std::size_t i = 0; i < n; ++i) {
    Vector v(dim);
    for (Eigen::Index k = 0; k < dim; ++k) v[k] = rng.complex_normal();
    e.members.push_back(
        Solution{static_cast<std::uint32_t>(i), StateVector(v).normalized()});
  }
  return e;
}

SolutionEnsemble filter(const SolutionEnsemble& ensemble, const Event& e) {
  if (!ensemble.family) throw ValidationError("filter: ensemble has no family");
  SolutionEnsemble out = ensemble;
  for (std::size_t i = 0; i < out.members.size(); ++i) {
    if (!out.alive[i]) continue;
    if (!satisfies(out.members[i].psi0, out.t0, *out.family, e)) out.alive[i] = 0;
  }
  return out;
}

SolutionEnsemble solution_set(const SolutionEnsemble& ensemble, const Registry& r) {
  SolutionEnsemble out = ensemble;
  for (const Event& e : r.events()) out = filter(out, e);
  return out;
}

std::vector<HistoryPoint> history_chain(const SolutionEnsemble& ensemble,
                                        const Registry& r,
                                        const std::vector<double>& times) {
  if (!std::is_sorted(times.begin(), times.end()))
    throw ValidationError("history_chain: times must be ascending");
  std::vector<HistoryPoint> points;
  points.reserve(times.size());
  // Events arrive sorted by time, so each cut extends the previous filtering.
  SolutionEnsemble running = ensemble;
  std::size_t next_event = 0;
  const auto& events = r.events();
  for (double t : times) {
    while (next_event < events.size() && events[next_event].t <= t) {
      running = filter(running, events[next_event]);
      ++next_event;
    }
    points.push_back(HistoryPoint{t, running.alive_count(), running.alive_ids()});
  }
  return points;
}

Observable exact_subspace_solution_set(const Registry& r, double t0,
                                       const PropagatorFamily& family) {
  const Eigen::Index dim = family.dim();
  std::vector<Matrix> pulled;
  for (const Event& e : r.events()) {
    const auto* s = std::get_if<SubspaceMembership>(&e.constraint.node());
    if (!s || s->epsilon != 0.0)
      throw ValidationError(
          "exact_subspace_solution_set: registry must contain only epsilon = 0 "
          "subspace events");
    if (!e.extra_times.empty())
      throw ValidationError(
          "exact_subspace_solution_set: extended events are not subspace events");
    const Propagator w = family.checked_between(e.t, t0);  // U(t0, e.t)
    const Matrix wd = w.to_dense();
    const Matrix q = wd * s->projector * wd.adjoint();
    pulled.push_back(0.5 * (q + q.adjoint()));
  }

  if (pulled.empty())
    return Observable(Matrix::Identity(dim, dim), "solution-set projector");

  // Null-space assembly: stack (I - Q_i); the intersection of the ranges is
  // the kernel of the stack, read off the SVD.
  Matrix stack(dim * static_cast<Eigen::Index>(pulled.size()), dim);
  for (std::size_t i = 0; i < pulled.size(); ++i)
    stack.middleRows(static_cast<Eigen::Index>(i) * dim, dim) =
        Matrix::Identity(dim, dim) - pulled[i];

  Eigen::JacobiSVD<Matrix> svd(stack, Eigen::ComputeThinV);
  const auto& sv = svd.singularValues();
  constexpr double kRankTol = 1e-10;
  const double scale = sv.size() > 0 ? std::max(1.0, sv[0]) : 1.0;
  Matrix proj = Matrix::Zero(dim, dim);
  for (Eigen::Index i = 0; i < sv.size(); ++i) {
    if (sv[i] <= kRankTol * scale) {
      const Vector v = svd.matrixV().col(i);
      proj += v * v.adjoint();
    }
  }
  proj = 0.5 * (proj + proj.adjoint()).eval();
  return Observable(std::move(proj), "solution-set projector");
}

namespace {

// a \ b over alive id vectors (both ascending by construction).
std::vector<std::uint32_t> setminus(const std::vector<std::uint32_t>& a,
                                    const std::vector<std::uint32_t>& b) {
  std::vector<std::uint32_t> out;
  std::set_difference(a.begin(), a.end(), b.begin(), b.end(),
                      std::back_inserter(out));
  return out;
}

}  // namespace

SetIdentityReport verify_lemma1(const Registry& r1, const Registry& r2,
                                const SolutionEnsemble& ensemble) {
  const auto ids_r1 = solution_set(ensemble, r1).alive_ids();
  const auto ids_r2 = solution_set(ensemble, r2).alive_ids();
  const auto ids_union = solution_set(ensemble, union_registries(r1, r2)).alive_ids();
  const auto ids_inter =
      solution_set(ensemble, intersect_registries(r1, r2)).alive_ids();

  std::vector<std::uint32_t> h1_and_h2;
  std::set_intersection(ids_r1.begin(), ids_r1.end(), ids_r2.begin(), ids_r2.end(),
                        std::back_inserter(h1_and_h2));
  std::vector<std::uint32_t> h1_or_h2;
  std::set_union(ids_r1.begin(), ids_r1.end(), ids_r2.begin(), ids_r2.end(),
                 std::back_inserter(h1_or_h2));

  SetIdentityReport rep;

  // (1) H(R1) n H(R2) == H(R1 u R2): symmetric difference must be empty.
  auto diff_a = setminus(h1_and_h2, ids_union);
  auto diff_b = setminus(ids_union, h1_and_h2);
  rep.union_counterexamples = diff_a;
  rep.union_counterexamples.insert(rep.union_counterexamples.end(), diff_b.begin(),
                                   diff_b.end());
  rep.union_identity_holds = rep.union_counterexamples.empty();

  // (2) H(R1) u H(R2) subset of H(R1 n R2).
  rep.intersection_counterexamples = setminus(h1_or_h2, ids_inter);
  rep.intersection_bound_holds = rep.intersection_counterexamples.empty();

  // (3) R1 subset of R2 implies H(R2) subset of H(R1).
  rep.subset_applicable = is_subregistry(r1, r2);
  if (rep.subset_applicable) {
    rep.monotonicity_counterexamples = setminus(ids_r2, ids_r1);
    rep.monotonicity_holds = rep.monotonicity_counterexamples.empty();
  } else {
    rep.monotonicity_holds = true;  // vacuous
  }
  return rep;
}

std::vector<std::pair<Registry, SolutionEnsemble>> branch(
    const SolutionEnsemble& ensemble, const Registry& r,
    const std::vector<Event>& alternatives) {
  std::vector<std::pair<Registry, SolutionEnsemble>> out;
  out.reserve(alternatives.size());
  for (const Event& alt : alternatives) {
    Registry ri = r;
    if (!ri.contains(alt)) ri.add(alt);
    out.emplace_back(std::move(ri), filter(ensemble, alt));
  }
  return out;
}

SolutionEnsemble time_reversed_ensemble(const SolutionEnsemble& ensemble) {
  if (!ensemble.family)
    throw ValidationError("time_reversed_ensemble: ensemble has no family");
  SolutionEnsemble out = ensemble;
  out.t0 = -ensemble.t0;
  if (const auto* rev = dynamic_cast<const ReversedFamily*>(ensemble.family.get())) {
    out.family = rev->base();
  } else {
    out.family = std::make_shared<ReversedFamily>(ensemble.family);
  }
  return out;
}

namespace {

std::string format_double(double v) {
  char buf[32];
  auto res = std::to_chars(buf, buf + sizeof(buf), v);
  return std::string(buf, res.ptr);
}

}  // namespace

std::string ensemble_csv(const SolutionEnsemble& ensemble, const Grid1D& grid,
                         const std::vector<Region1D>& probes) {
  std::ostringstream os;
  os << "member_id,alive";
  for (std::size_t p = 0; p < probes.size(); ++p) os << ",Lambda_" << p;
  os << "\n";
  for (std::size_t i = 0; i < ensemble.members.size(); ++i) {
    const Solution& m = ensemble.members[i];
    os << m.id << "," << (ensemble.alive[i] ? 1 : 0);
    for (const Region1D& probe : probes)
      os << "," << format_double(degree_probability(m.psi0, grid, probe));
    os << "\n";
  }
  return os.str();
}

std::string ensemble_csv(const SolutionEnsemble& ensemble,
                         const std::vector<Matrix>& probes) {
  std::ostringstream os;
  os << "member_id,alive";
  for (std::size_t p = 0; p < probes.size(); ++p) os << ",Lambda_" << p;
  os << "\n";
  for (std::size_t i = 0; i < ensemble.members.size(); ++i) {
    const Solution& m = ensemble.members[i];
    os << m.id << "," << (ensemble.alive[i] ? 1 : 0);
    for (const Matrix& probe : probes) {
      const Vector& v = m.psi0.amplitudes;
      os << "," << format_double(std::real(v.dot(probe * v)));
    }
    os << "\n";
  }
  return os.str();
}

}  // namespace uhe
