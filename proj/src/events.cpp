#include "uhe/events.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>

#include <nlohmann/json.hpp>

namespace uhe {

namespace {

std::atomic<std::uint64_t> g_event_counter{1};

bool is_projector(const Matrix& p, double tol = kHermitianTol) {
  if (!is_hermitian(p, tol)) return false;
  return (p * p - p).cwiseAbs().maxCoeff() <= tol;
}

Matrix hermitized(Matrix m) { return 0.5 * (m + m.adjoint()).eval(); }

// Weight functional <psi|W|psi> with minimal passing weight, for constraint
// kinds expressible as a projector weight.
struct WeightForm {
  Matrix projector;
  double min_weight;
};

std::optional<WeightForm> weight_form(const Constraint::Node& node) {
  if (const auto* r = std::get_if<RegionLocalization>(&node)) {
    if (r->variant != LocalizationVariant::kProbability) return std::nullopt;
    Matrix p = region_indicator(r->grid, r->region).cast<Complex>().asDiagonal();
    return WeightForm{std::move(p), r->threshold};
  }
  if (const auto* s = std::get_if<SubspaceMembership>(&node))
    return WeightForm{s->projector, 1.0 - s->epsilon};
  if (const auto* e = std::get_if<EigenspaceProximity>(&node))
    return WeightForm{e->projector, 1.0 - e->epsilon};
  return std::nullopt;
}

double lifted_weight(const Vector& psi, int factor,
                     std::array<Eigen::Index, 2> dims, const Matrix& w) {
  const Eigen::Index d1 = dims[0], d2 = dims[1];
  // psi[i * d2 + j] viewed column-major is X(j, i) with j fast.
  Eigen::Map<const Matrix> x(psi.data(), d2, d1);
  Complex val;
  if (factor == 0) {
    val = ((x.conjugate() * w).cwiseProduct(x)).sum();
  } else {
    val = ((w * x).cwiseProduct(x.conjugate())).sum();
  }
  return val.real();
}

}  // namespace

// ===== constraint =====

Constraint::Constraint(Node node) {
  if (auto* r = std::get_if<RegionLocalization>(&node)) {
    if (!(r->threshold > 0.0))
      throw ValidationError("RegionLocalization: threshold must be > 0");
    if (r->variant == LocalizationVariant::kProbability && r->threshold > 1.0)
      throw ValidationError("RegionLocalization: probability threshold must be <= 1");
    if (!r->region.within(r->grid))
      throw ValidationError("RegionLocalization: region extends outside the grid domain");
  } else if (auto* s = std::get_if<SubspaceMembership>(&node)) {
    if (s->epsilon < 0.0 || s->epsilon > 1.0)
      throw ValidationError("SubspaceMembership: epsilon must lie in [0, 1]");
    if (!is_projector(s->projector))
      throw ValidationError("SubspaceMembership: matrix is not a projector");
  } else if (auto* e = std::get_if<EigenspaceProximity>(&node)) {
    if (e->epsilon < 0.0 || e->epsilon > 1.0)
      throw ValidationError("EigenspaceProximity: epsilon must lie in [0, 1]");
    if (e->projector.size() == 0)
      e->projector = eigenspace_projector(e->observable, e->value);
  } else if (auto* l = std::get_if<SubsystemLift>(&node)) {
    if (l->factor != 0 && l->factor != 1)
      throw ValidationError("SubsystemLift: factor must be 0 or 1");
    if (l->dims[0] <= 0 || l->dims[1] <= 0)
      throw ValidationError("SubsystemLift: factor dimensions must be positive");
    if (!l->inner) throw ValidationError("SubsystemLift: missing inner constraint");
    if (l->inner->dim() != l->dims[l->factor])
      throw ValidationError("SubsystemLift: inner constraint dimension mismatch");
    if (!weight_form(l->inner->node()))
      throw ValidationError(
          "SubsystemLift: inner constraint must be a projector-weight test");
  } else if (auto* v = std::get_if<EvolvedConstraint>(&node)) {
    if (!v->inner) throw ValidationError("EvolvedConstraint: missing inner constraint");
    if (v->forward.dim() != v->inner->dim())
      throw ValidationError("EvolvedConstraint: propagator dimension mismatch");
  } else if (auto* d = std::get_if<Disjunction>(&node)) {
    if (d->alternatives.empty())
      throw ValidationError("Disjunction: needs at least one alternative");
    for (const auto& alt : d->alternatives) {
      if (!alt) throw ValidationError("Disjunction: null alternative");
      if (alt->dim() != d->alternatives.front()->dim())
        throw ValidationError("Disjunction: alternative dimension mismatch");
    }
  }
  node_ = std::make_shared<const Node>(std::move(node));
}

Eigen::Index Constraint::dim() const {
  if (!node_) throw ValidationError("Constraint: empty");
  return std::visit(
      [](const auto& n) -> Eigen::Index {
        using T = std::decay_t<decltype(n)>;
        if constexpr (std::is_same_v<T, RegionLocalization>) return n.grid.n;
        if constexpr (std::is_same_v<T, SubspaceMembership>) return n.projector.rows();
        if constexpr (std::is_same_v<T, EigenspaceProximity>) return n.observable.dim();
        if constexpr (std::is_same_v<T, SubsystemLift>) return n.dims[0] * n.dims[1];
        if constexpr (std::is_same_v<T, EvolvedConstraint>) return n.forward.dim();
        if constexpr (std::is_same_v<T, Disjunction>)
          return n.alternatives.front()->dim();
      },
      *node_);
}

bool Constraint::satisfied(const StateVector& psi) const {
  if (!node_) throw ValidationError("Constraint: empty");
  if (psi.dim() != dim())
    throw ValidationError("Constraint::satisfied: dimension mismatch");
  const StateVector ray = psi.normalized();

  if (const auto* r = std::get_if<RegionLocalization>(node_.get())) {
    if (r->variant == LocalizationVariant::kProbability)
      return degree_probability(ray, r->grid, r->region) >= r->threshold - kEvalSlack;
    return std::abs(degree_amplitude(ray, r->grid, r->region)) >=
           r->threshold - kEvalSlack;
  }
  if (const auto* s = std::get_if<SubspaceMembership>(node_.get())) {
    const double w = (ray.amplitudes.adjoint() * s->projector * ray.amplitudes)
                         .value()
                         .real();
    return w >= 1.0 - s->epsilon - kEvalSlack;
  }
  if (const auto* e = std::get_if<EigenspaceProximity>(node_.get())) {
    const double w = (ray.amplitudes.adjoint() * e->projector * ray.amplitudes)
                         .value()
                         .real();
    return w >= 1.0 - e->epsilon - kEvalSlack;
  }
  if (const auto* l = std::get_if<SubsystemLift>(node_.get())) {
    const auto form = weight_form(l->inner->node());
    const double w = lifted_weight(ray.amplitudes, l->factor, l->dims, form->projector);
    return w >= form->min_weight - kEvalSlack;
  }
  if (const auto* v = std::get_if<EvolvedConstraint>(node_.get()))
    return v->inner->satisfied(v->forward.apply(ray));
  const auto& d = std::get<Disjunction>(*node_);
  return std::any_of(d.alternatives.begin(), d.alternatives.end(),
                     [&](const auto& alt) { return alt->satisfied(ray); });
}

Constraint Constraint::pulled_back(const Propagator& to_initial) const {
  if (!node_) throw ValidationError("Constraint: empty");
  if (to_initial.dim() != dim())
    throw ValidationError("Constraint::pulled_back: dimension mismatch");

  if (const auto* s = std::get_if<SubspaceMembership>(node_.get())) {
    const Matrix w = to_initial.to_dense();
    Matrix p0 = hermitized(w * s->projector * w.adjoint());
    return Constraint(SubspaceMembership{std::move(p0), s->epsilon});
  }
  if (const auto* e = std::get_if<EigenspaceProximity>(node_.get())) {
    const Matrix w = to_initial.to_dense();
    Matrix o0 = hermitized(w * e->observable.matrix * w.adjoint());
    Matrix p0 = hermitized(w * e->projector * w.adjoint());
    return Constraint(EigenspaceProximity{Observable(std::move(o0), e->observable.label),
                                          e->value, e->epsilon, std::move(p0)});
  }
  if (const auto* v = std::get_if<EvolvedConstraint>(node_.get())) {
    return Constraint(
        EvolvedConstraint{compose(v->forward, to_initial.adjoint()), v->inner});
  }
  if (const auto* d = std::get_if<Disjunction>(node_.get())) {
    Disjunction out;
    for (const auto& alt : d->alternatives)
      out.alternatives.push_back(
          std::make_shared<const Constraint>(alt->pulled_back(to_initial)));
    return Constraint(std::move(out));
  }
  // Region and subsystem constraints compose with the forward map.
  return Constraint(EvolvedConstraint{to_initial.adjoint(),
                                      std::make_shared<const Constraint>(*this)});
}

bool Constraint::operator==(const Constraint& other) const {
  if (node_ == other.node_) return true;
  if (!node_ || !other.node_) return false;
  if (node_->index() != other.node_->index()) return false;

  if (const auto* a = std::get_if<RegionLocalization>(node_.get())) {
    const auto& b = std::get<RegionLocalization>(*other.node_);
    return a->grid == b.grid && a->region == b.region &&
           a->threshold == b.threshold && a->variant == b.variant;
  }
  if (const auto* a = std::get_if<SubspaceMembership>(node_.get())) {
    const auto& b = std::get<SubspaceMembership>(*other.node_);
    return a->epsilon == b.epsilon && a->projector.rows() == b.projector.rows() &&
           a->projector == b.projector;
  }
  if (const auto* a = std::get_if<EigenspaceProximity>(node_.get())) {
    const auto& b = std::get<EigenspaceProximity>(*other.node_);
    return a->value == b.value && a->epsilon == b.epsilon &&
           a->observable.dim() == b.observable.dim() &&
           a->observable.matrix == b.observable.matrix;
  }
  if (const auto* a = std::get_if<SubsystemLift>(node_.get())) {
    const auto& b = std::get<SubsystemLift>(*other.node_);
    return a->factor == b.factor && a->dims == b.dims && *a->inner == *b.inner;
  }
  if (const auto* a = std::get_if<EvolvedConstraint>(node_.get())) {
    const auto& b = std::get<EvolvedConstraint>(*other.node_);
    return a->forward == b.forward && *a->inner == *b.inner;
  }
  const auto& a = std::get<Disjunction>(*node_);
  const auto& b = std::get<Disjunction>(*other.node_);
  if (a.alternatives.size() != b.alternatives.size()) return false;
  for (std::size_t i = 0; i < a.alternatives.size(); ++i)
    if (!(*a.alternatives[i] == *b.alternatives[i])) return false;
  return true;
}

Constraint region_constraint(const Grid1D& grid, const Region1D& region,
                             double threshold, LocalizationVariant variant) {
  return Constraint(RegionLocalization{grid, region, threshold, variant});
}

Constraint subspace_constraint(Matrix projector, double epsilon) {
  return Constraint(SubspaceMembership{std::move(projector), epsilon});
}

Constraint eigenspace_constraint(Observable obs, double value, double epsilon) {
  return Constraint(EigenspaceProximity{std::move(obs), value, epsilon});
}

Constraint lifted_constraint(int factor, std::array<Eigen::Index, 2> dims,
                             Constraint inner) {
  return Constraint(SubsystemLift{factor, dims,
                                  std::make_shared<const Constraint>(std::move(inner))});
}

// ===== events =====

Event Event::at(double t, Constraint c) {
  if (!std::isfinite(t)) throw ValidationError("Event: non-finite time");
  return Event{t, std::move(c), g_event_counter.fetch_add(1), {}};
}

Event Event::spanning(std::vector<double> times, Constraint c) {
  if (times.empty()) throw ValidationError("Event: needs at least one sample time");
  for (double t : times)
    if (!std::isfinite(t)) throw ValidationError("Event: non-finite time");
  std::sort(times.begin(), times.end());
  Event e = Event::at(times.front(), std::move(c));
  e.extra_times.assign(times.begin() + 1, times.end());
  return e;
}

std::vector<double> Event::sample_times() const {
  std::vector<double> ts{t};
  ts.insert(ts.end(), extra_times.begin(), extra_times.end());
  return ts;
}

bool Event::same_content(const Event& other) const {
  return t == other.t && extra_times == other.extra_times &&
         constraint == other.constraint;
}

// ===== registry =====

Registry::Registry(std::vector<Event> events) {
  for (auto& e : events) add(std::move(e));
}

void Registry::add(Event e) {
  for (const Event& have : events_)
    if (have.id == e.id)
      throw ValidationError("Registry: duplicate event id " + std::to_string(e.id));
  // Stable insert: after all events with time <= e.t.
  auto pos = std::upper_bound(
      events_.begin(), events_.end(), e.t,
      [](double t, const Event& ev) { return t < ev.t; });
  events_.insert(pos, std::move(e));
}

bool Registry::contains(const Event& e) const {
  return std::any_of(events_.begin(), events_.end(),
                     [&](const Event& have) { return have.same_content(e); });
}

bool Registry::operator==(const Registry& other) const {
  if (events_.size() != other.events_.size()) return false;
  std::vector<bool> used(other.events_.size(), false);
  for (const Event& e : events_) {
    bool matched = false;
    for (std::size_t j = 0; j < other.events_.size(); ++j) {
      if (!used[j] && e.same_content(other.events_[j])) {
        used[j] = true;
        matched = true;
        break;
      }
    }
    if (!matched) return false;
  }
  return true;
}

bool satisfies(const StateVector& psi_ref, double t_ref,
               const PropagatorFamily& family, const Event& e) {
  if (psi_ref.dim() != family.dim())
    throw ValidationError("satisfies: state/family dimension mismatch");
  for (double tk : e.sample_times()) {
    const StateVector at_tk = family.checked_between(t_ref, tk).apply(psi_ref);
    if (e.constraint.satisfied(at_tk)) return true;
  }
  return false;
}

Constraint pullback(const Event& e, double t0, const PropagatorFamily& family) {
  const std::vector<double> times = e.sample_times();
  if (times.size() == 1 && times.front() == t0) return e.constraint;

  std::vector<std::shared_ptr<const Constraint>> parts;
  parts.reserve(times.size());
  for (double tk : times) {
    const Propagator to_initial = family.checked_between(tk, t0);  // U(t0, tk)
    parts.push_back(std::make_shared<const Constraint>(
        e.constraint.pulled_back(to_initial)));
  }
  if (parts.size() == 1) return *parts.front();
  return Constraint(Disjunction{std::move(parts)});
}

Registry sub_registry_upto(const Registry& r, double t_cut) {
  Registry out;
  for (const Event& e : r.events())
    if (e.t <= t_cut) out.add(e);
  return out;
}

Registry union_registries(const Registry& r1, const Registry& r2) {
  Registry out = r1;
  for (const Event& e : r2.events())
    if (!out.contains(e)) out.add(e);
  return out;
}

Registry intersect_registries(const Registry& r1, const Registry& r2) {
  Registry out;
  for (const Event& e : r1.events())
    if (r2.contains(e)) out.add(e);
  return out;
}

bool is_subregistry(const Registry& r1, const Registry& r2) {
  return std::all_of(r1.events().begin(), r1.events().end(),
                     [&](const Event& e) { return r2.contains(e); });
}

std::pair<Registry, std::shared_ptr<const PropagatorFamily>> reverse_registry(
    const Registry& r, std::shared_ptr<const PropagatorFamily> family) {
  if (!family) throw ValidationError("reverse_registry: null family");
  Registry out;
  for (Event e : r.events()) {
    e.t = -e.t;
    for (double& t : e.extra_times) t = -t;
    std::sort(e.extra_times.begin(), e.extra_times.end());
    // Keep e.t the earliest sample time.
    if (!e.extra_times.empty() && e.extra_times.front() < e.t) {
      e.extra_times.push_back(e.t);
      e.t = e.extra_times.front();
      e.extra_times.erase(e.extra_times.begin());
      std::sort(e.extra_times.begin(), e.extra_times.end());
    }
    out.add(std::move(e));
  }
  // Double reversal hands back the original family object.
  if (const auto* rev = dynamic_cast<const ReversedFamily*>(family.get()))
    return {std::move(out), rev->base()};
  return {std::move(out), std::make_shared<ReversedFamily>(std::move(family))};
}

// ===== config parsing =====

namespace {

using nlohmann::json;

Matrix parse_matrix(const json& j, const char* what) {
  if (!j.is_array() || j.empty())
    throw ValidationError(std::string(what) + ": expected a non-empty array of rows");
  const std::size_t rows = j.size();
  const std::size_t cols = j[0].is_array() ? j[0].size() : 0;
  if (cols == 0) throw ValidationError(std::string(what) + ": empty matrix row");
  Matrix m(rows, cols);
  for (std::size_t r = 0; r < rows; ++r) {
    if (!j[r].is_array() || j[r].size() != cols)
      throw ValidationError(std::string(what) + ": ragged matrix rows");
    for (std::size_t c = 0; c < cols; ++c) {
      const json& cell = j[r][c];
      if (cell.is_number()) {
        m(r, c) = Complex(cell.get<double>(), 0.0);
      } else if (cell.is_array() && cell.size() == 2) {
        m(r, c) = Complex(cell[0].get<double>(), cell[1].get<double>());
      } else {
        throw ValidationError(std::string(what) +
                              ": matrix entries must be numbers or [re, im] pairs");
      }
    }
  }
  return m;
}

Region1D parse_region(const json& j, const char* what) {
  if (!j.is_array())
    throw ValidationError(std::string(what) + ": expected a list of [lo, hi] pairs");
  std::vector<std::pair<double, double>> ivals;
  for (const json& iv : j) {
    if (!iv.is_array() || iv.size() != 2)
      throw ValidationError(std::string(what) + ": interval must be [lo, hi]");
    ivals.emplace_back(iv[0].get<double>(), iv[1].get<double>());
  }
  return Region1D(std::move(ivals));
}

const json& require_key(const json& j, const char* key) {
  auto it = j.find(key);
  if (it == j.end())
    throw ValidationError(std::string("event config: missing required key '") + key + "'");
  return *it;
}

}  // namespace

Event event_from_json_text(const std::string& json_text,
                           const EventParseContext& ctx) {
  json j;
  try {
    j = json::parse(json_text);
  } catch (const json::parse_error& err) {
    throw ValidationError(std::string("event config: invalid JSON: ") + err.what());
  }
  if (!j.is_object()) throw ValidationError("event config: expected a JSON object");

  const std::string kind = require_key(j, "kind").get<std::string>();
  Constraint c;
  if (kind == "region") {
    if (!ctx.grid)
      throw ValidationError("event config: region event needs a grid context");
    const Region1D region = parse_region(require_key(j, "region"), "region");
    const double lambda = require_key(j, "lambda").get<double>();
    LocalizationVariant variant = LocalizationVariant::kProbability;
    if (j.contains("variant")) {
      const std::string v = j["variant"].get<std::string>();
      if (v == "probability") {
        variant = LocalizationVariant::kProbability;
      } else if (v == "amplitude") {
        variant = LocalizationVariant::kAmplitudeMagnitude;
      } else {
        throw ValidationError("event config: unknown variant '" + v + "'");
      }
    }
    c = region_constraint(*ctx.grid, region, lambda, variant);
  } else if (kind == "subspace") {
    Matrix p = parse_matrix(require_key(j, "projector"), "projector");
    const double eps = j.value("epsilon", 0.0);
    c = subspace_constraint(std::move(p), eps);
  } else if (kind == "eigenspace") {
    Matrix o = parse_matrix(require_key(j, "observable"), "observable");
    const double value = require_key(j, "value").get<double>();
    const double eps = j.value("epsilon", 0.0);
    c = eigenspace_constraint(Observable(std::move(o), "config observable"), value, eps);
  } else {
    throw ValidationError("event config: unknown kind '" + kind + "'");
  }

  if (j.contains("factor")) {
    const json& f = j["factor"];
    const int index = require_key(f, "index").get<int>();
    const json& dims = require_key(f, "dims");
    if (!dims.is_array() || dims.size() != 2)
      throw ValidationError("event config: factor dims must be [d1, d2]");
    c = lifted_constraint(index,
                          {dims[0].get<Eigen::Index>(), dims[1].get<Eigen::Index>()},
                          std::move(c));
  }

  if (j.contains("times")) {
    std::vector<double> times = j["times"].get<std::vector<double>>();
    return Event::spanning(std::move(times), std::move(c));
  }
  return Event::at(require_key(j, "t").get<double>(), std::move(c));
}

}  // namespace uhe
