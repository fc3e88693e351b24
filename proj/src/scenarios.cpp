#include "uhe/scenarios.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <memory>
#include <numbers>
#include <set>
#include <sstream>
#include <utility>

#include "uhe/errors.hpp"
#include "uhe/solution_space.hpp"
#include "uhe/two_boundary.hpp"

namespace uhe {

namespace {

using nlohmann::json;

// ===== config parsing helpers =====

void require_config_object(const json& j) {
  if (!j.is_null() && !j.is_object()) {
    throw ValidationError("config must be a JSON object");
  }
}

void check_keys(const json& j, const std::set<std::string>& allowed) {
  if (!j.is_object()) return;
  for (const auto& item : j.items()) {
    if (!allowed.count(item.key())) {
      throw ValidationError("unknown config key '" + item.key() + "'");
    }
  }
}

const json* find_key(const json& j, const std::string& key) {
  if (!j.is_object()) return nullptr;
  auto it = j.find(key);
  if (it == j.end() || it->is_null()) return nullptr;
  return &*it;
}

double get_number(const json& j, const std::string& key, double dflt) {
  const json* v = find_key(j, key);
  if (!v) return dflt;
  if (!v->is_number()) throw ValidationError("config key '" + key + "' must be a number");
  return v->get<double>();
}

std::uint64_t get_uint(const json& j, const std::string& key, std::uint64_t dflt) {
  const json* v = find_key(j, key);
  if (!v) return dflt;
  const bool ok = v->is_number_unsigned() ||
                  (v->is_number_integer() && v->get<std::int64_t>() >= 0);
  if (!ok) {
    throw ValidationError("config key '" + key + "' must be a non-negative integer");
  }
  return v->get<std::uint64_t>();
}

std::size_t get_count(const json& j, const std::string& key, std::size_t dflt) {
  std::uint64_t n = get_uint(j, key, dflt);
  if (n == 0) throw ValidationError("config key '" + key + "' must be positive");
  return static_cast<std::size_t>(n);
}

int get_sign(const json& j, const std::string& key, int dflt) {
  const json* v = find_key(j, key);
  if (!v) return dflt;
  if (!v->is_number_integer()) {
    throw ValidationError("config key '" + key + "' must be +1 or -1");
  }
  int s = v->get<int>();
  if (s != 1 && s != -1) {
    throw ValidationError("config key '" + key + "' must be +1 or -1");
  }
  return s;
}

std::array<double, 3> get_axis(const json& j, const std::string& key,
                               const std::array<double, 3>& dflt) {
  const json* v = find_key(j, key);
  if (!v) return dflt;
  if (!v->is_array() || v->size() != 3) {
    throw ValidationError("config key '" + key + "' must be an array of 3 numbers");
  }
  std::array<double, 3> out{};
  for (int i = 0; i < 3; ++i) {
    if (!(*v)[i].is_number()) {
      throw ValidationError("config key '" + key + "' must be an array of 3 numbers");
    }
    out[i] = (*v)[i].get<double>();
  }
  return out;
}

Region1D get_region(const json& j, const std::string& key, const Region1D& dflt) {
  const json* v = find_key(j, key);
  if (!v) return dflt;
  if (!v->is_array() || v->empty()) {
    throw ValidationError("config key '" + key + "' must be an array of [lo, hi] pairs");
  }
  std::vector<std::pair<double, double>> intervals;
  for (const auto& pair : *v) {
    if (!pair.is_array() || pair.size() != 2 || !pair[0].is_number() || !pair[1].is_number()) {
      throw ValidationError("config key '" + key + "' must be an array of [lo, hi] pairs");
    }
    intervals.emplace_back(pair[0].get<double>(), pair[1].get<double>());
  }
  try {
    return Region1D{intervals};
  } catch (const ValidationError& e) {
    throw ValidationError("config key '" + key + "': " + e.what());
  }
}

Grid1D get_grid(const json& j, const std::string& key, const Grid1D& dflt) {
  const json* v = find_key(j, key);
  if (!v) return dflt;
  if (!v->is_object()) {
    throw ValidationError("config key '" + key + "' must be an object {n, x_min, x_max}");
  }
  check_keys(*v, {"n", "x_min", "x_max"});
  const json* n = find_key(*v, "n");
  if (!n || !n->is_number_integer()) {
    throw ValidationError("config key 'grid.n' must be an integer");
  }
  try {
    return Grid1D{n->get<int>(), get_number(*v, "x_min", dflt.x_min),
                  get_number(*v, "x_max", dflt.x_max)};
  } catch (const ValidationError& e) {
    throw ValidationError("config key '" + key + "': " + e.what());
  }
}

json region_to_json(const Region1D& r) {
  json out = json::array();
  for (const auto& [lo, hi] : r.intervals) out.push_back({lo, hi});
  return out;
}

json grid_to_json(const Grid1D& g) {
  return json{{"n", g.n}, {"x_min", g.x_min}, {"x_max", g.x_max}};
}

json axis_to_json(const std::array<double, 3>& a) { return json{a[0], a[1], a[2]}; }

// ===== numeric helpers =====

double region_midpoint(const Region1D& r) {
  return 0.5 * (r.intervals.front().first + r.intervals.back().second);
}

std::array<double, 3> normalized_axis(const std::array<double, 3>& a, const char* key) {
  double n = std::sqrt(a[0] * a[0] + a[1] * a[1] + a[2] * a[2]);
  if (!(n > 1e-12)) {
    throw ValidationError(std::string("config key '") + key + "' must be a nonzero vector");
  }
  return {a[0] / n, a[1] / n, a[2] / n};
}

std::array<double, 3> cross(const std::array<double, 3>& a, const std::array<double, 3>& b) {
  return {a[1] * b[2] - a[2] * b[1], a[2] * b[0] - a[0] * b[2], a[0] * b[1] - a[1] * b[0]};
}

double dot(const std::array<double, 3>& a, const std::array<double, 3>& b) {
  return a[0] * b[0] + a[1] * b[1] + a[2] * b[2];
}

json localization_json(const JointLocalizationResult& r) {
  return json{{"lambda_a", r.lambda_a},
              {"lambda_b", r.lambda_b},
              {"objective", r.objective_value},
              {"iterations", r.iterations},
              {"spectrum_head", r.spectrum_head}};
}

json collapse_json(const CollapseCheck& c, double threshold) {
  return json{{"feasible", c.feasible},
              {"threshold", threshold},
              {"route", c.route},
              {"lambda_a", c.lambda_a},
              {"lambda_b", c.lambda_b}};
}

Matrix kron2(const Matrix& a, const Matrix& b) {
  Matrix out(a.rows() * b.rows(), a.cols() * b.cols());
  for (Eigen::Index i = 0; i < a.rows(); ++i)
    for (Eigen::Index jc = 0; jc < a.cols(); ++jc)
      out.block(i * b.rows(), jc * b.cols(), b.rows(), b.cols()) = a(i, jc) * b;
  return out;
}

Matrix outer(const StateVector& v) {
  return v.amplitudes * v.amplitudes.adjoint();
}

double weight(const StateVector& psi, const Matrix& p) {
  return std::real(psi.amplitudes.dot(p * psi.amplitudes));
}

// max over states of min(<P1>, <U'P2U>) on a qubit, by bisection on the
// weight of the convex combination w*P1 + (1-w)*U'P2U.
struct QubitMaxMin {
  double value = 0.0;
  double weight_first = 0.0;
  double weight_second = 0.0;
  StateVector witness;
};

QubitMaxMin max_min_qubit(const Matrix& p1, const Matrix& p2_pulled) {
  QubitMaxMin best;
  bool have = false;
  auto consider = [&](double w) {
    Matrix m = w * p1 + (1.0 - w) * p2_pulled;
    m = 0.5 * (m + Matrix(m.adjoint()));
    Eigen::SelfAdjointEigenSolver<Matrix> es(m);
    Vector v = es.eigenvectors().col(m.rows() - 1);
    StateVector psi{v};
    double l1 = weight(psi, p1);
    double l2 = weight(psi, p2_pulled);
    if (!have || std::min(l1, l2) > best.value) {
      best = {std::min(l1, l2), l1, l2, psi};
      have = true;
    }
    return std::pair<double, double>{l1, l2};
  };
  double lo = 0.0, hi = 1.0;
  consider(lo);
  consider(hi);
  for (int iter = 0; iter < 48; ++iter) {
    double w = 0.5 * (lo + hi);
    auto [l1, l2] = consider(w);
    if (l1 < l2) {
      lo = w;  // favor the first constraint more
    } else {
      hi = w;
    }
  }
  return best;
}

// Fringe peaks inside [win_lo, win_hi]: local maxima above 5% of the window
// peak, merged unless the valley between neighbors drops below half the
// smaller of the two (so pixel-scale ripple on a smooth envelope does not
// count as interference).  Reports their mean spacing and the contrast
// between the highest peak and the deepest inter-peak valley.
struct FringeAnalysis {
  std::vector<double> maxima_positions;
  double spacing = 0.0;     // 0 when fewer than 2 maxima
  double visibility = 0.0;  // 0 when fewer than 2 maxima
};

constexpr double kPeakFloorFraction = 0.05;   // ignore peaks below this * max
constexpr double kValleyFraction = 0.5;       // distinct peaks need this deep a dip

FringeAnalysis analyze_fringes(const Grid1D& g, const Eigen::VectorXd& density,
                               double win_lo, double win_hi) {
  FringeAnalysis out;
  int first = -1, last = -1;
  double dmax = 0.0;
  for (int i = 0; i < g.n; ++i) {
    double x = g.coord(i);
    if (x < win_lo || x > win_hi) continue;
    if (first < 0) first = i;
    last = i;
    dmax = std::max(dmax, density[i]);
  }
  if (first < 0 || dmax <= 0.0) return out;
  const double floor = kPeakFloorFraction * dmax;
  std::vector<int> candidates;
  for (int i = std::max(first, 1); i <= std::min(last, g.n - 2); ++i) {
    if (density[i] >= floor && density[i] > density[i - 1] && density[i] >= density[i + 1]) {
      candidates.push_back(i);
    }
  }
  std::vector<int> peaks;
  for (int c : candidates) {
    if (peaks.empty()) {
      peaks.push_back(c);
      continue;
    }
    double valley = std::numeric_limits<double>::infinity();
    for (int i = peaks.back(); i <= c; ++i) valley = std::min(valley, density[i]);
    if (valley <= kValleyFraction * std::min(density[peaks.back()], density[c])) {
      peaks.push_back(c);  // genuinely separated
    } else if (density[c] > density[peaks.back()]) {
      peaks.back() = c;  // same lobe: keep the taller sample
    }
  }
  for (int i : peaks) out.maxima_positions.push_back(g.coord(i));
  if (peaks.size() < 2) return out;
  out.spacing = (out.maxima_positions.back() - out.maxima_positions.front()) /
                static_cast<double>(peaks.size() - 1);
  double peak_top = 0.0;
  double valley = std::numeric_limits<double>::infinity();
  for (std::size_t k = 0; k + 1 < peaks.size(); ++k) {
    peak_top = std::max(peak_top, std::max(density[peaks[k]], density[peaks[k + 1]]));
    double v = std::numeric_limits<double>::infinity();
    for (int i = peaks[k]; i <= peaks[k + 1]; ++i) v = std::min(v, density[i]);
    valley = std::min(valley, v);
  }
  out.visibility = (peak_top - valley) / (peak_top + valley);
  return out;
}

std::vector<double> even_sample_times(double t_a, double t_b, int count) {
  std::vector<double> out;
  for (int i = 0; i < count; ++i) {
    out.push_back(t_a + (t_b - t_a) * static_cast<double>(i) / (count - 1));
  }
  return out;
}

}  // namespace

// ===== transit =====

TransitConfig TransitConfig::from_json(const json& j) {
  require_config_object(j);
  TransitConfig cfg;
  check_keys(j, {"grid", "mass", "t_a", "t_b", "region_a", "region_b", "lambda", "sigma0",
                 "packet_center", "boost", "sample_times", "ensemble_size", "ensemble_lambda",
                 "seed"});
  cfg.grid = get_grid(j, "grid", cfg.grid);
  cfg.mass = get_number(j, "mass", cfg.mass);
  cfg.t_a = get_number(j, "t_a", cfg.t_a);
  cfg.t_b = get_number(j, "t_b", cfg.t_b);
  cfg.region_a = get_region(j, "region_a", cfg.region_a);
  cfg.region_b = get_region(j, "region_b", cfg.region_b);
  cfg.lambda = get_number(j, "lambda", cfg.lambda);
  cfg.sigma0 = get_number(j, "sigma0", cfg.sigma0);
  if (find_key(j, "packet_center")) cfg.packet_center = get_number(j, "packet_center", 0.0);
  if (find_key(j, "boost")) cfg.boost = get_number(j, "boost", 0.0);
  if (const json* v = find_key(j, "sample_times")) {
    if (!v->is_array()) throw ValidationError("config key 'sample_times' must be an array");
    for (const auto& t : *v) {
      if (!t.is_number()) throw ValidationError("config key 'sample_times' must hold numbers");
      cfg.sample_times.push_back(t.get<double>());
    }
  }
  cfg.ensemble_size = get_count(j, "ensemble_size", cfg.ensemble_size);
  cfg.ensemble_lambda = get_number(j, "ensemble_lambda", cfg.ensemble_lambda);
  cfg.seed = get_uint(j, "seed", cfg.seed);
  if (!(cfg.mass > 0.0)) throw ValidationError("config key 'mass' must be positive");
  if (!(cfg.sigma0 > 0.0)) throw ValidationError("config key 'sigma0' must be positive");
  if (!(cfg.t_b > cfg.t_a)) throw ValidationError("config key 't_b' must exceed 't_a'");
  if (!(cfg.ensemble_lambda > 0.0 && cfg.ensemble_lambda <= 1.0)) {
    throw ValidationError("config key 'ensemble_lambda' must lie in (0, 1]");
  }
  if (!std::is_sorted(cfg.sample_times.begin(), cfg.sample_times.end())) {
    throw ValidationError("config key 'sample_times' must be ascending");
  }
  return cfg;
}

json TransitConfig::to_json() const {
  return json{{"grid", grid_to_json(grid)},
              {"mass", mass},
              {"t_a", t_a},
              {"t_b", t_b},
              {"region_a", region_to_json(region_a)},
              {"region_b", region_to_json(region_b)},
              {"lambda", lambda},
              {"sigma0", sigma0},
              {"packet_center", packet_center ? json(*packet_center) : json()},
              {"boost", boost ? json(*boost) : json()},
              {"sample_times", sample_times},
              {"ensemble_size", ensemble_size},
              {"ensemble_lambda", ensemble_lambda},
              {"seed", seed}};
}

ScenarioReport run_transit(const TransitConfig& cfg) {
  const Grid1D& g = cfg.grid;
  const double dt = cfg.t_b - cfg.t_a;
  const double center = cfg.packet_center ? *cfg.packet_center : region_midpoint(cfg.region_a);
  const double boost =
      cfg.boost ? *cfg.boost : cfg.mass * (region_midpoint(cfg.region_b) - center) / dt;
  std::vector<double> times =
      cfg.sample_times.empty() ? even_sample_times(cfg.t_a, cfg.t_b, 5) : cfg.sample_times;

  auto family = std::make_shared<FreeParticleFamily>(g, cfg.mass);
  const Propagator u_ab = family->between(cfg.t_a, cfg.t_b);

  // Baseline packet: starts in A, drifts to B.
  StateVector psi0 = gaussian_packet(g, center, cfg.sigma0, boost);
  StateVector psi_b = evolve(psi0, u_ab);

  // Spreading check at the sample times.
  Profile variance{"variance", {"t", "measured_variance", "predicted_variance"}, {}};
  for (double t : times) {
    StateVector psi_t = evolve(psi0, family->between(cfg.t_a, t));
    double rel = t - cfg.t_a;
    double predicted =
        cfg.sigma0 * cfg.sigma0 + std::pow(rel / (2.0 * cfg.mass * cfg.sigma0), 2);
    variance.rows.push_back({t, position_variance(g, psi_t), predicted});
  }

  // Joint localization between the two boundaries.
  TwoBoundaryProblem problem{g,       cfg.region_a, cfg.region_b, cfg.t_a,
                             cfg.t_b, u_ab,         cfg.lambda,   EigenMode::kAuto};
  problem.validate();
  JointLocalizationResult sum = max_sum_localization(problem);
  JointLocalizationResult cond = max_conditional_localization(problem);
  CollapseCheck check = check_unitary_collapse(problem);

  // Densities of the conditional witness at both boundary times.
  Profile witness{"witness", {"x", "density_initial", "density_final"}, {}};
  StateVector w_b = evolve(cond.psi_star, u_ab);
  for (int i = 0; i < g.n; ++i) {
    witness.rows.push_back(
        {g.coord(i), std::norm(cond.psi_star.amplitudes[i]), std::norm(w_b.amplitudes[i])});
  }

  // Random-solution ensemble filtered by localization events at both times.
  SolutionEnsemble ensemble = sample_ensemble(family, cfg.t_a, cfg.ensemble_size, cfg.seed);
  Registry registry;
  registry.add(Event::at(cfg.t_a, region_constraint(g, cfg.region_a, cfg.ensemble_lambda)));
  registry.add(Event::at(cfg.t_b, region_constraint(g, cfg.region_b, cfg.ensemble_lambda)));
  std::vector<HistoryPoint> chain = history_chain(ensemble, registry, times);
  SolutionEnsemble surviving = solution_set(ensemble, registry);

  ScenarioReport report;
  report.scenario = "transit";
  report.seed = cfg.seed;
  report.config = cfg.to_json();
  report.config["packet_center"] = center;
  report.config["boost"] = boost;
  report.config["sample_times"] = times;

  for (std::size_t k = 0; k < times.size(); ++k) {
    StateVector psi_t = evolve(psi0, family->between(cfg.t_a, times[k]));
    report.series.push_back({times[k], static_cast<std::int64_t>(chain[k].alive_count),
                             degree_probability(psi_t, g, cfg.region_a),
                             degree_probability(psi_t, g, cfg.region_b)});
  }
  report.profiles = {variance, witness};
  report.ensemble_snapshot = ensemble_csv(surviving, g, {cfg.region_a, cfg.region_b});

  report.results = json{
      {"packet",
       {{"center", center},
        {"boost", boost},
        {"sigma0", cfg.sigma0},
        {"lambda_a_initial", degree_probability(psi0, g, cfg.region_a)},
        {"lambda_b_final", degree_probability(psi_b, g, cfg.region_b)}}},
      {"max_sum", localization_json(sum)},
      {"max_conditional", localization_json(cond)},
      {"collapse_check", collapse_json(check, cfg.lambda)},
      {"ensemble",
       {{"size", cfg.ensemble_size},
        {"lambda", cfg.ensemble_lambda},
        {"alive_after_registry", surviving.alive_count()}}},
  };
  return report;
}

// ===== two_slit =====

TwoSlitConfig TwoSlitConfig::from_json(const json& j) {
  require_config_object(j);
  TwoSlitConfig cfg;
  check_keys(j, {"grid", "mass", "t_a", "t_b", "slit_width", "slit_separation",
                 "objective_region", "detection_window", "lambda", "ensemble_size",
                 "ensemble_lambda", "seed"});
  cfg.grid = get_grid(j, "grid", cfg.grid);
  cfg.mass = get_number(j, "mass", cfg.mass);
  cfg.t_a = get_number(j, "t_a", cfg.t_a);
  cfg.t_b = get_number(j, "t_b", cfg.t_b);
  cfg.slit_width = get_number(j, "slit_width", cfg.slit_width);
  cfg.slit_separation = get_number(j, "slit_separation", cfg.slit_separation);
  cfg.objective_region = get_region(j, "objective_region", cfg.objective_region);
  if (const json* v = find_key(j, "detection_window")) {
    if (!v->is_array() || v->size() != 2 || !(*v)[0].is_number() || !(*v)[1].is_number()) {
      throw ValidationError("config key 'detection_window' must be [lo, hi]");
    }
    cfg.detection_window = {(*v)[0].get<double>(), (*v)[1].get<double>()};
  }
  cfg.lambda = get_number(j, "lambda", cfg.lambda);
  cfg.ensemble_size = get_count(j, "ensemble_size", cfg.ensemble_size);
  cfg.ensemble_lambda = get_number(j, "ensemble_lambda", cfg.ensemble_lambda);
  cfg.seed = get_uint(j, "seed", cfg.seed);
  if (!(cfg.mass > 0.0)) throw ValidationError("config key 'mass' must be positive");
  if (!(cfg.t_b > cfg.t_a)) throw ValidationError("config key 't_b' must exceed 't_a'");
  if (!(cfg.slit_width > 0.0)) throw ValidationError("config key 'slit_width' must be positive");
  if (cfg.slit_separation < 0.0) {
    throw ValidationError("config key 'slit_separation' must be non-negative");
  }
  if (!(cfg.detection_window.first < cfg.detection_window.second)) {
    throw ValidationError("config key 'detection_window' must be an increasing pair");
  }
  if (!(cfg.ensemble_lambda > 0.0 && cfg.ensemble_lambda <= 1.0)) {
    throw ValidationError("config key 'ensemble_lambda' must lie in (0, 1]");
  }
  return cfg;
}

json TwoSlitConfig::to_json() const {
  return json{{"grid", grid_to_json(grid)},
              {"mass", mass},
              {"t_a", t_a},
              {"t_b", t_b},
              {"slit_width", slit_width},
              {"slit_separation", slit_separation},
              {"objective_region", region_to_json(objective_region)},
              {"detection_window", {detection_window.first, detection_window.second}},
              {"lambda", lambda},
              {"ensemble_size", ensemble_size},
              {"ensemble_lambda", ensemble_lambda},
              {"seed", seed}};
}

ScenarioReport run_two_slit(const TwoSlitConfig& cfg) {
  const Grid1D& g = cfg.grid;
  const double hw = 0.5 * cfg.slit_width;
  const double hs = 0.5 * cfg.slit_separation;

  // Separations below the slit width merge into one opening (the normalized
  // region handles the overlap), which is exactly the single-slit control.
  Region1D slits =
      cfg.slit_separation > 0.0
          ? Region1D{{{-hs - hw, -hs + hw}, {hs - hw, hs + hw}}}
          : Region1D{{{-hw, hw}}};
  Region1D control{{{-hw, hw}}};

  auto family = std::make_shared<FreeParticleFamily>(g, cfg.mass);
  const Propagator u_ab = family->between(cfg.t_a, cfg.t_b);

  TwoBoundaryProblem double_problem{g,       slits, cfg.objective_region, cfg.t_a,
                                    cfg.t_b, u_ab,  cfg.lambda,           EigenMode::kAuto};
  double_problem.validate();
  TwoBoundaryProblem single_problem = double_problem;
  single_problem.region_a = control;
  single_problem.validate();

  JointLocalizationResult best_double = max_conditional_localization(double_problem);
  JointLocalizationResult best_single = max_conditional_localization(single_problem);
  CollapseCheck check = check_unitary_collapse(double_problem);

  StateVector screen_double = evolve(best_double.psi_star, u_ab);
  StateVector screen_single = evolve(best_single.psi_star, u_ab);

  Eigen::VectorXd density_double(g.n), density_single(g.n);
  for (int i = 0; i < g.n; ++i) {
    density_double[i] = std::norm(screen_double.amplitudes[i]);
    density_single[i] = std::norm(screen_single.amplitudes[i]);
  }

  FringeAnalysis fringes_double = analyze_fringes(g, density_double, cfg.detection_window.first,
                                                  cfg.detection_window.second);
  FringeAnalysis fringes_single = analyze_fringes(g, density_single, cfg.detection_window.first,
                                                  cfg.detection_window.second);

  Profile screen{"screen", {"x", "density_double", "density_single"}, {}};
  Profile witness{"witness", {"x", "density_double_initial", "density_single_initial"}, {}};
  for (int i = 0; i < g.n; ++i) {
    screen.rows.push_back({g.coord(i), density_double[i], density_single[i]});
    witness.rows.push_back({g.coord(i), std::norm(best_double.psi_star.amplitudes[i]),
                            std::norm(best_single.psi_star.amplitudes[i])});
  }

  // Ensemble filtered by the slit condition and the objective condition.
  SolutionEnsemble ensemble = sample_ensemble(family, cfg.t_a, cfg.ensemble_size, cfg.seed);
  Registry registry;
  registry.add(Event::at(cfg.t_a, region_constraint(g, slits, cfg.ensemble_lambda)));
  registry.add(
      Event::at(cfg.t_b, region_constraint(g, cfg.objective_region, cfg.ensemble_lambda)));
  std::vector<double> times = {cfg.t_a, 0.5 * (cfg.t_a + cfg.t_b), cfg.t_b};
  std::vector<HistoryPoint> chain = history_chain(ensemble, registry, times);
  SolutionEnsemble surviving = solution_set(ensemble, registry);

  ScenarioReport report;
  report.scenario = "two_slit";
  report.seed = cfg.seed;
  report.config = cfg.to_json();

  for (std::size_t k = 0; k < times.size(); ++k) {
    StateVector psi_t = evolve(best_double.psi_star, family->between(cfg.t_a, times[k]));
    report.series.push_back({times[k], static_cast<std::int64_t>(chain[k].alive_count),
                             degree_probability(psi_t, g, slits),
                             degree_probability(psi_t, g, cfg.objective_region)});
  }
  report.profiles = {screen, witness};
  report.ensemble_snapshot = ensemble_csv(surviving, g, {slits, cfg.objective_region});

  json fringe_json{{"maxima_positions", fringes_double.maxima_positions},
                   {"spacing_measured", fringes_double.spacing},
                   {"visibility_double", fringes_double.visibility},
                   {"visibility_single", fringes_single.visibility},
                   {"detection_window", {cfg.detection_window.first, cfg.detection_window.second}}};
  if (cfg.slit_separation > 0.0 && cfg.slit_separation > cfg.slit_width) {
    fringe_json["spacing_predicted"] =
        2.0 * std::numbers::pi * (cfg.t_b - cfg.t_a) / (cfg.mass * cfg.slit_separation);
  } else {
    fringe_json["spacing_predicted"] = nullptr;  // merged openings: no fringe model
  }

  report.results = json{
      {"slits", region_to_json(slits)},
      {"double_slit", localization_json(best_double)},
      {"single_slit", localization_json(best_single)},
      {"fringes", fringe_json},
      {"collapse_check", collapse_json(check, cfg.lambda)},
      {"ensemble",
       {{"size", cfg.ensemble_size},
        {"lambda", cfg.ensemble_lambda},
        {"alive_after_registry", surviving.alive_count()}}},
  };
  return report;
}

// ===== eprb =====

EprbConfig EprbConfig::from_json(const json& j) {
  require_config_object(j);
  EprbConfig cfg;
  check_keys(j, {"axis_alice", "axis_bob", "t_a", "t_b", "precession_axis", "alice_rate",
                 "bob_rate", "outcome_alice", "outcome_bob", "epsilon", "ensemble_size", "seed"});
  cfg.axis_alice = get_axis(j, "axis_alice", cfg.axis_alice);
  cfg.axis_bob = get_axis(j, "axis_bob", cfg.axis_bob);
  cfg.t_a = get_number(j, "t_a", cfg.t_a);
  cfg.t_b = get_number(j, "t_b", cfg.t_b);
  cfg.precession_axis = get_axis(j, "precession_axis", cfg.precession_axis);
  cfg.alice_rate = get_number(j, "alice_rate", cfg.alice_rate);
  cfg.bob_rate = get_number(j, "bob_rate", cfg.bob_rate);
  cfg.outcome_alice = get_sign(j, "outcome_alice", cfg.outcome_alice);
  cfg.outcome_bob = get_sign(j, "outcome_bob", cfg.outcome_bob);
  cfg.epsilon = get_number(j, "epsilon", cfg.epsilon);
  cfg.ensemble_size = get_count(j, "ensemble_size", cfg.ensemble_size);
  cfg.seed = get_uint(j, "seed", cfg.seed);
  if (!(cfg.t_b >= cfg.t_a)) throw ValidationError("config key 't_b' must be >= 't_a'");
  if (!(cfg.epsilon >= 0.0 && cfg.epsilon < 1.0)) {
    throw ValidationError("config key 'epsilon' must lie in [0, 1)");
  }
  return cfg;
}

json EprbConfig::to_json() const {
  return json{{"axis_alice", axis_to_json(axis_alice)},
              {"axis_bob", axis_to_json(axis_bob)},
              {"t_a", t_a},
              {"t_b", t_b},
              {"precession_axis", axis_to_json(precession_axis)},
              {"alice_rate", alice_rate},
              {"bob_rate", bob_rate},
              {"outcome_alice", outcome_alice},
              {"outcome_bob", outcome_bob},
              {"epsilon", epsilon},
              {"ensemble_size", ensemble_size},
              {"seed", seed}};
}

ScenarioReport run_eprb(const EprbConfig& cfg) {
  const std::array<double, 3> a = normalized_axis(cfg.axis_alice, "axis_alice");
  const std::array<double, 3> b = normalized_axis(cfg.axis_bob, "axis_bob");
  const std::array<double, 3> p = normalized_axis(cfg.precession_axis, "precession_axis");

  const Matrix id2 = Matrix::Identity(2, 2);
  const Matrix h_local = spin_observable(p).matrix;  // (p . sigma) / 2
  Hamiltonian h{cfg.alice_rate * kron2(h_local, id2) + cfg.bob_rate * kron2(id2, h_local)};
  auto family = std::make_shared<TimeIndependentFamily>(h);

  StateVector singlet = singlet_state();
  StateVector psi_b = evolve(singlet, family->between(cfg.t_a, cfg.t_b));

  // Measurement eigenstates and projectors along the two axes.
  auto side_state = [](const std::array<double, 3>& axis, int sign) {
    return sign > 0 ? spin_up(axis) : spin_down(axis);
  };
  const std::array<int, 2> signs{+1, -1};
  json branches = json::array();
  double correlation = 0.0;
  double same_outcome = 0.0;
  std::vector<Event> alternatives;
  const Propagator back = family->between(cfg.t_b, cfg.t_a);

  for (int s1 : signs) {
    for (int s2 : signs) {
      StateVector product = tensor(side_state(a, s1), side_state(b, s2));
      double prob = born_probability(psi_b, product);
      correlation += s1 * s2 * prob;
      if (s1 == s2) same_outcome += prob;

      Matrix joint = kron2(outer(side_state(a, s1)), outer(side_state(b, s2)));
      alternatives.push_back(Event::at(cfg.t_b, subspace_constraint(joint, cfg.epsilon)));

      json entry{{"outcome", {s1, s2}}, {"probability", prob}};
      if (prob > 1e-12) {
        StateVector conditioned{(joint * psi_b.amplitudes).normalized()};
        StateVector pulled = evolve(conditioned, back);
        Eigen::Map<const Matrix> coeff(pulled.amplitudes.data(), 2, 2);
        Eigen::JacobiSVD<Matrix> svd(coeff);
        entry["schmidt_values"] = {svd.singularValues()[0], svd.singularValues()[1]};
        entry["schmidt_number"] =
            svd.singularValues()[1] > 1e-9 * std::max(1.0, svd.singularValues()[0]) ? 2 : 1;
      } else {
        entry["schmidt_values"] = nullptr;
        entry["schmidt_number"] = nullptr;
      }
      branches.push_back(entry);
    }
  }

  // Ensemble branching over the four joint outcomes at t_b.
  SolutionEnsemble ensemble = sample_ensemble(family, cfg.t_a, cfg.ensemble_size, cfg.seed);
  auto branched = branch(ensemble, Registry{}, alternatives);
  for (std::size_t k = 0; k < branched.size(); ++k) {
    branches[k]["alive"] = branched[k].second.alive_count();
  }

  // Highlighted branch: the configured outcome pair.
  std::size_t pick = (cfg.outcome_alice > 0 ? 0 : 2) + (cfg.outcome_bob > 0 ? 0 : 1);
  Registry registry = branched[pick].first;
  SolutionEnsemble surviving = branched[pick].second;

  const Matrix p_alice = kron2(outer(spin_up(a)), id2);
  const Matrix p_joint = kron2(outer(side_state(a, cfg.outcome_alice)),
                               outer(side_state(b, cfg.outcome_bob)));

  ScenarioReport report;
  report.scenario = "eprb";
  report.seed = cfg.seed;
  report.config = cfg.to_json();

  std::vector<double> times = {cfg.t_a, 0.5 * (cfg.t_a + cfg.t_b), cfg.t_b};
  if (cfg.t_b == cfg.t_a) times = {cfg.t_a};
  std::vector<HistoryPoint> chain = history_chain(ensemble, registry, times);
  for (std::size_t k = 0; k < times.size(); ++k) {
    StateVector psi_t = evolve(singlet, family->between(cfg.t_a, times[k]));
    report.series.push_back({times[k], static_cast<std::int64_t>(chain[k].alive_count),
                             weight(psi_t, p_alice), weight(psi_t, p_joint)});
  }
  report.ensemble_snapshot = ensemble_csv(surviving, {p_alice, p_joint});

  report.results = json{
      {"correlation", correlation},
      {"correlation_singlet", -dot(a, b)},
      {"same_outcome_probability", same_outcome},
      {"branches", branches},
      {"highlighted_outcome", {cfg.outcome_alice, cfg.outcome_bob}},
      {"ensemble",
       {{"size", cfg.ensemble_size},
        {"epsilon", cfg.epsilon},
        {"alive_highlighted_branch", surviving.alive_count()}}},
  };
  return report;
}

// ===== successive_spins =====

SpinsConfig SpinsConfig::from_json(const json& j) {
  require_config_object(j);
  SpinsConfig cfg;
  check_keys(j, {"axis_first", "axis_second", "epsilon", "theta_max", "t_a", "t_b",
                 "disturbance_axis", "ensemble_size", "seed"});
  cfg.axis_first = get_axis(j, "axis_first", cfg.axis_first);
  cfg.axis_second = get_axis(j, "axis_second", cfg.axis_second);
  cfg.epsilon = get_number(j, "epsilon", cfg.epsilon);
  cfg.theta_max = get_number(j, "theta_max", cfg.theta_max);
  cfg.t_a = get_number(j, "t_a", cfg.t_a);
  cfg.t_b = get_number(j, "t_b", cfg.t_b);
  if (find_key(j, "disturbance_axis")) {
    cfg.disturbance_axis = get_axis(j, "disturbance_axis", {0, 0, 0});
  }
  cfg.ensemble_size = get_count(j, "ensemble_size", cfg.ensemble_size);
  cfg.seed = get_uint(j, "seed", cfg.seed);
  if (!(cfg.epsilon >= 0.0 && cfg.epsilon < 1.0)) {
    throw ValidationError("config key 'epsilon' must lie in [0, 1)");
  }
  if (cfg.theta_max < 0.0) throw ValidationError("config key 'theta_max' must be >= 0");
  if (!(cfg.t_b > cfg.t_a)) throw ValidationError("config key 't_b' must exceed 't_a'");
  return cfg;
}

json SpinsConfig::to_json() const {
  return json{{"axis_first", axis_to_json(axis_first)},
              {"axis_second", axis_to_json(axis_second)},
              {"epsilon", epsilon},
              {"theta_max", theta_max},
              {"t_a", t_a},
              {"t_b", t_b},
              {"disturbance_axis", disturbance_axis ? axis_to_json(*disturbance_axis) : json()},
              {"ensemble_size", ensemble_size},
              {"seed", seed}};
}

ScenarioReport run_successive_spins(const SpinsConfig& cfg) {
  const std::array<double, 3> n1 = normalized_axis(cfg.axis_first, "axis_first");
  const std::array<double, 3> n2 = normalized_axis(cfg.axis_second, "axis_second");
  const double alpha = std::acos(std::clamp(dot(n1, n2), -1.0, 1.0));

  // Probability that the second test succeeds immediately after the first.
  const double prob_second = 0.5 * (1.0 + dot(n1, n2));

  // Minimal rotation: zero when the post-first state is already within the
  // second event's proximity set, otherwise the full angle between the axes.
  const bool already_within = prob_second >= 1.0 - cfg.epsilon - kEvalSlack;
  const double minimal_angle = already_within ? 0.0 : alpha;
  const double entry_angle =
      std::max(0.0, alpha - 2.0 * std::acos(std::sqrt(1.0 - cfg.epsilon)));
  const bool feasible = minimal_angle <= cfg.theta_max + 1e-12;
  const double theta_applied = std::min(minimal_angle, cfg.theta_max);

  // Rotation axis: perpendicular to both spin axes; for (anti)parallel axes
  // any direction perpendicular to the first works.
  std::array<double, 3> axis;
  if (cfg.disturbance_axis) {
    axis = normalized_axis(*cfg.disturbance_axis, "disturbance_axis");
  } else {
    std::array<double, 3> c = cross(n1, n2);
    double norm = std::sqrt(dot(c, c));
    if (norm > 1e-12) {
      axis = {c[0] / norm, c[1] / norm, c[2] / norm};
    } else {
      std::array<double, 3> seed_vec =
          std::abs(n1[0]) < 0.9 ? std::array<double, 3>{1, 0, 0} : std::array<double, 3>{0, 1, 0};
      std::array<double, 3> perp = cross(n1, seed_vec);
      double pn = std::sqrt(dot(perp, perp));
      axis = {perp[0] / pn, perp[1] / pn, perp[2] / pn};
    }
  }

  // Free before t_a, rotating at constant rate on (t_a, t_b), free after t_b.
  const double dt = cfg.t_b - cfg.t_a;
  const double pad = std::max(1.0, dt);
  Hamiltonian h_zero{Matrix::Zero(2, 2)};
  Hamiltonian h_rot{(theta_applied / dt) * spin_observable(axis).matrix};
  auto family = std::make_shared<PiecewiseConstantFamily>(
      cfg.t_a - pad,
      std::vector<std::pair<Hamiltonian, double>>{{h_zero, pad}, {h_rot, dt}, {h_zero, pad}});

  // Witness: the up state of the first axis at t_a, carried through the
  // disturbance.
  StateVector up1 = spin_up(n1);
  StateVector up1_rotated = evolve(up1, family->between(cfg.t_a, cfg.t_b));
  const double weight_after = born_probability(up1_rotated, spin_up(n2));
  const bool achieved = weight_after >= 1.0 - cfg.epsilon - 1e-9;

  // Best joint weights with and without the disturbance.
  const Matrix p1 = outer(spin_up(n1));
  const Matrix p2 = outer(spin_up(n2));
  const Matrix u_rot = family->between(cfg.t_a, cfg.t_b).to_dense();
  QubitMaxMin no_disturbance = max_min_qubit(p1, p2);
  QubitMaxMin with_disturbance = max_min_qubit(p1, u_rot.adjoint() * p2 * u_rot);
  const bool joint_without = no_disturbance.value >= 1.0 - cfg.epsilon - 1e-12;

  // Ensemble filtered by both spin events under the disturbed dynamics.
  Registry registry;
  registry.add(Event::at(cfg.t_a, eigenspace_constraint(spin_observable(n1), 0.5, cfg.epsilon)));
  registry.add(Event::at(cfg.t_b, eigenspace_constraint(spin_observable(n2), 0.5, cfg.epsilon)));
  SolutionEnsemble ensemble =
      sample_ensemble(family, cfg.t_a - pad, cfg.ensemble_size, cfg.seed);
  std::vector<double> times = {cfg.t_a - pad, cfg.t_a, 0.5 * (cfg.t_a + cfg.t_b), cfg.t_b,
                               cfg.t_b + pad};
  std::vector<HistoryPoint> chain = history_chain(ensemble, registry, times);
  SolutionEnsemble surviving = solution_set(ensemble, registry);

  ScenarioReport report;
  report.scenario = "successive_spins";
  report.seed = cfg.seed;
  report.config = cfg.to_json();
  report.config["disturbance_axis"] = axis_to_json(axis);

  StateVector ref0 = evolve(up1, family->between(cfg.t_a, cfg.t_a - pad));
  for (std::size_t k = 0; k < times.size(); ++k) {
    StateVector ref_t = evolve(ref0, family->between(cfg.t_a - pad, times[k]));
    report.series.push_back({times[k], static_cast<std::int64_t>(chain[k].alive_count),
                             weight(ref_t, p1), weight(ref_t, p2)});
  }
  report.ensemble_snapshot = ensemble_csv(surviving, {p1, p2});

  report.results = json{
      {"bloch_angle", alpha},
      {"prob_second_given_first", prob_second},
      {"minimal_angle", minimal_angle},
      {"proximity_entry_angle", entry_angle},
      {"theta_max", cfg.theta_max},
      {"theta_applied", theta_applied},
      {"feasible", feasible},
      {"achieved_proximity", achieved},
      {"weight_after_disturbance", weight_after},
      {"max_min_no_disturbance", no_disturbance.value},
      {"max_min_with_disturbance", with_disturbance.value},
      {"joint_feasible_without_disturbance", joint_without},
      {"ensemble",
       {{"size", cfg.ensemble_size},
        {"epsilon", cfg.epsilon},
        {"alive_after_registry", surviving.alive_count()}}},
  };
  return report;
}

// ===== dispatch =====

std::vector<std::string> scenario_names() {
  return {"transit", "two_slit", "eprb", "successive_spins"};
}

ScenarioReport run_scenario(const std::string& name, const json& config) {
  if (name == "transit") return run_transit(TransitConfig::from_json(config));
  if (name == "two_slit") return run_two_slit(TwoSlitConfig::from_json(config));
  if (name == "eprb") return run_eprb(EprbConfig::from_json(config));
  if (name == "successive_spins") {
    return run_successive_spins(SpinsConfig::from_json(config));
  }
  throw ValidationError("unknown scenario '" + name +
                        "' (expected transit, two_slit, eprb, or successive_spins)");
}

}  // namespace uhe
