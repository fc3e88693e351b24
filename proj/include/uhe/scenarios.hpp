#pragma once

#include <array>
#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "uhe/hilbert.hpp"
#include "uhe/localization.hpp"
#include "uhe/report.hpp"

namespace uhe {

// ---------------------------------------------------------------------------
// transit: free Gaussian packet leaving region A and arriving in region B,
// plus the joint-localization solvers and the feasibility check for the same
// two-boundary data, plus a random-ensemble nesting series.
// ---------------------------------------------------------------------------

struct TransitConfig {
  Grid1D grid{512, -16.0, 16.0};
  double mass = 1.0;
  double t_a = 0.0;
  double t_b = 1.0;
  Region1D region_a{{{-2.0, 2.0}}};
  Region1D region_b{{{3.0, 7.0}}};
  double lambda = 0.9;          // feasibility threshold for the collapse check
  double sigma0 = 1.0;          // initial packet width
  std::optional<double> packet_center;  // default: midpoint of region A
  std::optional<double> boost;          // default: reaches midpoint of B at t_b
  std::vector<double> sample_times;     // default: 5 evenly spaced in [t_a, t_b]
  std::size_t ensemble_size = 128;
  double ensemble_lambda = 0.1;         // threshold used by the ensemble events
  std::uint64_t seed = 1;

  static TransitConfig from_json(const nlohmann::json& j);
  nlohmann::json to_json() const;  // fully resolved (optionals filled in)
};

ScenarioReport run_transit(const TransitConfig& cfg);

// ---------------------------------------------------------------------------
// two_slit: conditional localization from a two-interval slit region to a
// wide objective region produces an interference pattern on the screen; a
// single merged slit of the same total width is run as the control.
// ---------------------------------------------------------------------------

struct TwoSlitConfig {
  Grid1D grid{2048, -64.0, 64.0};
  double mass = 1.0;
  double t_a = 0.0;
  double t_b = 2.0;
  double slit_width = 0.5;       // width of each slit
  double slit_separation = 2.0;  // center-to-center distance
  Region1D objective_region{{{-16.0, 16.0}}};
  std::pair<double, double> detection_window{-15.0, 15.0};
  double lambda = 0.5;           // feasibility threshold for the collapse check
  std::size_t ensemble_size = 64;
  double ensemble_lambda = 0.01;
  std::uint64_t seed = 1;

  static TwoSlitConfig from_json(const nlohmann::json& j);
  nlohmann::json to_json() const;
};

ScenarioReport run_two_slit(const TwoSlitConfig& cfg);

// ---------------------------------------------------------------------------
// eprb: singlet pair measured along two axes; outcome statistics, the
// correlation E(a,b), branch ensembles per joint outcome, and the Schmidt
// structure of the conditioned states pulled back through local propagators.
// ---------------------------------------------------------------------------

struct EprbConfig {
  std::array<double, 3> axis_alice{0.0, 0.0, 1.0};
  std::array<double, 3> axis_bob{0.0, 0.0, 1.0};
  double t_a = 0.0;  // preparation time of the singlet
  double t_b = 1.0;  // measurement time
  // Local precession Hamiltonians rate * (axis . sigma) / 2 on each side.
  std::array<double, 3> precession_axis{0.0, 0.0, 1.0};
  double alice_rate = 0.0;
  double bob_rate = 0.0;
  int outcome_alice = +1;  // conditioned branch highlighted in the report
  int outcome_bob = -1;
  double epsilon = 0.45;   // proximity tolerance for the ensemble events
  std::size_t ensemble_size = 256;
  std::uint64_t seed = 1;

  static EprbConfig from_json(const nlohmann::json& j);
  nlohmann::json to_json() const;
};

ScenarioReport run_eprb(const EprbConfig& cfg);

// ---------------------------------------------------------------------------
// successive_spins: spin prepared along one axis, later tested along another;
// the minimal intermediate rotation aligning the two outcomes, capped by
// theta_max, decides whether both events can hold in one history.
// ---------------------------------------------------------------------------

struct SpinsConfig {
  std::array<double, 3> axis_first{1.0, 0.0, 0.0};
  std::array<double, 3> axis_second{0.0, 0.0, 1.0};
  double epsilon = 0.01;   // proximity tolerance of the second event
  double theta_max = 1.5707963267948966;  // largest rotation the disturbance may apply
  double t_a = 0.0;        // first event
  double t_b = 1.0;        // second event; disturbance acts on (t_a, t_b)
  std::optional<std::array<double, 3>> disturbance_axis;  // default: first x second
  std::size_t ensemble_size = 256;
  std::uint64_t seed = 1;

  static SpinsConfig from_json(const nlohmann::json& j);
  nlohmann::json to_json() const;
};

ScenarioReport run_successive_spins(const SpinsConfig& cfg);

// ---------------------------------------------------------------------------
// Dispatch by name ("transit", "two_slit", "eprb", "successive_spins").
// Unknown names and malformed configs raise ValidationError naming the
// offending key; `config` may be null to run the scenario's defaults.
// ---------------------------------------------------------------------------

std::vector<std::string> scenario_names();
ScenarioReport run_scenario(const std::string& name, const nlohmann::json& config);

}  // namespace uhe
