#pragma once

#include <optional>
#include <string>
#include <utility>
#include <vector>

#include "ionsim/experiments.hpp"

namespace ionsim {

// Parsed run configuration. The raw section/key layout is kept verbatim so a
// canonical config round-trips through serialize() byte-identically.
struct RunConfig {
  using Section = std::vector<std::pair<std::string, std::string>>;
  std::vector<std::pair<std::string, Section>> sections;

  TrapConfig trap;

  // drive: either an explicit beatnote or a detuning rule
  std::optional<double> mu = std::nullopt;        // rad/s
  std::optional<GateSpec> rule = std::nullopt;
  bool calibrate_rabi = false;
  double rabi = 0.0;                              // rad/s, when explicit
  double tau = 0.0;                               // s
  double chi_target = constants::pi / 4.0;

  Eigen::VectorXd nbar;                           // per mode; broadcast from scalar

  std::string experiment;
  double tau_min = 0.0, tau_max = 0.0;
  int tau_points = 0;
  double mu_min = 0.0, mu_max = 0.0;              // rad/s
  int mu_points = 0;
  int phi_points = 64;
  std::string input_csv;
  int n_max = 25;
  double oracle_dt = 0.0;                         // s; 0 = default step

  std::string serialize() const;
};

// Strict INI-style parse: unknown sections/keys, bad values, and structural
// problems raise config_error with the offending line number.
RunConfig parse_config(const std::string& text);

RunConfig load_config_file(const std::string& path);

} // namespace ionsim
