#pragma once

#include <optional>
#include <string>
#include <vector>

#include "ionsim/fock_oracle.hpp"
#include "ionsim/spinmotion.hpp"

namespace ionsim {

// How to place the beatnote and how long to drive. Mode indices are 0-based
// (0 = transverse CM). The gate time is 2 pi / |omega_ref - mu| and the Rabi
// frequency is solved so that the pair coupling reaches chi_target there.
struct GateSpec {
  enum class DetuningRule { bisect, offset };
  DetuningRule rule = DetuningRule::bisect;
  int mode_a = 0;
  int mode_b = 1;          // second mode of a bisecting rule
  double offset = 0.0;     // rad/s, for the offset rule (mu = omega_a + offset)
  double chi_target = constants::pi / 4.0;  // magnitude; sign follows the reachable branch
};

struct CalibratedGate {
  Drive drive;             // uniform Rabi, duration = tau_g
  double mu = 0.0;
  double tau_g = 0.0;
  double omega = 0.0;      // calibrated carrier Rabi frequency, rad/s
  double chi_achieved = 0.0;  // signed mean pair coupling at tau_g
  double chi_spread = 0.0;    // max |chi_ij - mean| over pairs
};

CalibratedGate calibrate_gate(const IonCrystal& crystal, const GateSpec& spec);

// One scan: strictly monotonic grid, one row of outputs per point.
struct ScanResult {
  std::string x_name;
  std::string x_unit;
  Eigen::VectorXd grid;
  std::vector<std::string> column_names;
  std::vector<std::string> column_units;
  Eigen::MatrixXd values;

  void validate() const;
};

// Populations P_0..P_N over a grid of drive durations.
ScanResult time_scan(const IonCrystal& crystal, const Drive& drive,
                     const Eigen::VectorXd& tau_grid, const MotionalState& motion);

struct GhzResult {
  CalibratedGate gate;
  Eigen::MatrixXcd rho;        // after the global pi/2 pre-rotation
  double rotation_phase = 0.0;
  double overlap = 0.0;        // with (|uuu> + |ddd>)/sqrt(2)
};

// Calibrated three-ion gate followed by the global pi/2 rotation whose phase
// maximizes GHZ overlap. A pre-built drive (e.g. for diagnostics) overrides
// the calibration.
GhzResult ghz_prepare(const IonCrystal& crystal,
                      const std::optional<GateSpec>& spec = std::nullopt,
                      const std::optional<Drive>& drive = std::nullopt);

// Guard half-width around each mode excluded from detuning scans.
inline constexpr double scan_guard_band = constants::two_pi * 2e3;  // rad/s

// Ising couplings J_ij over a detuning grid; points inside a guard band are
// dropped from the output.
ScanResult detuning_scan_J(const IonCrystal& crystal, double omega_rabi,
                           const Eigen::VectorXd& mu_grid);

struct JFit {
  double j_nn = 0.0;    // |J_12| (= |J_23| for three ions), rad/s
  double j_nnn = 0.0;   // |J_13| for three ions, rad/s
  double decay = 0.0;   // empirical exponential time constant, s
  double rms = 0.0;
  bool converged = false;
};

// Nonlinear fit of a P_0(tau) series against the secular spin-spin model.
// Coupling magnitudes only: the populations are even in J.
JFit extract_J_from_timeseries(const Eigen::VectorXd& times, const Eigen::VectorXd& p0,
                               int n_ions);

struct ParityResult {
  ScanResult scan;           // parity vs analysis phase
  double contrast = 0.0;
  double fit_phase = 0.0;
  double p0_plus_pN = 0.0;
  double fidelity = 0.0;     // (populations + contrast) / 2
  double prerotation_phase = 0.0;
};

// Gate, optional GHZ pre-rotation, then a parity scan with a sinusoidal fit
// at frequency N and the entanglement-fidelity bound.
ParityResult parity_experiment(const IonCrystal& crystal, const Drive& drive,
                               const Eigen::VectorXd& phase_grid, const MotionalState& motion,
                               bool ghz_prerotation = false);

} // namespace ionsim
