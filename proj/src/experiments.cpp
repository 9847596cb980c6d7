#include "ionsim/experiments.hpp"

#include <algorithm>
#include <cmath>
#include <string>

#include "ionsim/fit.hpp"
#include "ionsim/parallel.hpp"

namespace ionsim {

CalibratedGate calibrate_gate(const IonCrystal& crystal, const GateSpec& spec) {
  const int n = crystal.n_ions();
  if (n < 2) throw calibration_error("gate calibration needs at least two ions");
  if (spec.mode_a < 0 || spec.mode_a >= crystal.n_modes() ||
      (spec.rule == GateSpec::DetuningRule::bisect &&
       (spec.mode_b < 0 || spec.mode_b >= crystal.n_modes())))
    throw calibration_error("detuning rule names a mode outside the spectrum");

  const double ref = crystal.mode_frequencies(spec.mode_a);
  double mu;
  if (spec.rule == GateSpec::DetuningRule::bisect)
    mu = 0.5 * (ref + crystal.mode_frequencies(spec.mode_b));
  else
    mu = ref + spec.offset;
  if (std::abs(ref - mu) < resonance_guard)
    throw calibration_error("detuning rule places mu on the reference mode");
  const double tau_g = constants::two_pi / std::abs(ref - mu);

  CalibratedGate gate;
  gate.mu = mu;
  gate.tau_g = tau_g;

  if (spec.chi_target == 0.0) {
    gate.drive = Drive::uniform(mu, 0.0, n, tau_g);
    return gate;
  }

  // chi scales as Omega^2 exactly, so the root of chi(Omega) - chi_target on
  // Omega^2 is a single division off the unit-Rabi coupling.
  const Drive unit = Drive::uniform(mu, 1.0, n, tau_g);
  double chi_unit = 0.0;
  int n_pairs = 0;
  for (int i = 0; i < n; ++i)
    for (int j = i + 1; j < n; ++j) {
      chi_unit += chi_coupling(crystal, unit, i, j, tau_g);
      ++n_pairs;
    }
  chi_unit /= n_pairs;
  if (std::abs(chi_unit) < 1e-30)
    throw calibration_error("no Rabi frequency reaches the target coupling at this detuning");

  // Only the coupling magnitude is controllable; the sign is fixed by the
  // detuning branch.
  const double target = std::copysign(std::abs(spec.chi_target), chi_unit);
  const double omega = std::sqrt(target / chi_unit);

  gate.omega = omega;
  gate.drive = Drive::uniform(mu, omega, n, tau_g);

  double mean = 0.0;
  Eigen::MatrixXd chi(n, n);
  for (int i = 0; i < n; ++i)
    for (int j = i + 1; j < n; ++j) {
      chi(i, j) = chi_coupling(crystal, gate.drive, i, j, tau_g);
      mean += chi(i, j);
    }
  mean /= n_pairs;
  gate.chi_achieved = mean;
  for (int i = 0; i < n; ++i)
    for (int j = i + 1; j < n; ++j)
      gate.chi_spread = std::max(gate.chi_spread, std::abs(chi(i, j) - mean));
  return gate;
}

void ScanResult::validate() const {
  for (int k = 0; k + 1 < grid.size(); ++k)
    if (grid(k + 1) <= grid(k)) throw error("scan grid must be strictly increasing");
  if (!values.allFinite()) throw error("scan produced non-finite output");
}

ScanResult time_scan(const IonCrystal& crystal, const Drive& drive,
                     const Eigen::VectorXd& tau_grid, const MotionalState& motion) {
  const int n = crystal.n_ions();
  ScanResult scan;
  scan.x_name = "tau";
  scan.x_unit = "s";
  scan.grid = tau_grid;
  for (int k = 0; k <= n; ++k) {
    scan.column_names.push_back("P_" + std::to_string(k));
    scan.column_units.push_back("1");
  }
  scan.values.resize(tau_grid.size(), n + 1);

  const int n_points = static_cast<int>(tau_grid.size());
#ifdef _OPENMP
#pragma omp parallel for schedule(dynamic) num_threads(scan_threads()) if (n_points > 1)
#endif
  for (int k = 0; k < n_points; ++k) {
    Drive point = drive;
    point.duration = tau_grid(k);
    const SpinMotionEvolution result = evolve(crystal, point, motion);
    scan.values.row(k) = result.populations.transpose();
  }
  scan.validate();
  return scan;
}

namespace {

double ghz_overlap(const Eigen::MatrixXcd& rho) {
  const int dim = static_cast<int>(rho.rows());
  // (|up...up> + e^{i theta} |down...down>) / sqrt(2), maximized over theta
  return 0.5 * std::real(rho(0, 0) + rho(dim - 1, dim - 1)) + std::abs(rho(0, dim - 1));
}

} // namespace

GhzResult ghz_prepare(const IonCrystal& crystal, const std::optional<GateSpec>& spec,
                      const std::optional<Drive>& drive) {
  if (crystal.n_ions() != 3) throw error("GHZ preparation is a three-ion experiment");

  GhzResult result;
  Drive gate_drive;
  if (drive) {
    gate_drive = *drive;
  } else {
    GateSpec gs;
    if (spec) {
      gs = *spec;
    } else {
      gs.rule = GateSpec::DetuningRule::offset;
      gs.mode_a = 0;
      gs.offset = constants::two_pi * 9.4e3;
    }
    result.gate = calibrate_gate(crystal, gs);
    gate_drive = result.gate.drive;
  }

  const SpinMotionEvolution evo =
      evolve(crystal, gate_drive, MotionalState::ground(crystal.n_modes()));

  // Coarse phase grid, then golden-section refinement around the best point.
  auto overlap_at = [&](double phi) {
    return ghz_overlap(carrier_rotation(evo.rho_spin, constants::pi / 2.0, phi));
  };
  const int coarse = 96;
  double best_phi = 0.0, best = -1.0;
  for (int k = 0; k < coarse; ++k) {
    const double phi = constants::two_pi * k / coarse;
    const double value = overlap_at(phi);
    if (value > best) {
      best = value;
      best_phi = phi;
    }
  }
  double lo = best_phi - constants::two_pi / coarse;
  double hi = best_phi + constants::two_pi / coarse;
  const double gr = 0.5 * (std::sqrt(5.0) - 1.0);
  double x1 = hi - gr * (hi - lo), x2 = lo + gr * (hi - lo);
  double f1 = overlap_at(x1), f2 = overlap_at(x2);
  for (int it = 0; it < 60; ++it) {
    if (f1 < f2) {
      lo = x1;
      x1 = x2;
      f1 = f2;
      x2 = lo + gr * (hi - lo);
      f2 = overlap_at(x2);
    } else {
      hi = x2;
      x2 = x1;
      f2 = f1;
      x1 = hi - gr * (hi - lo);
      f1 = overlap_at(x1);
    }
  }
  result.rotation_phase = 0.5 * (lo + hi);
  result.rho = carrier_rotation(evo.rho_spin, constants::pi / 2.0, result.rotation_phase);
  result.overlap = ghz_overlap(result.rho);
  return result;
}

ScanResult detuning_scan_J(const IonCrystal& crystal, double omega_rabi,
                           const Eigen::VectorXd& mu_grid) {
  const int n = crystal.n_ions();
  std::vector<double> kept;
  for (int k = 0; k < mu_grid.size(); ++k) {
    bool guarded = false;
    for (int m = 0; m < crystal.n_modes(); ++m)
      if (std::abs(mu_grid(k) - crystal.mode_frequencies(m)) < scan_guard_band) guarded = true;
    if (!guarded) kept.push_back(mu_grid(k));
  }
  if (kept.empty()) throw error("every scan point falls inside a mode guard band");

  ScanResult scan;
  scan.x_name = "mu";
  scan.x_unit = "Hz";
  scan.grid = Eigen::Map<Eigen::VectorXd>(kept.data(), kept.size()) / constants::two_pi;
  for (int i = 0; i < n; ++i)
    for (int j = i + 1; j < n; ++j) {
      scan.column_names.push_back("J_" + std::to_string(i + 1) + "_" + std::to_string(j + 1));
      scan.column_units.push_back("Hz");
    }
  scan.values.resize(kept.size(), scan.column_names.size());
  for (std::size_t k = 0; k < kept.size(); ++k) {
    const Drive drive = Drive::uniform(kept[k], omega_rabi, n, 0.0);
    const CouplingMatrix coupling = ising_matrix(crystal, drive);
    int col = 0;
    for (int i = 0; i < n; ++i)
      for (int j = i + 1; j < n; ++j)
        scan.values(k, col++) = coupling.J(i, j) / constants::two_pi;
  }
  scan.validate();
  return scan;
}

JFit extract_J_from_timeseries(const Eigen::VectorXd& times, const Eigen::VectorXd& p0,
                               int n_ions) {
  if (times.size() != p0.size() || times.size() < 8)
    throw fit_error("time series too short to fit");
  const double spread = p0.maxCoeff() - p0.minCoeff();
  if (spread < 1e-3) throw fit_error("flat signal: no spin-spin oscillation to fit");

  const double span = times(times.size() - 1) - times(0);
  const double decay_seed = 5.0 * span;
  const double f_peak = dominant_frequency(times, p0);
  const double dt = span / (times.size() - 1);

  JFit fit;
  if (n_ions == 2) {
    // P_0 = offset + amplitude cos(2 J tau) exp(-tau / T)
    ModelFn model = [](const Eigen::VectorXd& p, double tau) {
      return p(0) + p(1) * std::cos(2.0 * p(2) * tau) * std::exp(-tau / p(3));
    };
    Eigen::VectorXd seed(4);
    seed << p0.mean(), 0.5 * spread, constants::pi * f_peak, decay_seed;
    const FitResult res = levenberg_marquardt(model, times, p0, seed);
    fit.j_nn = std::abs(res.params(2));
    fit.decay = res.params(3);
    fit.rms = res.rms;
    fit.converged = res.converged;
    if (fit.j_nn / constants::pi > 0.45 / dt)
      throw fit_error("fitted frequency near Nyquist: time grid undersamples the coupling");
  } else if (n_ions == 3) {
    // P_0 = offset + s exp(-tau/T) [cos(4 Jn tau)/8 + cos(2 (Jn+Jx) tau)/4
    //                               + cos(2 (Jn-Jx) tau)/4]
    ModelFn model = [](const Eigen::VectorXd& p, double tau) {
      const double jn = p(2), jx = p(3);
      const double osc = std::cos(4.0 * jn * tau) / 8.0 +
                         std::cos(2.0 * (jn + jx) * tau) / 4.0 +
                         std::cos(2.0 * (jn - jx) * tau) / 4.0;
      return p(0) + p(1) * std::exp(-tau / p(4)) * osc;
    };
    FitResult best;
    double best_rms = 1e300;
    for (const double jn_seed : {constants::pi * f_peak, 0.5 * constants::pi * f_peak}) {
      for (const double ratio : {0.05, 0.125, 0.3}) {
        Eigen::VectorXd seed(5);
        seed << p0.mean(), spread / 0.625, jn_seed, ratio * jn_seed, decay_seed;
        const FitResult res = levenberg_marquardt(model, times, p0, seed);
        if (res.rms < best_rms) {
          best_rms = res.rms;
          best = res;
        }
      }
    }
    // The two strong lines 2(Jn +- Jx) are invariant under swapping the pair;
    // only the weak 4 Jn line breaks the tie. Refit from the swapped optimum.
    {
      Eigen::VectorXd swapped = best.params;
      std::swap(swapped(2), swapped(3));
      const FitResult res = levenberg_marquardt(model, times, p0, swapped);
      if (res.rms < best_rms) {
        best_rms = res.rms;
        best = res;
      }
    }
    fit.j_nn = std::abs(best.params(2));
    fit.j_nnn = std::abs(best.params(3));
    fit.decay = best.params(4);
    fit.rms = best.rms;
    fit.converged = best.converged;
  } else {
    throw fit_error("time-series J extraction supports two or three ions");
  }
  return fit;
}

ParityResult parity_experiment(const IonCrystal& crystal, const Drive& drive,
                               const Eigen::VectorXd& phase_grid, const MotionalState& motion,
                               bool ghz_prerotation) {
  const int n = crystal.n_ions();
  Eigen::MatrixXcd rho;
  ParityResult result;
  if (ghz_prerotation) {
    const GhzResult ghz = ghz_prepare(crystal, std::nullopt, drive);
    rho = ghz.rho;
    result.prerotation_phase = ghz.rotation_phase;
  } else {
    rho = evolve(crystal, drive, motion).rho_spin;
  }

  const Eigen::VectorXd pops = populations_from_rho(rho);
  result.p0_plus_pN = pops(0) + pops(n);

  std::vector<double> phases(phase_grid.data(), phase_grid.data() + phase_grid.size());
  const std::vector<double> parities = parity_scan(rho, phases);

  result.scan.x_name = "phi";
  result.scan.x_unit = "rad";
  result.scan.grid = phase_grid;
  result.scan.column_names = {"parity"};
  result.scan.column_units = {"1"};
  result.scan.values =
      Eigen::Map<const Eigen::VectorXd>(parities.data(), parities.size());
  result.scan.validate();

  const Eigen::Vector3d sinfit =
      sinusoid_fit(phase_grid, result.scan.values.col(0), static_cast<double>(n));
  result.contrast = sinfit(0);
  result.fit_phase = sinfit(1);
  result.fidelity = fidelity_bound(result.p0_plus_pN, result.contrast);
  return result;
}

} // namespace ionsim
