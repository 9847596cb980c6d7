#include "ionsim/runner.hpp"

#include <cmath>
#include <filesystem>
#include <fstream>

#include <json.hpp>

#include "ionsim/csv.hpp"
#include "ionsim/fit.hpp"

namespace ionsim {

namespace {

using nlohmann::json;

json crystal_json(const IonCrystal& crystal) {
  json out;
  out["n_ions"] = crystal.n_ions();
  out["anisotropy"] = crystal.trap.anisotropy();
  out["scaled_positions"] = std::vector<double>(
      crystal.scaled_positions.data(),
      crystal.scaled_positions.data() + crystal.scaled_positions.size());
  std::vector<double> freqs_hz;
  for (int m = 0; m < crystal.n_modes(); ++m)
    freqs_hz.push_back(crystal.mode_frequencies(m) / constants::two_pi);
  out["mode_frequencies_hz"] = freqs_hz;
  std::vector<std::vector<double>> eta, modes;
  for (int i = 0; i < crystal.n_ions(); ++i) {
    std::vector<double> eta_row, mode_row;
    for (int m = 0; m < crystal.n_modes(); ++m) {
      eta_row.push_back(crystal.lamb_dicke(i, m));
      mode_row.push_back(crystal.mode_matrix(i, m));
    }
    eta.push_back(eta_row);
    modes.push_back(mode_row);
  }
  out["lamb_dicke"] = eta;
  out["mode_matrix"] = modes;
  return out;
}

json config_echo(const RunConfig& cfg) {
  json echo;
  for (const auto& [name, body] : cfg.sections) {
    json section;
    for (const auto& [key, value] : body) section[key] = value;
    echo[name] = section;
  }
  return echo;
}

void log_scalars(std::ostream& log, const json& results) {
  for (const auto& [key, value] : results.items()) {
    if (value.is_number())
      log << key << " = " << value.dump() << "\n";
    else if (value.is_object())
      for (const auto& [inner_key, inner] : value.items())
        if (inner.is_number()) log << key << "." << inner_key << " = " << inner.dump() << "\n";
  }
}

struct ResolvedDrive {
  Drive drive;
  double tau_g = 0.0;  // 0 when no rule fixed a gate time
  CalibratedGate gate;
  bool calibrated = false;
};

ResolvedDrive resolve_drive(const RunConfig& cfg, const IonCrystal& crystal) {
  ResolvedDrive out;
  if (cfg.rule) {
    GateSpec spec = *cfg.rule;
    spec.chi_target = cfg.chi_target;
    if (cfg.calibrate_rabi) {
      out.gate = calibrate_gate(crystal, spec);
      out.drive = out.gate.drive;
      out.tau_g = out.gate.tau_g;
      out.calibrated = true;
    } else {
      const double ref = crystal.mode_frequencies(spec.mode_a);
      double mu;
      if (spec.rule == GateSpec::DetuningRule::bisect)
        mu = 0.5 * (ref + crystal.mode_frequencies(spec.mode_b));
      else
        mu = ref + spec.offset;
      out.tau_g = constants::two_pi / std::abs(ref - mu);
      out.drive = Drive::uniform(mu, cfg.rabi, crystal.n_ions(), out.tau_g);
    }
  } else {
    out.drive = Drive::uniform(cfg.mu.value(), cfg.rabi, crystal.n_ions(), cfg.tau);
  }
  if (cfg.tau > 0.0) out.drive.duration = cfg.tau;
  return out;
}

Eigen::VectorXd linspace(double lo, double hi, int n) {
  return Eigen::VectorXd::LinSpaced(n, lo, hi);
}

} // namespace

std::string run_experiment(const RunConfig& cfg, const std::string& out_dir, std::ostream& log) {
  namespace fs = std::filesystem;
  fs::create_directories(out_dir);

  const IonCrystal crystal = build_crystal(cfg.trap);
  MotionalState motion{cfg.nbar};

  json doc;
  doc["config_echo"] = config_echo(cfg);
  doc["crystal"] = crystal_json(crystal);
  json results;
  json timings;

  const std::string& name = cfg.experiment;
  auto csv_path = [&](const std::string& stem) { return out_dir + "/" + stem + ".csv"; };

  if (name == "modes") {
    ScanResult scan;
    scan.x_name = "mode";
    scan.x_unit = "index";
    scan.grid = linspace(1.0, crystal.n_modes(), crystal.n_modes());
    scan.column_names.push_back("frequency");
    scan.column_units.push_back("Hz");
    for (int i = 0; i < crystal.n_ions(); ++i) {
      scan.column_names.push_back("b_" + std::to_string(i + 1));
      scan.column_units.push_back("1");
    }
    for (int i = 0; i < crystal.n_ions(); ++i) {
      scan.column_names.push_back("eta_" + std::to_string(i + 1));
      scan.column_units.push_back("1");
    }
    scan.values.resize(crystal.n_modes(), 1 + 2 * crystal.n_ions());
    for (int m = 0; m < crystal.n_modes(); ++m) {
      scan.values(m, 0) = crystal.mode_frequencies(m) / constants::two_pi;
      for (int i = 0; i < crystal.n_ions(); ++i) {
        scan.values(m, 1 + i) = crystal.mode_matrix(i, m);
        scan.values(m, 1 + crystal.n_ions() + i) = crystal.lamb_dicke(i, m);
      }
    }
    emit_csv(scan, csv_path("modes"));
    results["cm_frequency_hz"] = crystal.mode_frequencies(0) / constants::two_pi;
    results["lowest_frequency_hz"] =
        crystal.mode_frequencies(crystal.n_modes() - 1) / constants::two_pi;
    timings["n_modes"] = crystal.n_modes();
  } else if (name == "gate" || name == "scan-time") {
    const ResolvedDrive resolved = resolve_drive(cfg, crystal);
    const double tau_ref = resolved.tau_g > 0.0 ? resolved.tau_g : resolved.drive.duration;

    double tau_lo = cfg.tau_min, tau_hi = cfg.tau_max;
    int tau_points = cfg.tau_points;
    if (name == "gate") {
      if (tau_points < 2) tau_points = 97;
      if (tau_hi <= tau_lo) {
        tau_lo = 0.0;
        tau_hi = 2.2 * tau_ref;
      }
    }
    const ScanResult scan =
        time_scan(crystal, resolved.drive, linspace(tau_lo, tau_hi, tau_points), motion);
    emit_csv(scan, csv_path(name == "gate" ? "gate_populations" : "scan_time"));

    results["mu_hz"] = resolved.drive.mu / constants::two_pi;
    results["rabi_hz"] = resolved.drive.rabi(0) / constants::two_pi;
    results["tau_gate_s"] = tau_ref;
    timings["n_time_points"] = tau_points;

    if (resolved.calibrated) {
      results["chi_achieved"] = resolved.gate.chi_achieved;
      results["chi_spread"] = resolved.gate.chi_spread;
      const double ref_freq = crystal.mode_frequencies(cfg.rule->mode_a);
      results["eta_omega_over_detuning"] =
          std::abs(crystal.lamb_dicke(0, cfg.rule->mode_a)) * resolved.gate.omega /
          std::abs(ref_freq - resolved.drive.mu);
    }

    if (name == "gate") {
      Drive gate_drive = resolved.drive;
      gate_drive.duration = tau_ref;
      const SpinMotionEvolution evo = evolve(crystal, gate_drive, motion);
      double max_alpha = 0.0;
      for (int i = 0; i < crystal.n_ions(); ++i)
        for (int m = 0; m < crystal.n_modes(); ++m)
          max_alpha = std::max(max_alpha, std::abs(evo.alpha(i, m)));
      results["max_residual_displacement"] = max_alpha;
      results["p0"] = evo.populations(0);
      results["pN"] = evo.populations(crystal.n_ions());

      const ParityResult parity =
          parity_experiment(crystal, gate_drive,
                            linspace(0.0, constants::two_pi, cfg.phi_points), motion,
                            crystal.n_ions() == 3);
      emit_csv(parity.scan, csv_path("gate_parity"));
      results["p0_plus_pN"] = parity.p0_plus_pN;
      results["parity_contrast"] = parity.contrast;
      results["fidelity_bound"] = parity.fidelity;
      if (crystal.n_ions() == 3) {
        results["ghz_prerotation_phase"] = parity.prerotation_phase;
        const GhzResult ghz = ghz_prepare(crystal, std::nullopt, gate_drive);
        results["ghz_overlap"] = ghz.overlap;
      } else if (crystal.n_ions() == 2) {
        // Overlap with the ideal Bell target, maximized over the coherence phase.
        const Eigen::MatrixXcd& rho = evo.rho_spin;
        results["bell_fidelity"] =
            0.5 * std::real(rho(0, 0) + rho(3, 3)) + std::abs(rho(0, 3));
      }
      timings["n_phi_points"] = cfg.phi_points;
    }
  } else if (name == "scan-detuning") {
    const ScanResult scan =
        detuning_scan_J(crystal, cfg.rabi, linspace(cfg.mu_min, cfg.mu_max, cfg.mu_points));
    emit_csv(scan, csv_path("scan_detuning"));
    results["rabi_hz"] = cfg.rabi / constants::two_pi;
    results["n_points_kept"] = static_cast<int>(scan.grid.size());
    timings["n_mu_points"] = cfg.mu_points;
  } else if (name == "extract-j") {
    const auto [times, series] = read_series_csv(cfg.input_csv);
    const JFit fit = extract_J_from_timeseries(times, series, crystal.n_ions());
    results["j_nn_hz"] = fit.j_nn / constants::two_pi;
    if (crystal.n_ions() == 3) results["j_nnn_hz"] = fit.j_nnn / constants::two_pi;
    results["decay_s"] = fit.decay;
    results["fit_rms"] = fit.rms;
    results["converged"] = fit.converged;
    timings["n_series_points"] = static_cast<int>(times.size());
  } else if (name == "oracle-check") {
    const ResolvedDrive resolved = resolve_drive(cfg, crystal);
    const double tau = cfg.tau > 0.0 ? cfg.tau
                       : resolved.tau_g > 0.0 ? resolved.tau_g
                                              : resolved.drive.duration;
    Drive drive = resolved.drive;
    drive.duration = tau;

    FockSpec spec;
    spec.n_max = cfg.n_max;
    spec.dt = cfg.oracle_dt;
    spec.nbar = cfg.nbar;
    const std::vector<double> samples = {0.5 * tau, tau};
    const OracleRun oracle = integrate_hamiltonian(crystal, drive, spec, samples);

    ScanResult scan;
    scan.x_name = "tau";
    scan.x_unit = "s";
    scan.grid = Eigen::Map<const Eigen::VectorXd>(oracle.times.data(), oracle.times.size());
    scan.values.resize(oracle.times.size(), 2 * (crystal.n_ions() + 1));
    for (int k = 0; k <= crystal.n_ions(); ++k) {
      scan.column_names.push_back("P_" + std::to_string(k) + "_closed");
      scan.column_units.push_back("1");
    }
    for (int k = 0; k <= crystal.n_ions(); ++k) {
      scan.column_names.push_back("P_" + std::to_string(k) + "_fock");
      scan.column_units.push_back("1");
    }
    double max_diff = 0.0;
    for (std::size_t row = 0; row < oracle.times.size(); ++row) {
      Drive point = drive;
      point.duration = oracle.times[row];
      const SpinMotionEvolution evo = evolve(crystal, point, motion);
      for (int k = 0; k <= crystal.n_ions(); ++k) {
        scan.values(row, k) = evo.populations(k);
        scan.values(row, crystal.n_ions() + 1 + k) = oracle.populations(row, k);
        max_diff = std::max(max_diff,
                            std::abs(evo.populations(k) - oracle.populations(row, k)));
      }
    }
    emit_csv(scan, csv_path("oracle_check"));

    double max_chi_rel = 0.0;
    json chi_pairs;
    for (int i = 0; i < crystal.n_ions(); ++i)
      for (int j = i + 1; j < crystal.n_ions(); ++j) {
        const double closed = chi_coupling(crystal, drive, i, j, tau);
        const double magnus = magnus_chi(crystal, drive, i, j, tau);
        const double rel =
            std::abs(closed - magnus) / std::max(std::abs(closed), 1e-12);
        max_chi_rel = std::max(max_chi_rel, rel);
        json pair;
        pair["chi_closed"] = closed;
        pair["chi_magnus"] = magnus;
        pair["relative_difference"] = rel;
        chi_pairs[std::to_string(i + 1) + "-" + std::to_string(j + 1)] = pair;
      }
    results["max_population_difference"] = max_diff;
    results["max_chi_relative_difference"] = max_chi_rel;
    results["chi"] = chi_pairs;
    results["norm_drift"] = oracle.max_norm_drift;
    timings["fock_dimension"] = oracle.dimension;
    timings["thermal_members"] = oracle.n_members;
    timings["integrator_steps"] = oracle.n_steps;
  }

  doc["results"] = results;
  doc["timings"] = timings;
  log_scalars(log, results);

  const std::string json_path = out_dir + "/" + name + ".json";
  std::ofstream out(json_path, std::ios::binary);
  if (!out) throw error("cannot open '" + json_path + "' for writing");
  out << doc.dump(2) << "\n";
  return json_path;
}

} // namespace ionsim
