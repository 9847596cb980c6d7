#pragma once

#include <Eigen/Dense>
#include <complex>
#include <vector>

#include "ionsim/crystal.hpp"

namespace ionsim {

// Bichromatic force parameters: beatnotes at omega_0 +/- mu drive a
// spin-dependent force at mu.
struct Drive {
  double mu = 0.0;          // rad/s
  Eigen::VectorXd rabi;     // per-ion carrier Rabi frequency, rad/s
  double duration = 0.0;    // s

  static Drive uniform(double mu, double omega, int n_ions, double duration);
  void validate(int n_ions) const;
};

// Per-mode mean thermal occupation.
struct MotionalState {
  Eigen::VectorXd nbar;

  static MotionalState ground(int n_modes) { return {Eigen::VectorXd::Zero(n_modes)}; }
  static MotionalState uniform(double n, int n_modes) {
    return {Eigen::VectorXd::Constant(n_modes, n)};
  }
};

// Reduced spin state after the bichromatic drive, with the phase-space and
// spin-spin bookkeeping that produced it.
struct SpinMotionEvolution {
  Eigen::MatrixXcd alpha;      // alpha(i, m) at duration
  Eigen::MatrixXd chi;         // chi(i, j) at duration, symmetric, zero diagonal
  Eigen::MatrixXcd rho_spin;   // 2^N x 2^N, sigma_z product basis (bit i set = ion i up)
  Eigen::VectorXd populations; // P_n, n = 0..N
};

struct CouplingMatrix {
  Eigen::MatrixXd J;  // rad/s, symmetric, zero diagonal
};

// Detunings closer than this to a mode are rejected as resonant.
inline constexpr double resonance_guard = constants::two_pi * 1.0;  // rad/s

// Phase-space displacement of mode m driven through ion i, evaluated at tau.
std::complex<double> displacement_alpha(const IonCrystal& crystal, const Drive& drive,
                                        int ion, int mode, double tau);

// Accumulated spin-spin phase between ions i and j at tau (all four
// oscillatory/secular terms, summed over modes).
double chi_coupling(const IonCrystal& crystal, const Drive& drive, int i, int j, double tau);

// Secular Ising couplings J(i, j) = -Omega_i Omega_j sum_m eta_im eta_jm omega_m / (mu^2 - omega_m^2).
CouplingMatrix ising_matrix(const IonCrystal& crystal, const Drive& drive);

// Exact reduced-spin propagation over a thermal motional state. The initial
// spin state defaults to |down...down>.
SpinMotionEvolution evolve(const IonCrystal& crystal, const Drive& drive,
                           const MotionalState& motion,
                           const Eigen::MatrixXcd& initial_rho = Eigen::MatrixXcd());

// Global carrier pulse exp[-i (angle/2)(cos phi sigma_x + sin phi sigma_y)] on every ion.
Eigen::MatrixXcd carrier_rotation(const Eigen::MatrixXcd& rho_spin, double angle, double phase);

// Populations P_n (probability of n ions up) from a sigma_z-basis density matrix.
Eigen::VectorXd populations_from_rho(const Eigen::MatrixXcd& rho_spin);

// Parity sum_n (-1)^n P'_n after a pi/2 analysis pulse at each phase.
std::vector<double> parity_scan(const Eigen::MatrixXcd& rho_after_gate,
                                const std::vector<double>& phases);

// Entanglement witness (populations + coherence) / 2.
double fidelity_bound(double p0_plus_pN, double parity_contrast);

} // namespace ionsim
