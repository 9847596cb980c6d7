#pragma once

#include <Eigen/Dense>
#include <utility>

#include "ionsim/constants.hpp"
#include "ionsim/errors.hpp"

namespace ionsim {

// Trap and Raman-beam parameters. All frequencies are stored as angular
// frequencies (rad/s); use from_hz() to build one from the cyclic (Hz)
// values that configs and data sheets quote.
struct TrapConfig {
  int n_ions = 2;
  double omega_z = 0.0;  // axial CM, rad/s
  double omega_x = 0.0;  // transverse CM, rad/s
  double ion_mass = 171.0 * constants::atomic_mass_unit;  // kg
  double raman_wavelength = 369.75e-9;                    // m
  double wavevector_geometry = 1.4142135623730951;        // delta_k = g * 2 pi / lambda

  static TrapConfig from_hz(int n_ions, double f_z_hz, double f_x_hz);

  double delta_k() const { return wavevector_geometry * constants::two_pi / raman_wavelength; }
  double anisotropy() const { return omega_z / omega_x; }

  // Throws on nonphysical parameters or a chain past the zigzag threshold
  // (checked exactly for n <= 3, by the mode spectrum otherwise).
  void validate() const;
};

// Equilibrium structure and transverse mode data for a linear chain.
// Mode index 0 is the transverse CM (highest frequency).
struct IonCrystal {
  TrapConfig trap;
  Eigen::VectorXd scaled_positions;  // units of (e^2 / (4 pi eps0 M omega_z^2))^(1/3)
  Eigen::VectorXd mode_frequencies;  // rad/s, sorted descending
  Eigen::MatrixXd mode_matrix;       // b(i, m), orthonormal columns
  Eigen::MatrixXd lamb_dicke;        // eta(i, m)

  int n_ions() const { return static_cast<int>(scaled_positions.size()); }
  int n_modes() const { return static_cast<int>(mode_frequencies.size()); }
};

// Scaled equilibrium positions u_i, sorted ascending, antisymmetric about 0.
// Damped Newton solve of the force-balance equations; residual < 1e-12.
Eigen::VectorXd equilibrium_positions(int n_ions, int max_iterations = 200);

// Eigendecomposition of the transverse Hessian. Returns (frequencies rad/s
// descending, mode matrix with sign-fixed orthonormal columns).
std::pair<Eigen::VectorXd, Eigen::MatrixXd> transverse_modes(
    const Eigen::VectorXd& scaled_positions, double omega_z, double omega_x);

// eta(i, m) = b(i, m) * delta_k * sqrt(hbar / (2 M omega_m))
Eigen::MatrixXd lamb_dicke(const Eigen::VectorXd& mode_frequencies,
                           const Eigen::MatrixXd& mode_matrix,
                           const TrapConfig& trap);

IonCrystal build_crystal(const TrapConfig& trap);

} // namespace ionsim
