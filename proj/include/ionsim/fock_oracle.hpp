#pragma once

#include <Eigen/Dense>
#include <complex>
#include <cstddef>
#include <vector>

#include "ionsim/spinmotion.hpp"

namespace ionsim {

// Truncated-Fock integration parameters. nbar empty means motional ground
// state; otherwise one mean occupation per mode.
struct FockSpec {
  int n_max = 25;
  double dt = 0.0;  // integrator step; 0 selects (2 pi / mu) / 200
  std::size_t dimension_cap = 2'000'000;
  double thermal_cutoff = 0.999;   // kept joint thermal weight before renormalization
  double norm_tolerance = 1e-8;
  Eigen::VectorXd nbar;
};

struct OracleRun {
  std::vector<double> times;     // sample times snapped to the step grid
  Eigen::MatrixXd populations;   // row per sample time, columns P_0..P_N
  double max_norm_drift = 0.0;
  std::size_t dimension = 0;
  std::size_t n_members = 1;     // thermal ensemble size
  std::size_t n_steps = 0;
};

// State-vector RK4 integration of the bichromatic spin-dependent force
// Hamiltonian, thermally averaged over Fock-diagonal initial conditions.
OracleRun integrate_hamiltonian(const IonCrystal& crystal, const Drive& drive,
                                const FockSpec& spec,
                                const std::vector<double>& sample_times,
                                const Eigen::VectorXcd& initial_spin = Eigen::VectorXcd(),
                                bool parallel = true);

// Second-order Magnus coefficient for the (i, j) spin-spin phase, by nested
// adaptive quadrature of the commutator kernel.
double magnus_chi(const IonCrystal& crystal, const Drive& drive, int i, int j, double tau,
                  double abs_tol = 1e-9);

struct TruncationReport {
  std::vector<int> levels;
  std::vector<double> drift;  // max |delta P_n| between successive levels
};

// Reruns the integration over a ladder of n_max values and reports the
// population drift between successive truncations.
TruncationReport truncation_sweep(const IonCrystal& crystal, const Drive& drive,
                                  const FockSpec& base, const std::vector<int>& levels,
                                  double tau);

// Exposed for kernel tests and the benchmark tool.
namespace fock_kernel {

using cd = std::complex<double>;

struct Layout {
  int n_ions = 0;
  int n_modes = 0;
  int levels = 0;  // n_max + 1
  std::size_t dim = 0;
  std::size_t spin_dim = 0;
  std::vector<std::size_t> mode_stride;
  Eigen::MatrixXd coupling;   // Omega_i * eta(i, m)
  Eigen::VectorXd mode_freq;  // rad/s
  double mu = 0.0;
  std::vector<double> sqrt_n;

  static Layout make(const IonCrystal& crystal, const Drive& drive, int n_max);
};

// out = -i H(t)/hbar * psi, blocked loops, optionally OpenMP parallel.
void apply(const Layout& lay, double t, const cd* psi, cd* out, bool parallel);

// Straightforward index-arithmetic version kept as the reference for tests.
void apply_reference(const Layout& lay, double t, const cd* psi, cd* out);

} // namespace fock_kernel

} // namespace ionsim
