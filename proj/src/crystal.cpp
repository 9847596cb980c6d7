#include "ionsim/crystal.hpp"

#include <cmath>
#include <string>

namespace ionsim {

TrapConfig TrapConfig::from_hz(int n_ions, double f_z_hz, double f_x_hz) {
  TrapConfig trap;
  trap.n_ions = n_ions;
  trap.omega_z = constants::two_pi * f_z_hz;
  trap.omega_x = constants::two_pi * f_x_hz;
  return trap;
}

void TrapConfig::validate() const {
  if (n_ions < 1) throw error("n_ions must be >= 1");
  if (omega_z <= 0.0 || omega_x <= 0.0) throw error("trap frequencies must be positive");
  if (ion_mass <= 0.0) throw error("ion mass must be positive");
  if (raman_wavelength <= 0.0) throw error("wavelength must be positive");
  if (n_ions <= 3) {
    const double eps = anisotropy();
    if (1.0 - 2.4 * eps * eps <= 0.0)
      throw instability_error("trap anisotropy too large for a linear chain of " +
                                  std::to_string(n_ions) + " ions",
                              n_ions - 1);
  }
}

namespace {

// Scaled Coulomb force balance: F_i = u_i - sum_{j != i} sign(u_i - u_j) / (u_i - u_j)^2
Eigen::VectorXd force_residual(const Eigen::VectorXd& u) {
  const int n = static_cast<int>(u.size());
  Eigen::VectorXd f = u;
  for (int i = 0; i < n; ++i) {
    for (int j = 0; j < n; ++j) {
      if (j == i) continue;
      const double d = u(i) - u(j);
      f(i) -= (d > 0 ? 1.0 : -1.0) / (d * d);
    }
  }
  return f;
}

Eigen::MatrixXd force_jacobian(const Eigen::VectorXd& u) {
  const int n = static_cast<int>(u.size());
  Eigen::MatrixXd jac = Eigen::MatrixXd::Identity(n, n);
  for (int i = 0; i < n; ++i) {
    for (int j = 0; j < n; ++j) {
      if (j == i) continue;
      const double d = std::abs(u(i) - u(j));
      const double k = 2.0 / (d * d * d);
      jac(i, i) += k;
      jac(i, j) -= k;
    }
  }
  return jac;
}

} // namespace

Eigen::VectorXd equilibrium_positions(int n_ions, int max_iterations) {
  if (n_ions < 1) throw error("n_ions must be >= 1");
  if (n_ions == 1) return Eigen::VectorXd::Zero(1);

  const int n = n_ions;
  // Empirical uniform-spacing seed.
  const double spacing = 2.018 / std::pow(static_cast<double>(n), 0.559);
  Eigen::VectorXd u(n);
  for (int i = 0; i < n; ++i) u(i) = (i - 0.5 * (n - 1)) * spacing;

  constexpr double tol = 1e-12;
  double res = force_residual(u).cwiseAbs().maxCoeff();
  for (int it = 0; it < max_iterations && res >= tol; ++it) {
    const Eigen::VectorXd f = force_residual(u);
    const Eigen::VectorXd step = force_jacobian(u).partialPivLu().solve(f);
    double damping = 1.0;
    Eigen::VectorXd trial = u - damping * step;
    // Backtrack if the step reorders ions or grows the residual.
    for (int k = 0; k < 30; ++k) {
      bool ordered = true;
      for (int i = 0; i + 1 < n; ++i)
        if (trial(i) >= trial(i + 1)) ordered = false;
      if (ordered && force_residual(trial).cwiseAbs().maxCoeff() < res) break;
      damping *= 0.5;
      trial = u - damping * step;
    }
    u = trial;
    res = force_residual(u).cwiseAbs().maxCoeff();
  }
  if (res >= tol)
    throw solver_error("equilibrium position solve did not converge, residual = " +
                           std::to_string(res),
                       res);

  // Enforce exact reflection antisymmetry.
  Eigen::VectorXd sym(n);
  for (int i = 0; i < n; ++i) sym(i) = 0.5 * (u(i) - u(n - 1 - i));
  return sym;
}

std::pair<Eigen::VectorXd, Eigen::MatrixXd> transverse_modes(
    const Eigen::VectorXd& u, double omega_z, double omega_x) {
  const int n = static_cast<int>(u.size());
  const double ratio2 = (omega_x / omega_z) * (omega_x / omega_z);

  Eigen::MatrixXd hess(n, n);
  for (int i = 0; i < n; ++i) {
    double diag = ratio2;
    for (int p = 0; p < n; ++p) {
      if (p == i) continue;
      const double d = std::abs(u(i) - u(p));
      const double inv3 = 1.0 / (d * d * d);
      diag -= inv3;
      hess(i, p) = inv3;
    }
    hess(i, i) = diag;
  }

  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> solver(hess);
  if (solver.info() != Eigen::Success) throw error("transverse mode eigensolve failed");

  // Eigen returns ascending eigenvalues; reverse so mode 0 is the CM.
  Eigen::VectorXd evals = solver.eigenvalues().reverse();
  Eigen::MatrixXd evecs = solver.eigenvectors().rowwise().reverse();

  Eigen::VectorXd freqs(n);
  for (int m = 0; m < n; ++m) {
    if (evals(m) <= 0.0)
      throw instability_error("transverse mode " + std::to_string(m + 1) +
                                  " is unstable (negative eigenvalue)",
                              m);
    freqs(m) = omega_z * std::sqrt(evals(m));
  }

  // Sign convention: column sum positive; first nonzero component positive
  // when the sum vanishes.
  for (int m = 0; m < n; ++m) {
    double sum = evecs.col(m).sum();
    double pivot = sum;
    if (std::abs(sum) < 1e-9) {
      pivot = 0.0;
      for (int i = 0; i < n; ++i) {
        if (std::abs(evecs(i, m)) > 1e-9) {
          pivot = evecs(i, m);
          break;
        }
      }
    }
    if (pivot < 0.0) evecs.col(m) *= -1.0;
  }

  return {freqs, evecs};
}

Eigen::MatrixXd lamb_dicke(const Eigen::VectorXd& mode_frequencies,
                           const Eigen::MatrixXd& mode_matrix,
                           const TrapConfig& trap) {
  const int n = static_cast<int>(mode_matrix.rows());
  const int m_count = static_cast<int>(mode_frequencies.size());
  Eigen::MatrixXd eta(n, m_count);
  for (int m = 0; m < m_count; ++m) {
    const double x0 = std::sqrt(constants::hbar / (2.0 * trap.ion_mass * mode_frequencies(m)));
    eta.col(m) = mode_matrix.col(m) * trap.delta_k() * x0;
  }
  return eta;
}

IonCrystal build_crystal(const TrapConfig& trap) {
  trap.validate();
  IonCrystal crystal;
  crystal.trap = trap;
  crystal.scaled_positions = equilibrium_positions(trap.n_ions);
  auto [freqs, modes] = transverse_modes(crystal.scaled_positions, trap.omega_z, trap.omega_x);
  crystal.mode_frequencies = std::move(freqs);
  crystal.mode_matrix = std::move(modes);
  crystal.lamb_dicke = lamb_dicke(crystal.mode_frequencies, crystal.mode_matrix, trap);
  return crystal;
}

} // namespace ionsim
