#include "ionsim/spinmotion.hpp"

#include <bit>
#include <cmath>
#include <string>

namespace ionsim {

using cd = std::complex<double>;

Drive Drive::uniform(double mu, double omega, int n_ions, double duration) {
  return {mu, Eigen::VectorXd::Constant(n_ions, omega), duration};
}

void Drive::validate(int n_ions) const {
  if (mu <= 0.0) throw error("drive detuning mu must be positive");
  if (duration < 0.0) throw error("drive duration must be non-negative");
  if (static_cast<int>(rabi.size()) != n_ions)
    throw dimension_error("rabi vector length does not match ion count");
  if ((rabi.array() < 0.0).any()) throw error("rabi frequencies must be non-negative");
}

namespace {

void check_resonance(const IonCrystal& crystal, double mu) {
  for (int m = 0; m < crystal.n_modes(); ++m) {
    if (std::abs(mu - crystal.mode_frequencies(m)) < resonance_guard)
      throw resonance_error("detuning mu is resonant with mode " + std::to_string(m + 1) +
                            "; perturb the detuning");
  }
}

constexpr int max_dense_ions = 14;

// Hadamard transform rho -> W rho W, mapping the sigma_z product basis to the
// sigma_x product basis (x index bit 0 = |+>).
void hadamard_conjugate(Eigen::MatrixXcd& rho) {
  const int dim = static_cast<int>(rho.rows());
  const double inv_sqrt2 = 1.0 / std::sqrt(2.0);
  for (int bit = 1; bit < dim; bit <<= 1) {
    for (int c = 0; c < dim; ++c) {
      for (int a = 0; a < dim; ++a) {
        if (a & bit) continue;
        const int b = a | bit;
        const cd lo = rho(a, c), hi = rho(b, c);
        rho(a, c) = (lo + hi) * inv_sqrt2;
        rho(b, c) = (lo - hi) * inv_sqrt2;
      }
    }
    for (int r = 0; r < dim; ++r) {
      for (int a = 0; a < dim; ++a) {
        if (a & bit) continue;
        const int b = a | bit;
        const cd lo = rho(r, a), hi = rho(r, b);
        rho(r, a) = (lo + hi) * inv_sqrt2;
        rho(r, b) = (lo - hi) * inv_sqrt2;
      }
    }
  }
}

} // namespace

std::complex<double> displacement_alpha(const IonCrystal& crystal, const Drive& drive,
                                        int ion, int mode, double tau) {
  check_resonance(crystal, drive.mu);
  const double mu = drive.mu;
  const double w = crystal.mode_frequencies(mode);
  const double eta = crystal.lamb_dicke(ion, mode);
  const double omega = drive.rabi(ion);
  const cd bracket = mu - std::exp(cd(0.0, w * tau)) *
                              cd(mu * std::cos(mu * tau), -w * std::sin(mu * tau));
  return cd(0.0, -eta * omega / (mu * mu - w * w)) * bracket;
}

double chi_coupling(const IonCrystal& crystal, const Drive& drive, int i, int j, double tau) {
  if (i == j) throw error("chi_coupling requires distinct ions");
  check_resonance(crystal, drive.mu);
  const double mu = drive.mu;
  double chi = 0.0;
  for (int m = 0; m < crystal.n_modes(); ++m) {
    const double w = crystal.mode_frequencies(m);
    // exact value of the nested drive/mode integral; note the w/(2 mu)
    // weight on the sin(2 mu tau) term (not mu/(2 w))
    const double bracket = mu * std::sin((mu - w) * tau) / (mu - w) -
                           mu * std::sin((mu + w) * tau) / (mu + w) +
                           w * std::sin(2.0 * mu * tau) / (2.0 * mu) - w * tau;
    chi += crystal.lamb_dicke(i, m) * crystal.lamb_dicke(j, m) /
           (mu * mu - w * w) * bracket;
  }
  return drive.rabi(i) * drive.rabi(j) * chi;
}

CouplingMatrix ising_matrix(const IonCrystal& crystal, const Drive& drive) {
  check_resonance(crystal, drive.mu);
  const int n = crystal.n_ions();
  const double mu = drive.mu;
  Eigen::MatrixXd j_mat = Eigen::MatrixXd::Zero(n, n);
  for (int i = 0; i < n; ++i) {
    for (int j = i + 1; j < n; ++j) {
      double sum = 0.0;
      for (int m = 0; m < crystal.n_modes(); ++m) {
        const double w = crystal.mode_frequencies(m);
        sum += crystal.lamb_dicke(i, m) * crystal.lamb_dicke(j, m) * w / (mu * mu - w * w);
      }
      j_mat(i, j) = j_mat(j, i) = -drive.rabi(i) * drive.rabi(j) * sum;
    }
  }
  return {j_mat};
}

SpinMotionEvolution evolve(const IonCrystal& crystal, const Drive& drive,
                           const MotionalState& motion, const Eigen::MatrixXcd& initial_rho) {
  const int n = crystal.n_ions();
  if (n > max_dense_ions)
    throw dimension_error("dense spin evolution capped at " + std::to_string(max_dense_ions) +
                          " ions");
  drive.validate(n);
  check_resonance(crystal, drive.mu);
  if (static_cast<int>(motion.nbar.size()) != crystal.n_modes())
    throw dimension_error("nbar length does not match mode count");
  if ((motion.nbar.array() < 0.0).any()) throw error("nbar must be non-negative");

  const int dim = 1 << n;
  const double tau = drive.duration;

  SpinMotionEvolution out;
  out.alpha.resize(n, crystal.n_modes());
  for (int i = 0; i < n; ++i)
    for (int m = 0; m < crystal.n_modes(); ++m)
      out.alpha(i, m) = displacement_alpha(crystal, drive, i, m, tau);

  out.chi = Eigen::MatrixXd::Zero(n, n);
  for (int i = 0; i < n; ++i)
    for (int j = i + 1; j < n; ++j)
      out.chi(i, j) = out.chi(j, i) = chi_coupling(crystal, drive, i, j, tau);

  Eigen::MatrixXcd rho;
  if (initial_rho.size() == 0) {
    rho = Eigen::MatrixXcd::Zero(dim, dim);
    rho(0, 0) = 1.0;  // |down...down>
  } else {
    if (initial_rho.rows() != dim || initial_rho.cols() != dim)
      throw dimension_error("initial spin state has wrong dimension");
    rho = initial_rho;
  }

  // sigma_x eigenvalues per x-basis index: bit clear = +1.
  Eigen::MatrixXd signs(dim, n);
  for (int s = 0; s < dim; ++s)
    for (int i = 0; i < n; ++i) signs(s, i) = (s >> i) & 1 ? -1.0 : 1.0;

  // Entangling phase and per-mode conditional displacement for each sector.
  Eigen::VectorXd theta = Eigen::VectorXd::Zero(dim);
  Eigen::MatrixXcd disp = Eigen::MatrixXcd::Zero(dim, crystal.n_modes());
  for (int s = 0; s < dim; ++s) {
    for (int i = 0; i < n; ++i) {
      for (int j = i + 1; j < n; ++j) theta(s) += out.chi(i, j) * signs(s, i) * signs(s, j);
      for (int m = 0; m < crystal.n_modes(); ++m)
        disp(s, m) += signs(s, i) * out.alpha(i, m);
    }
  }

  hadamard_conjugate(rho);
  for (int s = 0; s < dim; ++s) {
    for (int t = 0; t < dim; ++t) {
      double damp = 0.0, phase = theta(s) - theta(t);
      for (int m = 0; m < crystal.n_modes(); ++m) {
        const cd delta = disp(s, m) - disp(t, m);
        damp -= 0.5 * std::norm(delta) * (2.0 * motion.nbar(m) + 1.0);
        phase += std::imag(disp(s, m) * std::conj(disp(t, m)));
      }
      rho(s, t) *= std::exp(cd(damp, phase));
    }
  }
  hadamard_conjugate(rho);

  rho = 0.5 * (rho + rho.adjoint().eval());
  out.rho_spin = rho;
  out.populations = populations_from_rho(rho);
  return out;
}

Eigen::MatrixXcd carrier_rotation(const Eigen::MatrixXcd& rho_spin, double angle, double phase) {
  const int dim = static_cast<int>(rho_spin.rows());
  const double c = std::cos(0.5 * angle), s = std::sin(0.5 * angle);
  // Basis order (|down>, |up>) per qubit.
  const cd r01 = cd(0.0, -s) * std::exp(cd(0.0, phase));
  const cd r10 = cd(0.0, -s) * std::exp(cd(0.0, -phase));

  Eigen::MatrixXcd rho = rho_spin;
  for (int bit = 1; bit < dim; bit <<= 1) {
    for (int col = 0; col < dim; ++col) {
      for (int a = 0; a < dim; ++a) {
        if (a & bit) continue;
        const int b = a | bit;
        const cd lo = rho(a, col), hi = rho(b, col);
        rho(a, col) = c * lo + r01 * hi;
        rho(b, col) = r10 * lo + c * hi;
      }
    }
    for (int row = 0; row < dim; ++row) {
      for (int a = 0; a < dim; ++a) {
        if (a & bit) continue;
        const int b = a | bit;
        const cd lo = rho(row, a), hi = rho(row, b);
        rho(row, a) = c * lo + std::conj(r01) * hi;
        rho(row, b) = std::conj(r10) * lo + c * hi;
      }
    }
  }
  return rho;
}

Eigen::VectorXd populations_from_rho(const Eigen::MatrixXcd& rho_spin) {
  const int dim = static_cast<int>(rho_spin.rows());
  const int n = std::countr_zero(static_cast<unsigned>(dim));
  Eigen::VectorXd pops = Eigen::VectorXd::Zero(n + 1);
  for (int idx = 0; idx < dim; ++idx)
    pops(std::popcount(static_cast<unsigned>(idx))) += std::real(rho_spin(idx, idx));
  return pops;
}

std::vector<double> parity_scan(const Eigen::MatrixXcd& rho_after_gate,
                                const std::vector<double>& phases) {
  std::vector<double> parities;
  parities.reserve(phases.size());
  for (const double phi : phases) {
    const Eigen::MatrixXcd rotated = carrier_rotation(rho_after_gate, constants::pi / 2.0, phi);
    const Eigen::VectorXd pops = populations_from_rho(rotated);
    double parity = 0.0;
    for (int k = 0; k < pops.size(); ++k) parity += (k % 2 == 0 ? 1.0 : -1.0) * pops(k);
    parities.push_back(parity);
  }
  return parities;
}

double fidelity_bound(double p0_plus_pN, double parity_contrast) {
  return 0.5 * (p0_plus_pN + parity_contrast);
}

} // namespace ionsim
