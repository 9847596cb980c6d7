#include "ionsim/fock_oracle.hpp"

#include <algorithm>
#include <bit>
#include <cmath>
#include <functional>
#include <numeric>
#include <string>

#ifdef _OPENMP
#include <omp.h>
#endif

namespace ionsim {

using cd = std::complex<double>;

namespace fock_kernel {

Layout Layout::make(const IonCrystal& crystal, const Drive& drive, int n_max) {
  if (n_max < 1) throw error("n_max must be >= 1");
  Layout lay;
  lay.n_ions = crystal.n_ions();
  lay.n_modes = crystal.n_modes();
  lay.levels = n_max + 1;
  lay.spin_dim = std::size_t{1} << lay.n_ions;
  lay.mode_stride.resize(lay.n_modes);
  std::size_t stride = lay.spin_dim;
  for (int m = 0; m < lay.n_modes; ++m) {
    lay.mode_stride[m] = stride;
    stride *= lay.levels;
  }
  lay.dim = stride;
  lay.coupling.resize(lay.n_ions, lay.n_modes);
  for (int i = 0; i < lay.n_ions; ++i)
    for (int m = 0; m < lay.n_modes; ++m)
      lay.coupling(i, m) = drive.rabi(i) * crystal.lamb_dicke(i, m);
  lay.mode_freq = crystal.mode_frequencies;
  lay.mu = drive.mu;
  lay.sqrt_n.resize(lay.levels + 1);
  for (int k = 0; k <= lay.levels; ++k) lay.sqrt_n[k] = std::sqrt(static_cast<double>(k));
  return lay;
}

void apply(const Layout& lay, double t, const cd* psi, cd* out, bool parallel) {
  const double s_mu = std::sin(lay.mu * t);
  std::fill(out, out + lay.dim, cd(0.0, 0.0));
  for (int m = 0; m < lay.n_modes; ++m) {
    const cd phase_up = std::exp(cd(0.0, lay.mode_freq(m) * t));
    const cd phase_dn = std::conj(phase_up);
    const std::size_t stride = lay.mode_stride[m];
    const std::size_t block = stride * lay.levels;
    const std::ptrdiff_t n_blocks = static_cast<std::ptrdiff_t>(lay.dim / block);
    for (int i = 0; i < lay.n_ions; ++i) {
      const double g = lay.coupling(i, m) * s_mu;
      if (g == 0.0) continue;
      const cd c_up = cd(0.0, -g) * phase_up;
      const cd c_dn = cd(0.0, -g) * phase_dn;
      const std::size_t flip = std::size_t{1} << i;
#ifdef _OPENMP
#pragma omp parallel for schedule(static) if (parallel && n_blocks > 1)
#endif
      for (std::ptrdiff_t blk = 0; blk < n_blocks; ++blk) {
        const std::size_t base = static_cast<std::size_t>(blk) * block;
        for (int n = 0; n < lay.levels; ++n) {
          cd* row = out + base + n * stride;
          const cd* lower = psi + base + (n - 1) * stride;
          const cd* upper = psi + base + (n + 1) * stride;
          const cd a_up = c_up * lay.sqrt_n[n];      // from level n-1
          const cd a_dn = c_dn * lay.sqrt_n[n + 1];  // from level n+1
          if (n > 0 && n < lay.levels - 1) {
            for (std::size_t j = 0; j < stride; ++j)
              row[j] += a_up * lower[j ^ flip] + a_dn * upper[j ^ flip];
          } else if (n > 0) {
            for (std::size_t j = 0; j < stride; ++j) row[j] += a_up * lower[j ^ flip];
          } else if (lay.levels > 1) {
            for (std::size_t j = 0; j < stride; ++j) row[j] += a_dn * upper[j ^ flip];
          }
        }
      }
    }
  }
}

void apply_reference(const Layout& lay, double t, const cd* psi, cd* out) {
  const double s_mu = std::sin(lay.mu * t);
  for (std::size_t idx = 0; idx < lay.dim; ++idx) {
    cd acc(0.0, 0.0);
    for (int m = 0; m < lay.n_modes; ++m) {
      const int n = static_cast<int>((idx / lay.mode_stride[m]) % lay.levels);
      const cd phase_up = std::exp(cd(0.0, lay.mode_freq(m) * t));
      for (int i = 0; i < lay.n_ions; ++i) {
        const double g = lay.coupling(i, m) * s_mu;
        const std::size_t flipped = idx ^ (std::size_t{1} << i);
        if (n > 0)
          acc += cd(0.0, -g) * phase_up * lay.sqrt_n[n] * psi[flipped - lay.mode_stride[m]];
        if (n < lay.levels - 1)
          acc += cd(0.0, -g) * std::conj(phase_up) * lay.sqrt_n[n + 1] *
                 psi[flipped + lay.mode_stride[m]];
      }
    }
    out[idx] = acc;
  }
}

} // namespace fock_kernel

namespace {

struct ThermalMember {
  std::vector<int> occupation;
  double weight;
};

std::vector<ThermalMember> thermal_members(const Eigen::VectorXd& nbar, int n_max,
                                           double cutoff) {
  const int n_modes = static_cast<int>(nbar.size());
  std::vector<ThermalMember> members{{std::vector<int>(n_modes, 0), 1.0}};
  for (int m = 0; m < n_modes; ++m) {
    if (nbar(m) <= 0.0) continue;
    const double q = nbar(m) / (1.0 + nbar(m));
    int bound = static_cast<int>(std::ceil(std::log(1e-8) / std::log(q)));
    bound = std::min(bound, n_max);
    std::vector<ThermalMember> extended;
    extended.reserve(members.size() * (bound + 1));
    for (const auto& member : members) {
      for (int n = 0; n <= bound; ++n) {
        ThermalMember next = member;
        next.occupation[m] = n;
        next.weight *= (1.0 - q) * std::pow(q, n);
        extended.push_back(std::move(next));
      }
    }
    members = std::move(extended);
  }
  std::sort(members.begin(), members.end(), [](const ThermalMember& a, const ThermalMember& b) {
    if (a.weight != b.weight) return a.weight > b.weight;
    return a.occupation < b.occupation;
  });
  double cumulative = 0.0;
  std::size_t keep = members.size();
  for (std::size_t k = 0; k < members.size(); ++k) {
    cumulative += members[k].weight;
    if (cumulative > cutoff) {
      keep = k + 1;
      break;
    }
  }
  members.resize(keep);
  double total = 0.0;
  for (const auto& member : members) total += member.weight;
  for (auto& member : members) member.weight /= total;
  return members;
}

// Populations by Hamming weight of the spin part of each amplitude index.
void accumulate_populations(const fock_kernel::Layout& lay, const std::vector<cd>& psi,
                            double weight, Eigen::MatrixXd& pops, Eigen::Index row) {
  const std::size_t spin_mask = lay.spin_dim - 1;
  for (std::size_t idx = 0; idx < lay.dim; ++idx) {
    const int n_up = std::popcount(idx & spin_mask);
    pops(row, n_up) += weight * std::norm(psi[idx]);
  }
}

} // namespace

OracleRun integrate_hamiltonian(const IonCrystal& crystal, const Drive& drive,
                                const FockSpec& spec, const std::vector<double>& sample_times,
                                const Eigen::VectorXcd& initial_spin, bool parallel) {
  drive.validate(crystal.n_ions());
  if (sample_times.empty()) throw error("at least one sample time required");
  for (double t : sample_times)
    if (t < 0.0) throw error("sample times must be non-negative");

  const fock_kernel::Layout lay = fock_kernel::Layout::make(crystal, drive, spec.n_max);
  if (lay.dim > spec.dimension_cap)
    throw dimension_error("Hilbert dimension " + std::to_string(lay.dim) +
                          " exceeds cap " + std::to_string(spec.dimension_cap));

  const double dt = spec.dt > 0.0 ? spec.dt : (constants::two_pi / drive.mu) / 200.0;

  Eigen::VectorXcd spin0;
  if (initial_spin.size() == 0) {
    spin0 = Eigen::VectorXcd::Zero(lay.spin_dim);
    spin0(0) = 1.0;
  } else {
    if (static_cast<std::size_t>(initial_spin.size()) != lay.spin_dim)
      throw dimension_error("initial spin vector has wrong dimension");
    spin0 = initial_spin.normalized();
  }

  Eigen::VectorXd nbar = spec.nbar.size() > 0 ? spec.nbar
                                              : Eigen::VectorXd::Zero(crystal.n_modes());
  if (static_cast<int>(nbar.size()) != crystal.n_modes())
    throw dimension_error("nbar length does not match mode count");
  const auto members = thermal_members(nbar, spec.n_max, spec.thermal_cutoff);

  // Snap sample times to the step grid.
  std::vector<std::size_t> sample_steps(sample_times.size());
  std::size_t last_step = 0;
  for (std::size_t k = 0; k < sample_times.size(); ++k) {
    sample_steps[k] = static_cast<std::size_t>(std::llround(sample_times[k] / dt));
    last_step = std::max(last_step, sample_steps[k]);
  }

  OracleRun run;
  run.times.resize(sample_times.size());
  for (std::size_t k = 0; k < sample_times.size(); ++k) run.times[k] = sample_steps[k] * dt;
  run.populations = Eigen::MatrixXd::Zero(sample_times.size(), crystal.n_ions() + 1);
  run.dimension = lay.dim;
  run.n_members = members.size();
  run.n_steps = last_step;

  std::vector<cd> psi(lay.dim), k1(lay.dim), k2(lay.dim), k3(lay.dim), k4(lay.dim),
      scratch(lay.dim);

  for (const auto& member : members) {
    std::size_t offset = 0;
    for (int m = 0; m < lay.n_modes; ++m) offset += member.occupation[m] * lay.mode_stride[m];
    std::fill(psi.begin(), psi.end(), cd(0.0, 0.0));
    for (std::size_t s = 0; s < lay.spin_dim; ++s) psi[offset + s] = spin0(s);

    std::size_t step = 0;
    for (std::size_t k = 0; k < sample_steps.size(); ++k)
      if (sample_steps[k] == 0)
        accumulate_populations(lay, psi, member.weight, run.populations, k);

    while (step < last_step) {
      const double t = step * dt;
      fock_kernel::apply(lay, t, psi.data(), k1.data(), parallel);
      for (std::size_t n = 0; n < lay.dim; ++n) scratch[n] = psi[n] + 0.5 * dt * k1[n];
      fock_kernel::apply(lay, t + 0.5 * dt, scratch.data(), k2.data(), parallel);
      for (std::size_t n = 0; n < lay.dim; ++n) scratch[n] = psi[n] + 0.5 * dt * k2[n];
      fock_kernel::apply(lay, t + 0.5 * dt, scratch.data(), k3.data(), parallel);
      for (std::size_t n = 0; n < lay.dim; ++n) scratch[n] = psi[n] + dt * k3[n];
      fock_kernel::apply(lay, t + dt, scratch.data(), k4.data(), parallel);
      for (std::size_t n = 0; n < lay.dim; ++n)
        psi[n] += dt / 6.0 * (k1[n] + 2.0 * k2[n] + 2.0 * k3[n] + k4[n]);
      ++step;
      for (std::size_t k = 0; k < sample_steps.size(); ++k)
        if (sample_steps[k] == step)
          accumulate_populations(lay, psi, member.weight, run.populations, k);
    }

    double norm2 = 0.0;
    for (const cd& amp : psi) norm2 += std::norm(amp);
    run.max_norm_drift = std::max(run.max_norm_drift, std::abs(norm2 - 1.0));
  }

  if (run.max_norm_drift > spec.norm_tolerance)
    throw solver_error("state norm drifted by " + std::to_string(run.max_norm_drift) +
                           "; reduce the integrator step",
                       run.max_norm_drift);
  return run;
}

namespace {

// Adaptive Gauss-Kronrod 7-15 on [a, b], absolute tolerance.
class GaussKronrod {
 public:
  static double integrate(const std::function<double(double)>& f, double a, double b,
                          double abs_tol, double panel_scale) {
    // Seed with panels short enough to resolve the fastest oscillation.
    const int seed = std::max(1, static_cast<int>(std::ceil((b - a) * panel_scale)));
    struct Interval {
      double a, b, value, err;
    };
    std::vector<Interval> stack;
    double total = 0.0, total_err = 0.0;
    for (int p = 0; p < seed; ++p) {
      const double lo = a + (b - a) * p / seed;
      const double hi = a + (b - a) * (p + 1) / seed;
      auto [v, e] = panel(f, lo, hi);
      stack.push_back({lo, hi, v, e});
      total += v;
      total_err += e;
    }
    int splits = 0;
    constexpr int max_splits = 5000;
    while (total_err > abs_tol && splits < max_splits) {
      auto worst = std::max_element(stack.begin(), stack.end(),
                                    [](const Interval& x, const Interval& y) {
                                      return x.err < y.err;
                                    });
      const Interval iv = *worst;
      stack.erase(worst);
      const double mid = 0.5 * (iv.a + iv.b);
      auto [v1, e1] = panel(f, iv.a, mid);
      auto [v2, e2] = panel(f, mid, iv.b);
      total += v1 + v2 - iv.value;
      total_err += e1 + e2 - iv.err;
      stack.push_back({iv.a, mid, v1, e1});
      stack.push_back({mid, iv.b, v2, e2});
      ++splits;
    }
    return total;
  }

 private:
  static std::pair<double, double> panel(const std::function<double(double)>& f, double a,
                                         double b) {
    static constexpr double xgk[8] = {
        0.991455371120813, 0.949107912342759, 0.864864423359769, 0.741531185599394,
        0.586087235467691, 0.405845151377397, 0.207784955007898, 0.0};
    static constexpr double wgk[8] = {
        0.022935322010529, 0.063092092629979, 0.104790010322250, 0.140653259715525,
        0.169004726639267, 0.190350578064785, 0.204432940075298, 0.209482141084728};
    static constexpr double wg[4] = {0.129484966168870, 0.279705391489277,
                                     0.381830050505119, 0.417959183673469};
    const double c = 0.5 * (a + b), h = 0.5 * (b - a);
    double kronrod = wgk[7] * f(c);
    double gauss = wg[3] * f(c);
    for (int k = 0; k < 7; ++k) {
      const double fv = f(c - h * xgk[k]) + f(c + h * xgk[k]);
      kronrod += wgk[k] * fv;
      if (k % 2 == 1) gauss += wg[k / 2] * fv;
    }
    kronrod *= h;
    gauss *= h;
    return {kronrod, std::abs(kronrod - gauss)};
  }
};

} // namespace

double magnus_chi(const IonCrystal& crystal, const Drive& drive, int i, int j, double tau,
                  double abs_tol) {
  if (i == j) throw error("magnus_chi requires distinct ions");
  if (tau == 0.0) return 0.0;
  const double mu = drive.mu;
  const int n_modes = crystal.n_modes();

  double chi = 0.0;
  for (int m = 0; m < n_modes; ++m) {
    const double w = crystal.mode_frequencies(m);
    const double prefactor =
        drive.rabi(i) * drive.rabi(j) * crystal.lamb_dicke(i, m) * crystal.lamb_dicke(j, m);
    if (prefactor == 0.0) continue;
    const double mode_tol = abs_tol / (n_modes * std::abs(prefactor));
    const double panel_scale = std::max(mu, w) / constants::pi;

    // inner integral int_0^t sin(mu t') 2 sin(w (t - t')) dt' done in closed
    // form (elementary antiderivative); quadrature on it dominates the error
    // budget otherwise. The outer integral stays numerical.
    auto outer = [&](double t) {
      const double inner = (std::sin(mu * t) + std::sin(w * t)) / (mu + w) -
                           (std::sin(mu * t) - std::sin(w * t)) / (mu - w);
      return std::sin(mu * t) * inner;
    };
    chi += prefactor * GaussKronrod::integrate(outer, 0.0, tau, mode_tol, panel_scale);
  }
  return chi;
}

TruncationReport truncation_sweep(const IonCrystal& crystal, const Drive& drive,
                                  const FockSpec& base, const std::vector<int>& levels,
                                  double tau) {
  TruncationReport report;
  report.levels = levels;
  Eigen::VectorXd previous;
  for (int n_max : levels) {
    FockSpec spec = base;
    spec.n_max = n_max;
    const OracleRun run = integrate_hamiltonian(crystal, drive, spec, {tau});
    const Eigen::VectorXd pops = run.populations.row(0);
    if (previous.size() > 0)
      report.drift.push_back((pops - previous).cwiseAbs().maxCoeff());
    previous = pops;
  }
  return report;
}

} // namespace ionsim
