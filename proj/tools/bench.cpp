// Benchmarks the Fock-space H-apply kernel (blocked/OpenMP vs the index
// reference) and a thermal time scan (parallel vs one thread).
#include <chrono>
#include <complex>
#include <cstdio>
#include <cstdlib>
#include <random>
#include <vector>

#include "ionsim/experiments.hpp"
#include "ionsim/fock_oracle.hpp"
#include "ionsim/parallel.hpp"

using namespace ionsim;
using clk = std::chrono::steady_clock;

namespace {

double seconds(clk::time_point t0, clk::time_point t1) {
  return std::chrono::duration<double>(t1 - t0).count();
}

void bench_kernel(const IonCrystal& crystal, const Drive& drive, int n_max, int reps) {
  const auto lay = fock_kernel::Layout::make(crystal, drive, n_max);
  std::mt19937_64 rng(7);
  std::normal_distribution<double> gauss;
  std::vector<fock_kernel::cd> psi(lay.dim), out(lay.dim);
  for (auto& c : psi) c = {gauss(rng), gauss(rng)};

  auto time_loop = [&](auto&& fn) {
    fn(0.0);  // warm up
    const auto t0 = clk::now();
    for (int r = 1; r <= reps; ++r) fn(1e-7 * r);
    return seconds(t0, clk::now()) / reps;
  };

  const double t_ref = time_loop([&](double t) {
    fock_kernel::apply_reference(lay, t, psi.data(), out.data());
  });
  const double t_serial = time_loop([&](double t) {
    fock_kernel::apply(lay, t, psi.data(), out.data(), false);
  });
  const double t_par = time_loop([&](double t) {
    fock_kernel::apply(lay, t, psi.data(), out.data(), true);
  });

  std::printf("H-apply  dim=%zu  n_max=%d\n", lay.dim, n_max);
  std::printf("  reference  %10.3f ms\n", 1e3 * t_ref);
  std::printf("  blocked    %10.3f ms   (%.2fx vs reference)\n", 1e3 * t_serial,
              t_ref / t_serial);
  std::printf("  openmp     %10.3f ms   (%.2fx vs blocked, %d threads)\n", 1e3 * t_par,
              t_serial / t_par, scan_threads());
}

void bench_scan(const IonCrystal& crystal, const Drive& drive, int points) {
  const Eigen::VectorXd grid = Eigen::VectorXd::LinSpaced(points, 0.0, drive.duration);
  const MotionalState motion = MotionalState::uniform(0.5, crystal.n_modes());

  setenv("IONSIM_THREADS", "1", 1);
  auto t0 = clk::now();
  time_scan(crystal, drive, grid, motion);
  const double t_serial = seconds(t0, clk::now());

  unsetenv("IONSIM_THREADS");
  t0 = clk::now();
  time_scan(crystal, drive, grid, motion);
  const double t_par = seconds(t0, clk::now());

  std::printf("time scan  %d points\n", points);
  std::printf("  1 thread   %10.3f ms\n", 1e3 * t_serial);
  std::printf("  openmp     %10.3f ms   (%.2fx, %d threads)\n", 1e3 * t_par,
              t_serial / t_par, scan_threads());
}

} // namespace

int main(int argc, char** argv) {
  const int n_max = argc > 1 ? std::atoi(argv[1]) : 12;
  const int reps = argc > 2 ? std::atoi(argv[2]) : 5;

  const TrapConfig trap = TrapConfig::from_hz(2, 0.616e6, 3.5838e6);
  const IonCrystal crystal = build_crystal(trap);

  GateSpec spec;
  const CalibratedGate gate = calibrate_gate(crystal, spec);

  bench_kernel(crystal, gate.drive, n_max, reps);
  bench_scan(crystal, gate.drive, 2001);
  return 0;
}
