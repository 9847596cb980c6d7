#include "ionsim/fit.hpp"

#include <cmath>
#include <complex>

#include "ionsim/constants.hpp"
#include "ionsim/errors.hpp"

namespace ionsim {

namespace {

Eigen::VectorXd residuals(const ModelFn& model, const Eigen::VectorXd& x,
                          const Eigen::VectorXd& y, const Eigen::VectorXd& p) {
  Eigen::VectorXd r(x.size());
  for (int k = 0; k < x.size(); ++k) r(k) = model(p, x(k)) - y(k);
  return r;
}

Eigen::MatrixXd jacobian(const ModelFn& model, const Eigen::VectorXd& x,
                         const Eigen::VectorXd& p) {
  Eigen::MatrixXd jac(x.size(), p.size());
  for (int c = 0; c < p.size(); ++c) {
    const double h = 1e-7 * std::max(1.0, std::abs(p(c)));
    Eigen::VectorXd hi = p, lo = p;
    hi(c) += h;
    lo(c) -= h;
    for (int k = 0; k < x.size(); ++k)
      jac(k, c) = (model(hi, x(k)) - model(lo, x(k))) / (2.0 * h);
  }
  return jac;
}

} // namespace

FitResult levenberg_marquardt(const ModelFn& model, const Eigen::VectorXd& x,
                              const Eigen::VectorXd& y, const Eigen::VectorXd& initial,
                              int max_iterations, double tol) {
  Eigen::VectorXd p = initial;
  Eigen::VectorXd r = residuals(model, x, y, p);
  double cost = r.squaredNorm();
  double lambda = 1e-3;

  FitResult result;
  for (int it = 0; it < max_iterations; ++it) {
    result.iterations = it + 1;
    const Eigen::MatrixXd jac = jacobian(model, x, p);
    const Eigen::MatrixXd jtj = jac.transpose() * jac;
    const Eigen::VectorXd grad = jac.transpose() * r;
    Eigen::MatrixXd damped = jtj;
    damped.diagonal() += lambda * jtj.diagonal().cwiseMax(1e-12);
    const Eigen::VectorXd step = damped.ldlt().solve(grad);
    const Eigen::VectorXd trial = p - step;
    const Eigen::VectorXd r_trial = residuals(model, x, y, trial);
    const double cost_trial = r_trial.squaredNorm();
    if (cost_trial < cost) {
      const double improvement = cost - cost_trial;
      p = trial;
      r = r_trial;
      cost = cost_trial;
      lambda = std::max(lambda * 0.3, 1e-12);
      if (improvement < tol * (1.0 + cost)) {
        result.converged = true;
        break;
      }
    } else {
      lambda *= 10.0;
      if (lambda > 1e12) break;
    }
  }
  result.params = p;
  result.rms = std::sqrt(cost / x.size());
  return result;
}

double dominant_frequency(const Eigen::VectorXd& t, const Eigen::VectorXd& y) {
  if (t.size() < 4) throw fit_error("time series too short for frequency estimation");
  const Eigen::VectorXd centered = y.array() - y.mean();
  const double span = t(t.size() - 1) - t(0);
  if (span <= 0.0) throw fit_error("time grid must be increasing");
  const double f_min = 0.5 / span;
  const double dt_min = (t.tail(t.size() - 1) - t.head(t.size() - 1)).minCoeff();
  const double f_max = 0.5 / dt_min;

  double best_f = f_min, best_power = -1.0;
  const int n_grid = 4000;
  for (int k = 0; k <= n_grid; ++k) {
    const double f = f_min + (f_max - f_min) * k / n_grid;
    std::complex<double> acc(0.0, 0.0);
    for (int j = 0; j < t.size(); ++j)
      acc += centered(j) * std::exp(std::complex<double>(0.0, -constants::two_pi * f * t(j)));
    const double power = std::norm(acc);
    if (power > best_power) {
      best_power = power;
      best_f = f;
    }
  }
  return best_f;
}

Eigen::Vector3d sinusoid_fit(const Eigen::VectorXd& x, const Eigen::VectorXd& y, double k) {
  Eigen::MatrixXd design(x.size(), 3);
  for (int j = 0; j < x.size(); ++j) {
    design(j, 0) = std::sin(k * x(j));
    design(j, 1) = std::cos(k * x(j));
    design(j, 2) = 1.0;
  }
  const Eigen::Vector3d coef = design.colPivHouseholderQr().solve(y);
  const double amplitude = std::hypot(coef(0), coef(1));
  const double phase = std::atan2(coef(1), coef(0));
  return {amplitude, phase, coef(2)};
}

} // namespace ionsim
