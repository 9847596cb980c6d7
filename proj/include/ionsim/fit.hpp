#pragma once

#include <Eigen/Dense>
#include <functional>

namespace ionsim {

using ModelFn = std::function<double(const Eigen::VectorXd& params, double x)>;

struct FitResult {
  Eigen::VectorXd params;
  double rms = 0.0;
  int iterations = 0;
  bool converged = false;
};

// Damped least squares with a central-difference Jacobian.
FitResult levenberg_marquardt(const ModelFn& model, const Eigen::VectorXd& x,
                              const Eigen::VectorXd& y, const Eigen::VectorXd& initial,
                              int max_iterations = 200, double tol = 1e-12);

// Cyclic frequency (Hz) of the largest nonzero peak of the mean-subtracted
// series, by direct DFT on a fine frequency grid.
double dominant_frequency(const Eigen::VectorXd& t, const Eigen::VectorXd& y);

// Least-squares a*sin(k x) + b*cos(k x) + c at fixed frequency k.
// Returns (amplitude, phase, offset) with value = amplitude * sin(k x + phase) + offset.
Eigen::Vector3d sinusoid_fit(const Eigen::VectorXd& x, const Eigen::VectorXd& y, double k);

} // namespace ionsim
