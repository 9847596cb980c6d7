#pragma once

#include <stdexcept>
#include <string>

namespace ionsim {

class error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// Root solve for equilibrium positions did not reach tolerance.
class solver_error : public error {
 public:
  solver_error(const std::string& what, double residual)
      : error(what), residual_(residual) {}
  double residual() const { return residual_; }

 private:
  double residual_;
};

// Beatnote detuning sits on (or within the guard band of) a normal mode.
class resonance_error : public error {
 public:
  using error::error;
};

// A transverse mode frequency squared came out negative (zigzag collapse).
class instability_error : public error {
 public:
  instability_error(const std::string& what, int mode) : error(what), mode_(mode) {}
  int mode() const { return mode_; }

 private:
  int mode_;
};

class calibration_error : public error {
 public:
  using error::error;
};

class dimension_error : public error {
 public:
  using error::error;
};

class fit_error : public error {
 public:
  using error::error;
};

class config_error : public error {
 public:
  using error::error;
};

} // namespace ionsim
