#pragma once

#include <stdexcept>
#include <string>

#include <Eigen/Core>

namespace epirecon {

// Bad or inconsistent input data (empty series, misaligned dates, ...).
class InputError : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

// A model parameter outside its admissible domain.
class ParameterError : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

// Singular matrices, failed inversions, negative states and the like.
class NumericalError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// Missing, unreadable or unwritable files.
class IoError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// An iterative method ran out of iterations. Carries the last iterate so the
// caller can inspect or restart from it.
class ConvergenceError : public std::runtime_error {
 public:
  ConvergenceError(const std::string& what, Eigen::VectorXd last_iterate, int iterations)
      : std::runtime_error(what), last_iterate_(std::move(last_iterate)), iterations_(iterations) {}

  const Eigen::VectorXd& last_iterate() const { return last_iterate_; }
  int iterations() const { return iterations_; }

 private:
  Eigen::VectorXd last_iterate_;
  int iterations_;
};

}  // namespace epirecon
