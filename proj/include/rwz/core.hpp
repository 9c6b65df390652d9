#pragma once

#include <complex>
#include <cstdint>
#include <numbers>
#include <stdexcept>
#include <string>

#include <Eigen/Dense>

namespace rwz {

using cplx = std::complex<double>;
using Points = Eigen::VectorXcd;

inline constexpr double pi = std::numbers::pi;

// Error taxonomy. The CLI maps ParameterError/WindowError to usage problems
// and the rest to numeric failures.
struct ParameterError : std::invalid_argument {
  using std::invalid_argument::invalid_argument;
};

struct WindowError : std::domain_error {
  using std::domain_error::domain_error;
};

struct UnsupportedModelError : std::invalid_argument {
  using std::invalid_argument::invalid_argument;
};

struct NumericError : std::runtime_error {
  std::uint64_t seed = 0;
  NumericError(const std::string& what, std::uint64_t s = 0)
      : std::runtime_error(what), seed(s) {}
};

struct AccuracyError : NumericError {
  double best_estimate;
  AccuracyError(const std::string& what, double best)
      : NumericError(what), best_estimate(best) {}
};

struct GeometryError : NumericError {
  using NumericError::NumericError;
};

// Evaluation point within the pole guard of some point.
struct EvaluationPointError : NumericError {
  using NumericError::NumericError;
};

struct ModelInconsistencyError : NumericError {
  using NumericError::NumericError;
};

inline void require(bool ok, const std::string& msg) {
  if (!ok) throw ParameterError(msg);
}

}  // namespace rwz
