#pragma once

#include <stdexcept>
#include <string>

namespace gsc {

/// Bad input or configuration: malformed records, violated preconditions
/// on user-supplied values. The CLI maps this to exit code 2.
class ValidationError : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

/// The data are well-formed but the estimator cannot proceed (empty
/// observation set, under-identified rows, failed bootstrap). Exit code 1.
class EstimationError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

}  // namespace gsc
