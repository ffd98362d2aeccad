#pragma once

#include <stdexcept>
#include <string>

namespace langevin {

// Caller supplied something outside the documented domain. The CLI maps
// these to exit status 2.
class InvalidArgument : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

class InvalidTarget : public InvalidArgument {
 public:
  using InvalidArgument::InvalidArgument;
};

class InvalidParameter : public InvalidArgument {
 public:
  using InvalidArgument::InvalidArgument;
};

class InvalidMetric : public InvalidArgument {
 public:
  using InvalidArgument::InvalidArgument;
};

class DimensionMismatch : public InvalidArgument {
 public:
  using InvalidArgument::InvalidArgument;
};

// Inputs were valid but the computation cannot deliver a result. The CLI
// maps these to exit status 1.
class NumericalError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

class NoInvariant : public NumericalError {
 public:
  using NumericalError::NumericalError;
};

class BoundUnavailable : public NumericalError {
 public:
  using NumericalError::NumericalError;
};

}  // namespace langevin
