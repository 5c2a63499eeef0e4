#pragma once

#include <stdexcept>
#include <string>

namespace tgk {

// All library errors derive from Error so callers can catch one type.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

class BoundsError : public Error {
 public:
  using Error::Error;
};

class ArgumentError : public Error {
 public:
  using Error::Error;
};

class ShapeError : public Error {
 public:
  using Error::Error;
};

// NaN/inf or an ill-posed numerical problem.
class NumericalError : public Error {
 public:
  using Error::Error;
};

// Magnet and Hall sensor coincide; the dipole field is undefined there.
class SingularityError : public NumericalError {
 public:
  using NumericalError::NumericalError;
};

class DegenerateFitError : public NumericalError {
 public:
  using NumericalError::NumericalError;
};

class ConfigError : public Error {
 public:
  using Error::Error;
};

class MissingInputError : public Error {
 public:
  using Error::Error;
};

class FormatError : public Error {
 public:
  using Error::Error;
};

class IoError : public Error {
 public:
  using Error::Error;
};

}  // namespace tgk
