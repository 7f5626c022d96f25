#pragma once

#include <stdexcept>
#include <string>

namespace bifmap {

// Base for every failure raised by the library. Each subclass maps to one
// failure mode that callers (notably the CLI exit-code table) distinguish.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

class InvalidSpec : public Error {
 public:
  using Error::Error;
};

// D(u) <= 0 somewhere on the queried range, so the time map is undefined.
class AdmissibilityViolation : public Error {
 public:
  using Error::Error;
};

class NonFinite : public Error {
 public:
  using Error::Error;
};

class PanelBudgetExceeded : public Error {
 public:
  using Error::Error;
};

class QuadratureFailure : public Error {
 public:
  using Error::Error;
};

class UnsupportedFamily : public Error {
 public:
  using Error::Error;
};

class InsufficientCoverage : public Error {
 public:
  using Error::Error;
};

class InsufficientRange : public Error {
 public:
  using Error::Error;
};

class InconsistentPair : public Error {
 public:
  using Error::Error;
};

class NoConvergence : public Error {
 public:
  using Error::Error;
};

class SchemaMismatch : public Error {
 public:
  using Error::Error;
};

}  // namespace bifmap
