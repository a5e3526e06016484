#pragma once

#include <stdexcept>
#include <string>

namespace lkc {

/// Base class for all library failures that callers may want to recover from.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// The spectrum closes (|E(k)|^2 below the gap tolerance); the winding number is undefined.
class GaplessError : public Error {
 public:
  GaplessError(const std::string& what, double min_gap) : Error(what), min_gap_(min_gap) {}
  double min_gap() const noexcept { return min_gap_; }

 private:
  double min_gap_;
};

class NonConvergence : public Error {
 public:
  using Error::Error;
};

class DegenerateState : public Error {
 public:
  using Error::Error;
};

class NonHermitianInput : public Error {
 public:
  using Error::Error;
};

class InsufficientSamples : public Error {
 public:
  using Error::Error;
};

class DegenerateAbscissa : public Error {
 public:
  using Error::Error;
};

}  // namespace lkc
