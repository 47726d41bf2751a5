#pragma once

#include <stdexcept>
#include <string>

namespace qent {

/// Base class for all library errors. Subclasses name the violated
/// contract; messages carry the measured deviation.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

class NotHermitianError : public Error {
 public:
  using Error::Error;
};

class NoConvergenceError : public Error {
 public:
  using Error::Error;
};

class NotPsdError : public Error {
 public:
  using Error::Error;
};

class TraceNotOneError : public Error {
 public:
  using Error::Error;
};

class ParamOutOfRangeError : public Error {
 public:
  using Error::Error;
};

class ZeroVectorError : public Error {
 public:
  using Error::Error;
};

class BlochOutOfBallError : public Error {
 public:
  using Error::Error;
};

class DegenerateCorrelationError : public Error {
 public:
  using Error::Error;
};

class NoSignChangeError : public Error {
 public:
  using Error::Error;
};

class NotFoundError : public Error {
 public:
  using Error::Error;
};

class FileNotFoundError : public Error {
 public:
  using Error::Error;
};

class ParseError : public Error {
 public:
  using Error::Error;
};

class NonUnitVectorError : public Error {
 public:
  using Error::Error;
};

/// Raised when the PPT and concurrence oracles contradict each other
/// beyond tolerance during an audit; the message dumps the offending state.
class OracleMismatchError : public Error {
 public:
  using Error::Error;
};

}  // namespace qent
