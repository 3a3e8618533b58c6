#ifndef IVAR_ERROR_HPP
#define IVAR_ERROR_HPP

#include <stdexcept>
#include <string>

namespace ivar {

/// Base class for every error raised by the library.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Bad dimensions, orders outside the admissible range, malformed input.
class InvalidInput : public Error {
 public:
  using Error::Error;
};

/// A regression design (or moment matrix) is numerically rank deficient.
class SingularDesign : public Error {
 public:
  using Error::Error;
};

/// Parameters or fits violating a stationarity / I(1) requirement.
class Nonstationary : public Error {
 public:
  using Error::Error;
};

/// Factorizations or eigen decompositions that failed on degenerate data.
class NumericalError : public Error {
 public:
  using Error::Error;
};

namespace detail {

inline void require(bool cond, const std::string& what) {
  if (!cond) throw InvalidInput(what);
}

}  // namespace detail
}  // namespace ivar

#endif  // IVAR_ERROR_HPP
