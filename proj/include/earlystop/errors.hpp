#pragma once

#include <stdexcept>
#include <string>

namespace earlystop {

/// Base class of every error thrown by the library.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// A precondition on user-supplied input was violated (bad shape, bad range).
class InvalidArgument : public Error {
 public:
  using Error::Error;
};

/// An oracle quantity was requested but the true signal / noise was not supplied.
class OracleUnavailable : public Error {
 public:
  using Error::Error;
};

/// More singular components were requested than the design has.
class RankExhausted : public Error {
 public:
  using Error::Error;
};

/// The design (or a deflated remainder) is numerically zero.
class ZeroMatrix : public Error {
 public:
  using Error::Error;
};

inline void require(bool condition, const std::string& message) {
  if (!condition) throw InvalidArgument(message);
}

}  // namespace earlystop
