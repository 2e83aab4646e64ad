#pragma once

#include <stdexcept>
#include <string>

namespace tts {

/// Base class for every error raised by the library.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// An operation was called outside its documented precondition.
class PreconditionError : public Error {
 public:
  using Error::Error;
};

/// Positions fall outside the admissible set {Delta(u) > 2 eta}.
class NotAdmissibleError : public PreconditionError {
 public:
  NotAdmissibleError(const std::string& what, double delta)
      : PreconditionError(what), delta_(delta) {}
  double delta() const { return delta_; }

 private:
  double delta_;
};

/// A linear system could not be factorized.
class SingularSystemError : public Error {
 public:
  using Error::Error;
};

/// Malformed or inconsistent configuration input.
class ConfigError : public Error {
 public:
  using Error::Error;
};

}  // namespace tts
