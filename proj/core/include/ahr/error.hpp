#pragma once

#include <stdexcept>
#include <string>

namespace ahr {

/// Caller supplied something outside an operation's domain (bad dimension,
/// non-finite value, parameter out of range).
class InvalidInput : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

/// Transition matrix is not a valid irreducible chain with a spectral gap.
class InvalidChain : public InvalidInput {
 public:
  using InvalidInput::InvalidInput;
};

/// Chain is valid but outside the supported class (non-reversible).
class UnsupportedChain : public InvalidInput {
 public:
  using InvalidInput::InvalidInput;
};

/// Error family / moment exponent combination has no finite moment.
class InvalidModel : public InvalidInput {
 public:
  using InvalidInput::InvalidInput;
};

/// Requested feature exists in the data model but is not implemented
/// for this operation (e.g. time-varying covariate maps).
class Unsupported : public std::logic_error {
 public:
  using std::logic_error::logic_error;
};

class NumericalFailure : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

class IoError : public std::runtime_error {
 public:
  IoError(const std::string& path, const std::string& what)
      : std::runtime_error(path + ": " + what), path_(path) {}

  const std::string& path() const noexcept { return path_; }

 private:
  std::string path_;
};

}  // namespace ahr
