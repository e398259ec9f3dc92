#pragma once

#include <stdexcept>

namespace qexam {

// Dense state vectors only; 2^24 amplitudes is the hard ceiling.
inline constexpr int kMaxQubits = 24;

// A scenario or config field failed validation (CLI exit code 3).
class ConfigError : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

// A run exceeded simulator resources: qubit budget or an exhausted
// resource pool (CLI exit code 4).
class ResourceError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// A quantum state lost all probability mass; indicates a corrupted state.
class InternalStateError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

}  // namespace qexam
