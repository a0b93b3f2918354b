#pragma once

#include <stdexcept>
#include <string>

namespace kinlim {

// Violated input contract (bad arguments, bad config).
class PreconditionError : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

// A numerical procedure failed (non-convergence, vacuum, singular system).
class NumericalError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

inline void require(bool ok, const std::string& what) {
  if (!ok) throw PreconditionError(what);
}

}  // namespace kinlim
