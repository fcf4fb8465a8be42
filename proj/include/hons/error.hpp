#pragma once

#include <stdexcept>
#include <string>

namespace hons {

/// Raised for rejected inputs: bad grid sizes, invalid parameters, broken
/// preconditions. The CLI maps it to exit status 2.
class ValidationError : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

/// Raised when a run trips a numerical guard (boundary contamination,
/// non-finite values, explicit stability limits). The CLI maps it to exit
/// status 3.
class GuardError : public std::runtime_error {
 public:
  GuardError(const std::string& what, double time)
      : std::runtime_error(what), time_(time) {}

  double time() const noexcept { return time_; }

 private:
  double time_;
};

}  // namespace hons
