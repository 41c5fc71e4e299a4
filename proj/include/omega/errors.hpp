#pragma once

#include <stdexcept>
#include <string>

namespace omega {

/// Raised when an iteration fails to converge or a state stops being finite.
class numeric_failure : public std::runtime_error {
 public:
  explicit numeric_failure(const std::string& what, double time = 0.0, long iterations = 0)
      : std::runtime_error(what), time_(time), iterations_(iterations) {}

  double time() const noexcept { return time_; }
  long iterations() const noexcept { return iterations_; }

 private:
  double time_;
  long iterations_;
};

}  // namespace omega
