#pragma once

#include <stdexcept>
#include <string>

namespace structrates {

/// Raised when a caller breaks an operation's precondition (bad shapes,
/// out-of-range parameters, points outside a problem's support).
class ContractViolation : public std::invalid_argument {
public:
  using std::invalid_argument::invalid_argument;
};

/// A margin profile has too few usable points for a power-law fit. Usually
/// the problem sits in the no-density regime or the threshold range is off.
class ProfileDegenerate : public std::runtime_error {
public:
  using std::runtime_error::runtime_error;
};

/// Excess risk collapsed to zero over the fit window, so the log-log slope
/// is undefined.
class ExponentialRegime : public std::runtime_error {
public:
  using std::runtime_error::runtime_error;
};

inline void require(bool condition, const std::string& message) {
  if (!condition) throw ContractViolation(message);
}

}  // namespace structrates
