#ifndef TBC_ERRORS_HPP
#define TBC_ERRORS_HPP

#include <stdexcept>
#include <string>

namespace tbc {

/// Precondition or type invariant violated by the caller.
class ContractViolation : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

/// A limit-theorem hypothesis (e.g. the minimum window size) does not hold.
class HypothesisViolation : public std::domain_error {
 public:
  using std::domain_error::domain_error;
};

/// Replicated values have (numerically) zero variance and cannot be standardized.
class DegenerateDistribution : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Nerve enumeration exceeded the supported simplex size.
class CliqueLimitExceeded : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Malformed or inconsistent run configuration.
class ConfigError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

inline void require(bool cond, const std::string& what) {
  if (!cond) throw ContractViolation(what);
}

}  // namespace tbc

#endif  // TBC_ERRORS_HPP
