#pragma once

#include <stdexcept>
#include <string>

namespace fusemap {

/// Malformed or inconsistent input (workload, arch, pool, flags).
class InputError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Every mapping in the searched mapspace oversubscribes some memory level.
class NoFeasibleMapping : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Enumeration or exhaustive search would exceed its configured cap.
class BudgetExceeded : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Two pmappings or keys that were required to be compatible are not.
class IncompatibleJoin : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

}  // namespace fusemap
