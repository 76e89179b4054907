#pragma once

#include <stdexcept>
#include <string>

namespace mdf {

/// Argument outside the mathematical domain of an operation (negative rate, p = 1, ...).
class DomainError : public std::domain_error {
  public:
    using std::domain_error::domain_error;
};

/// Caller violated a usage precondition (bad sizes, mismatched lengths, limits).
class UsageError : public std::invalid_argument {
  public:
    using std::invalid_argument::invalid_argument;
};

/// The requested target cannot be met (planner).
class InfeasibleError : public std::runtime_error {
  public:
    using std::runtime_error::runtime_error;
};

/// Delay chain with E[D] >= C has no stationary law.
class UnstableError : public std::runtime_error {
  public:
    using std::runtime_error::runtime_error;
};

class NonConvergenceError : public std::runtime_error {
  public:
    using std::runtime_error::runtime_error;
};

}  // namespace mdf
