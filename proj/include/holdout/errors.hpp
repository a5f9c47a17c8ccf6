#pragma once

#include <stdexcept>
#include <string>

namespace holdout {

/// Malformed input: shape mismatch, out-of-range label, non-finite value.
class InputError : public std::invalid_argument {
public:
    using std::invalid_argument::invalid_argument;
};

/// The oracle's query budget would be exceeded.
class BudgetError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

/// Operation not allowed in the object's current state.
class StateError : public std::logic_error {
public:
    using std::logic_error::logic_error;
};

/// Parameters outside the domain where a formula or lemma applies.
class DomainError : public std::domain_error {
public:
    using std::domain_error::domain_error;
};

/// Operation not defined for the given configuration (e.g. a binary-only attack with m > 2).
class UnsupportedError : public std::logic_error {
public:
    using std::logic_error::logic_error;
};

/// Several labelings were consistent with the observed accuracies.
class AmbiguityError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

/// No labeling is consistent with the observed accuracies; the oracle cannot be honest.
class InconsistentOracleError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

/// An enumeration or search would exceed its configured cap.
class CapacityError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

}  // namespace holdout
