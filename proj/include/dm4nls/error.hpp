#pragma once

#include <stdexcept>
#include <string>

namespace dm4nls {

// Precondition or configuration violation. Maps to CLI exit status 2.
class ValidationError : public std::invalid_argument {
public:
    using std::invalid_argument::invalid_argument;
};

// Non-finite state, failed contraction, and similar numerical failures.
// Maps to CLI exit status 3.
class NumericalError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

namespace detail {

inline void require(bool ok, const std::string& what) {
    if (!ok) throw ValidationError(what);
}

}  // namespace detail
}  // namespace dm4nls
