#pragma once

#include <stdexcept>
#include <string>

namespace fedsciml {

/// Caller violated a precondition (bad arguments, mismatched shapes, ...).
class UsageError : public std::invalid_argument {
public:
    explicit UsageError(const std::string& what) : std::invalid_argument(what) {}
};

/// A computation produced a non-finite value or failed to converge.
class NumericError : public std::runtime_error {
public:
    explicit NumericError(const std::string& what) : std::runtime_error(what) {}
};

} // namespace fedsciml
