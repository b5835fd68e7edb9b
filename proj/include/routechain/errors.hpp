#pragma once

#include <stdexcept>
#include <string>

namespace routechain {

/// A precondition on an argument was violated.
class InvalidArgument : public std::invalid_argument {
public:
    using std::invalid_argument::invalid_argument;
};

/// A numerical procedure did not reach its tolerance.
class NonConvergence : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

namespace detail {
inline void require(bool condition, const std::string& message) {
    if (!condition) throw InvalidArgument(message);
}
}  // namespace detail

/// Sink for non-fatal diagnostics (asymptotic-regime warnings and the like).
/// Defaults to stderr; the CLI and bindings may redirect it.
using WarningHandler = void (*)(const std::string&);
void set_warning_handler(WarningHandler handler) noexcept;
void warn(const std::string& message);

}  // namespace routechain
