#pragma once

#include <stdexcept>
#include <string>
#include <string_view>

namespace classbot {

enum class ErrorKind {
    invalid_input,
    not_found,
    conflict,
    unavailable,
    authentication,
    permission_denied,
    rate_limited,
    integrity,
    io,
    internal,
};

std::string_view to_string(ErrorKind kind);

/// The single exception type thrown across module boundaries. The kind
/// drives HTTP status mapping in the API layer.
class Error : public std::runtime_error {
public:
    Error(ErrorKind kind, const std::string& message)
        : std::runtime_error(message), kind_(kind) {}

    ErrorKind kind() const noexcept { return kind_; }

private:
    ErrorKind kind_;
};

}  // namespace classbot
