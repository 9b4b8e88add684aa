#pragma once

#include <stdexcept>
#include <string>
#include <string_view>

namespace gridsync {

enum class ErrorKind {
    Parse,
    InvalidParameter,
    MissingField,
    DuplicateLine,
    Disconnected,
    DimensionMismatch,
    Saturation,
    WrongVariant,
    Pole,
    Numerical,
};

std::string_view to_string(ErrorKind kind);

/// Single exception type for the library; `kind()` lets callers map failures
/// onto exit codes or test expectations without parsing the message.
class Error : public std::runtime_error {
public:
    Error(ErrorKind kind, const std::string& message)
        : std::runtime_error(message), kind_(kind) {}

    [[nodiscard]] ErrorKind kind() const noexcept { return kind_; }

private:
    ErrorKind kind_;
};

}  // namespace gridsync
