#include "gridsync/error.hpp"

namespace gridsync {

std::string_view to_string(ErrorKind kind) {
    switch (kind) {
        case ErrorKind::Parse: return "parse";
        case ErrorKind::InvalidParameter: return "invalid_parameter";
        case ErrorKind::MissingField: return "missing_field";
        case ErrorKind::DuplicateLine: return "duplicate_line";
        case ErrorKind::Disconnected: return "disconnected";
        case ErrorKind::DimensionMismatch: return "dimension_mismatch";
        case ErrorKind::Saturation: return "saturation";
        case ErrorKind::WrongVariant: return "wrong_variant";
        case ErrorKind::Pole: return "pole";
        case ErrorKind::Numerical: return "numerical";
    }
    return "unknown";
}

}  // namespace gridsync
