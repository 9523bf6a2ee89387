#pragma once

#include <stdexcept>
#include <string>

namespace sfe {

enum class ErrorCode {
    MissingColumn,
    EmptyFile,
    UnknownColumn,
    AllMissingColumn,
    DegenerateDistance,
    MissingSourceColumn,
    EmptySelection,
    TooManyComponents,
    KTooLarge,
    LengthMismatch,
    TooFewValues,
    TooFewRows,
    DimensionMismatch,
    NonFiniteLoss,
    ConstantTarget,
    EmptyInput,
    UnsupportedModel,
    SchemaMismatch,
    ConfigError,
    IoError,
};

const char* error_code_name(ErrorCode code);

/// Exception carrying a stable error code so callers can branch on the cause.
class Error : public std::runtime_error {
public:
    Error(ErrorCode code, const std::string& message)
        : std::runtime_error(std::string(error_code_name(code)) + ": " + message), code_(code) {}

    ErrorCode code() const { return code_; }

private:
    ErrorCode code_;
};

} // namespace sfe
