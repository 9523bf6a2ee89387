#include "sfe/error.hpp"

namespace sfe {

const char* error_code_name(ErrorCode code) {
    switch (code) {
        case ErrorCode::MissingColumn: return "MissingColumn";
        case ErrorCode::EmptyFile: return "EmptyFile";
        case ErrorCode::UnknownColumn: return "UnknownColumn";
        case ErrorCode::AllMissingColumn: return "AllMissingColumn";
        case ErrorCode::DegenerateDistance: return "DegenerateDistance";
        case ErrorCode::MissingSourceColumn: return "MissingSourceColumn";
        case ErrorCode::EmptySelection: return "EmptySelection";
        case ErrorCode::TooManyComponents: return "TooManyComponents";
        case ErrorCode::KTooLarge: return "KTooLarge";
        case ErrorCode::LengthMismatch: return "LengthMismatch";
        case ErrorCode::TooFewValues: return "TooFewValues";
        case ErrorCode::TooFewRows: return "TooFewRows";
        case ErrorCode::DimensionMismatch: return "DimensionMismatch";
        case ErrorCode::NonFiniteLoss: return "NonFiniteLoss";
        case ErrorCode::ConstantTarget: return "ConstantTarget";
        case ErrorCode::EmptyInput: return "EmptyInput";
        case ErrorCode::UnsupportedModel: return "UnsupportedModel";
        case ErrorCode::SchemaMismatch: return "SchemaMismatch";
        case ErrorCode::ConfigError: return "ConfigError";
        case ErrorCode::IoError: return "IoError";
    }
    return "UnknownError";
}

} // namespace sfe
