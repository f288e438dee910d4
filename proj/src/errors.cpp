#include "mmarc/errors.hpp"

namespace mmarc {

const char* error_code_name(ErrorCode code) {
    switch (code) {
        case ErrorCode::RaggedRows: return "RaggedRows";
        case ErrorCode::ValueOutOfRange: return "ValueOutOfRange";
        case ErrorCode::SizeOutOfRange: return "SizeOutOfRange";
        case ErrorCode::Malformed: return "Malformed";
        case ErrorCode::GeometryMismatch: return "GeometryMismatch";
        case ErrorCode::ColorMismatch: return "ColorMismatch";
        case ErrorCode::SchemaError: return "SchemaError";
        case ErrorCode::InsufficientPairs: return "InsufficientPairs";
        case ErrorCode::InsufficientTasks: return "InsufficientTasks";
        case ErrorCode::MissingArgument: return "MissingArgument";
        case ErrorCode::GroundTruthLeak: return "GroundTruthLeak";
        case ErrorCode::AuthError: return "AuthError";
        case ErrorCode::RateLimited: return "RateLimited";
        case ErrorCode::TransportError: return "TransportError";
        case ErrorCode::ProviderSchemaError: return "ProviderSchemaError";
        case ErrorCode::ReplayMiss: return "ReplayMiss";
        case ErrorCode::StorageError: return "StorageError";
        case ErrorCode::NoAnswerFound: return "NoAnswerFound";
        case ErrorCode::EmptyResponse: return "EmptyResponse";
        case ErrorCode::SummarizationFailed: return "SummarizationFailed";
        case ErrorCode::MissingGroundTruth: return "MissingGroundTruth";
        case ErrorCode::CountMismatch: return "CountMismatch";
        case ErrorCode::UsageError: return "UsageError";
        case ErrorCode::ConfigError: return "ConfigError";
        case ErrorCode::IoError: return "IoError";
    }
    return "UnknownError";
}

}  // namespace mmarc
