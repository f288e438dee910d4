#pragma once

#include <stdexcept>
#include <string>

namespace mmarc {

// Every failure the library can produce, one code per contract-level error.
enum class ErrorCode {
    // grid codec
    RaggedRows,
    ValueOutOfRange,
    SizeOutOfRange,
    Malformed,
    // render
    GeometryMismatch,
    ColorMismatch,
    // dataset
    SchemaError,
    InsufficientPairs,
    InsufficientTasks,
    // prompt kit
    MissingArgument,
    GroundTruthLeak,
    // backend
    AuthError,
    RateLimited,
    TransportError,
    ProviderSchemaError,
    ReplayMiss,
    StorageError,
    // extraction
    NoAnswerFound,
    EmptyResponse,
    // pipeline
    SummarizationFailed,
    // eval
    MissingGroundTruth,
    CountMismatch,
    // operator surface
    UsageError,
    ConfigError,
    IoError,
};

const char* error_code_name(ErrorCode code);

class Error : public std::runtime_error {
  public:
    Error(ErrorCode code, const std::string& message)
        : std::runtime_error(std::string(error_code_name(code)) + ": " + message), code_(code) {}

    ErrorCode code() const { return code_; }

  private:
    ErrorCode code_;
};

}  // namespace mmarc
