#pragma once

#include <stdexcept>
#include <string>
#include <string_view>

namespace citeaudit {

enum class ErrorCode {
    InvalidArgument,
    InvalidUrl,
    MalformedPayload,
    SchemaMismatch,
    Io,
    ConfigInvalid,
    StageInputMissing,
    BackendUnavailable,
    MissingInput,
    MalformedOutput,
    InvalidLabel,
    InsufficientAnnotators,
    EmptyResponse,
    DuplicateUrl,
    UnsupportedFormat,
    ValidationFailed,
    // statistics
    DegenerateMarginals,
    NoVariation,
    ZeroRowVariance,
    ZeroVariance,
    AllTied,
    SingleGroup,
};

std::string_view to_string(ErrorCode code) noexcept;

class Error : public std::runtime_error {
public:
    Error(ErrorCode code, const std::string& message)
        : std::runtime_error(std::string(to_string(code)) + ": " + message), code_(code) {}

    ErrorCode code() const noexcept { return code_; }

private:
    ErrorCode code_;
};

[[noreturn]] inline void fail(ErrorCode code, const std::string& message) {
    throw Error(code, message);
}

}  // namespace citeaudit
