#include "citeaudit/common/error.hpp"

namespace citeaudit {

std::string_view to_string(ErrorCode code) noexcept {
    switch (code) {
        case ErrorCode::InvalidArgument: return "InvalidArgument";
        case ErrorCode::InvalidUrl: return "InvalidUrl";
        case ErrorCode::MalformedPayload: return "MalformedPayload";
        case ErrorCode::SchemaMismatch: return "SchemaMismatch";
        case ErrorCode::Io: return "IoError";
        case ErrorCode::ConfigInvalid: return "ConfigInvalid";
        case ErrorCode::StageInputMissing: return "StageInputMissing";
        case ErrorCode::BackendUnavailable: return "BackendUnavailable";
        case ErrorCode::MissingInput: return "MissingInput";
        case ErrorCode::MalformedOutput: return "MalformedOutput";
        case ErrorCode::InvalidLabel: return "InvalidLabel";
        case ErrorCode::InsufficientAnnotators: return "InsufficientAnnotators";
        case ErrorCode::EmptyResponse: return "EmptyResponse";
        case ErrorCode::DuplicateUrl: return "DuplicateUrl";
        case ErrorCode::UnsupportedFormat: return "UnsupportedFormat";
        case ErrorCode::ValidationFailed: return "ValidationFailed";
        case ErrorCode::DegenerateMarginals: return "DegenerateMarginals";
        case ErrorCode::NoVariation: return "NoVariation";
        case ErrorCode::ZeroRowVariance: return "ZeroRowVariance";
        case ErrorCode::ZeroVariance: return "ZeroVariance";
        case ErrorCode::AllTied: return "AllTied";
        case ErrorCode::SingleGroup: return "SingleGroup";
    }
    return "Unknown";
}

}  // namespace citeaudit
