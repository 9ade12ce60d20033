#include "blockprnu/error.hpp"

namespace blockprnu {

std::string_view to_string(ErrorKind kind) {
    switch (kind) {
        case ErrorKind::MalformedStream: return "MalformedStream";
        case ErrorKind::TruncatedUnit: return "TruncatedUnit";
        case ErrorKind::BitstreamExhausted: return "BitstreamExhausted";
        case ErrorKind::MissingParameterSet: return "MissingParameterSet";
        case ErrorKind::UnsupportedProfile: return "UnsupportedProfile";
        case ErrorKind::SchemaError: return "SchemaError";
        case ErrorKind::CoverageGap: return "CoverageGap";
        case ErrorKind::RangeError: return "RangeError";
        case ErrorKind::Io: return "IoError";
        case ErrorKind::EmptyInput: return "EmptyInput";
        case ErrorKind::DimensionMismatch: return "DimensionMismatch";
        case ErrorKind::MissingKey: return "MissingKey";
        case ErrorKind::EmptyAccumulator: return "EmptyAccumulator";
        case ErrorKind::AllMaskedOut: return "AllMaskedOut";
        case ErrorKind::Unsupported: return "Unsupported";
        case ErrorKind::DegenerateFingerprint: return "DegenerateFingerprint";
        case ErrorKind::InsufficientFrames: return "InsufficientFrames";
        case ErrorKind::MissingAnchor: return "MissingAnchor";
        case ErrorKind::InsufficientData: return "InsufficientData";
        case ErrorKind::EmptyBucket: return "EmptyBucket";
        case ErrorKind::ConfigError: return "ConfigError";
        case ErrorKind::Usage: return "UsageError";
    }
    return "UnknownError";
}

std::optional<ErrorKind> parse_error_kind(std::string_view name) {
    for (int k = 0; k <= static_cast<int>(ErrorKind::Usage); ++k) {
        if (to_string(static_cast<ErrorKind>(k)) == name) return static_cast<ErrorKind>(k);
    }
    return std::nullopt;
}

int exit_code_for(ErrorKind kind) {
    switch (kind) {
        case ErrorKind::Usage:
        case ErrorKind::ConfigError:
            return 2;
        case ErrorKind::EmptyAccumulator:
        case ErrorKind::AllMaskedOut:
        case ErrorKind::DegenerateFingerprint:
        case ErrorKind::InsufficientFrames:
        case ErrorKind::MissingAnchor:
        case ErrorKind::InsufficientData:
        case ErrorKind::EmptyBucket:
        case ErrorKind::EmptyInput:
            return 4;
        default:
            return 3;
    }
}

}  // namespace blockprnu
