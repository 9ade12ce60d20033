#pragma once

#include <optional>
#include <stdexcept>
#include <string>
#include <string_view>

namespace blockprnu {

enum class ErrorKind {
    // bitstream
    MalformedStream,
    TruncatedUnit,
    BitstreamExhausted,
    MissingParameterSet,
    UnsupportedProfile,
    SchemaError,
    CoverageGap,
    RangeError,
    Io,
    // numerics
    EmptyInput,
    DimensionMismatch,
    MissingKey,
    EmptyAccumulator,
    AllMaskedOut,
    Unsupported,
    DegenerateFingerprint,
    InsufficientFrames,
    MissingAnchor,
    InsufficientData,
    EmptyBucket,
    ConfigError,
    Usage,
};

std::string_view to_string(ErrorKind kind);
std::optional<ErrorKind> parse_error_kind(std::string_view name);

// CLI exit-code class: 2 usage, 3 input format, 4 computation degenerate.
int exit_code_for(ErrorKind kind);

class Error : public std::runtime_error {
public:
    Error(ErrorKind kind, const std::string& what)
        : std::runtime_error(std::string(to_string(kind)) + ": " + what), kind_(kind) {}

    ErrorKind kind() const noexcept { return kind_; }

private:
    ErrorKind kind_;
};

[[noreturn]] inline void fail(ErrorKind kind, const std::string& what) { throw Error(kind, what); }

}  // namespace blockprnu
