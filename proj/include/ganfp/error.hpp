#pragma once

#include <stdexcept>
#include <string>
#include <string_view>

namespace ganfp {

enum class ErrorCode {
    ConstantInput,
    LengthMismatch,
    TooSmall,
    MalformedPyramid,
    InvalidConfig,
    EmptyInput,
    ShapeMismatch,
    MixedDenoisers,
    NotEnoughResiduals,
    TooFewPoints,
    LagTooLarge,
    EmptySet,
    EmptyFingerprintList,
    EmptyClass,
    UnknownLabel,
    ParseError,
    MissingFile,
    DuplicateLabel,
    TooFewImages,
    UnsupportedCodec,
    FormatError,
    IoError,
};

constexpr std::string_view to_string(ErrorCode code) noexcept {
    switch (code) {
    case ErrorCode::ConstantInput: return "ConstantInput";
    case ErrorCode::LengthMismatch: return "LengthMismatch";
    case ErrorCode::TooSmall: return "TooSmall";
    case ErrorCode::MalformedPyramid: return "MalformedPyramid";
    case ErrorCode::InvalidConfig: return "InvalidConfig";
    case ErrorCode::EmptyInput: return "EmptyInput";
    case ErrorCode::ShapeMismatch: return "ShapeMismatch";
    case ErrorCode::MixedDenoisers: return "MixedDenoisers";
    case ErrorCode::NotEnoughResiduals: return "NotEnoughResiduals";
    case ErrorCode::TooFewPoints: return "TooFewPoints";
    case ErrorCode::LagTooLarge: return "LagTooLarge";
    case ErrorCode::EmptySet: return "EmptySet";
    case ErrorCode::EmptyFingerprintList: return "EmptyFingerprintList";
    case ErrorCode::EmptyClass: return "EmptyClass";
    case ErrorCode::UnknownLabel: return "UnknownLabel";
    case ErrorCode::ParseError: return "ParseError";
    case ErrorCode::MissingFile: return "MissingFile";
    case ErrorCode::DuplicateLabel: return "DuplicateLabel";
    case ErrorCode::TooFewImages: return "TooFewImages";
    case ErrorCode::UnsupportedCodec: return "UnsupportedCodec";
    case ErrorCode::FormatError: return "FormatError";
    case ErrorCode::IoError: return "IoError";
    }
    return "Unknown";
}

/// Every failure raised by the library carries one of the codes above so the
/// CLI can print a machine-readable error line.
class Error : public std::runtime_error {
public:
    Error(ErrorCode code, const std::string& what)
        : std::runtime_error(what), code_(code) {}

    ErrorCode code() const noexcept { return code_; }

private:
    ErrorCode code_;
};

[[noreturn]] inline void fail(ErrorCode code, const std::string& what) {
    throw Error(code, what);
}

}  // namespace ganfp
