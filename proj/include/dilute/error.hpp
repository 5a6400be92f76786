#pragma once

#include <stdexcept>
#include <string>

namespace dilute {

enum class ErrorCode {
    InvalidArgument,
    BoundStateSuspected,
    DegenerateTail,
    BoxTooSmall,
    InvalidTruncation,
    GradientAtZeroAmplitude,
    NonFiniteSample,
    NegativeTempleGap,
    Io,
};

inline const char* to_string(ErrorCode code) {
    switch (code) {
    case ErrorCode::InvalidArgument: return "InvalidArgument";
    case ErrorCode::BoundStateSuspected: return "BoundStateSuspected";
    case ErrorCode::DegenerateTail: return "DegenerateTail";
    case ErrorCode::BoxTooSmall: return "BoxTooSmall";
    case ErrorCode::InvalidTruncation: return "InvalidTruncation";
    case ErrorCode::GradientAtZeroAmplitude: return "GradientAtZeroAmplitude";
    case ErrorCode::NonFiniteSample: return "NonFiniteSample";
    case ErrorCode::NegativeTempleGap: return "NegativeTempleGap";
    case ErrorCode::Io: return "Io";
    }
    return "Unknown";
}

// Every failure raised by the library carries a code so callers can branch
// on the kind without parsing messages.
class Error : public std::runtime_error {
public:
    Error(ErrorCode code, const std::string& what)
        : std::runtime_error(std::string(to_string(code)) + ": " + what), code_(code) {}

    ErrorCode code() const noexcept { return code_; }

private:
    ErrorCode code_;
};

[[noreturn]] inline void fail(ErrorCode code, const std::string& what) { throw Error(code, what); }

inline void require(bool condition, const std::string& what) {
    if (!condition) fail(ErrorCode::InvalidArgument, what);
}

} // namespace dilute
