#pragma once

#include <cstdint>
#include <stdexcept>
#include <string>

namespace mici {

enum class ErrorCode : std::uint8_t {
    Normalization,
    Monotonicity,
    Range,
    FullSet,
    DimensionMismatch,
    NonBinaryLabel,
    InvalidExponent,
    InvalidVariance,
    LabelOutOfRange,
    InvalidStd,
    SizeMismatch,
    EmptyBagSet,
    InvalidConfig,
    InvalidSweep,
    InsufficientBackground,
    DegenerateRange,
    Domain,
    LengthMismatch,
    SingleClass,
    Parse,
    InconsistentLabel,
    RaggedWidth,
    Schema,
    Io,
};

inline const char* to_string(ErrorCode code) {
    switch (code) {
        case ErrorCode::Normalization: return "NormalizationError";
        case ErrorCode::Monotonicity: return "MonotonicityError";
        case ErrorCode::Range: return "RangeError";
        case ErrorCode::FullSet: return "FullSetError";
        case ErrorCode::DimensionMismatch: return "DimensionMismatch";
        case ErrorCode::NonBinaryLabel: return "NonBinaryLabel";
        case ErrorCode::InvalidExponent: return "InvalidExponent";
        case ErrorCode::InvalidVariance: return "InvalidVariance";
        case ErrorCode::LabelOutOfRange: return "LabelOutOfRange";
        case ErrorCode::InvalidStd: return "InvalidStd";
        case ErrorCode::SizeMismatch: return "SizeMismatch";
        case ErrorCode::EmptyBagSet: return "EmptyBagSet";
        case ErrorCode::InvalidConfig: return "InvalidConfig";
        case ErrorCode::InvalidSweep: return "InvalidSweep";
        case ErrorCode::InsufficientBackground: return "InsufficientBackground";
        case ErrorCode::DegenerateRange: return "DegenerateRange";
        case ErrorCode::Domain: return "DomainError";
        case ErrorCode::LengthMismatch: return "LengthMismatch";
        case ErrorCode::SingleClass: return "SingleClass";
        case ErrorCode::Parse: return "ParseError";
        case ErrorCode::InconsistentLabel: return "InconsistentLabel";
        case ErrorCode::RaggedWidth: return "RaggedWidth";
        case ErrorCode::Schema: return "SchemaError";
        case ErrorCode::Io: return "IoError";
    }
    return "Error";
}

/// Base exception for every failure raised by the library. The code is
/// stable and meant for programmatic dispatch; the message is for humans.
class Error : public std::runtime_error {
public:
    Error(ErrorCode code, const std::string& what)
        : std::runtime_error(std::string(to_string(code)) + ": " + what), code_(code) {}

    ErrorCode code() const noexcept { return code_; }

private:
    ErrorCode code_;
};

/// Raised when g(subset) > g(superset) for an immediate superset.
class MonotonicityError : public Error {
public:
    MonotonicityError(std::uint32_t subset, std::uint32_t superset, const std::string& what)
        : Error(ErrorCode::Monotonicity, what), subset_(subset), superset_(superset) {}

    std::uint32_t subset() const noexcept { return subset_; }
    std::uint32_t superset() const noexcept { return superset_; }

private:
    std::uint32_t subset_;
    std::uint32_t superset_;
};

/// Input-file error tied to a 1-based line number (0 when not applicable).
class LineError : public Error {
public:
    LineError(ErrorCode code, std::size_t line, const std::string& what)
        : Error(code, "line " + std::to_string(line) + ": " + what), line_(line) {}

    std::size_t line() const noexcept { return line_; }

private:
    std::size_t line_;
};

}  // namespace mici
