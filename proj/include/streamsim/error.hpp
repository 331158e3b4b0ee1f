#pragma once

#include <stdexcept>
#include <string>

namespace streamsim {

enum class ErrKind {
    DimensionOverflow,
    InvalidBound,
    IndexOutOfRange,
    AddressOutOfRange,
    InvalidModeIndex,
    NotConfigured,
    StreamOverrun,
    ShapeMismatch,
    LaneOutOfRange,
    DimensionMismatch,
    IndivisibleWorkload,
    LayoutOverlap,
    InsufficientScratch,
    OutOfMemory,
    ConfigParse,
    IoError,
    Deadlock,
    NotRun,
    CorrectnessMismatch,
};

inline const char* to_string(ErrKind k) {
    switch (k) {
    case ErrKind::DimensionOverflow:   return "DimensionOverflow";
    case ErrKind::InvalidBound:        return "InvalidBound";
    case ErrKind::IndexOutOfRange:     return "IndexOutOfRange";
    case ErrKind::AddressOutOfRange:   return "AddressOutOfRange";
    case ErrKind::InvalidModeIndex:    return "InvalidModeIndex";
    case ErrKind::NotConfigured:       return "NotConfigured";
    case ErrKind::StreamOverrun:       return "StreamOverrun";
    case ErrKind::ShapeMismatch:       return "ShapeMismatch";
    case ErrKind::LaneOutOfRange:      return "LaneOutOfRange";
    case ErrKind::DimensionMismatch:   return "DimensionMismatch";
    case ErrKind::IndivisibleWorkload: return "IndivisibleWorkload";
    case ErrKind::LayoutOverlap:       return "LayoutOverlap";
    case ErrKind::InsufficientScratch: return "InsufficientScratch";
    case ErrKind::OutOfMemory:         return "OutOfMemory";
    case ErrKind::ConfigParse:         return "ConfigParse";
    case ErrKind::IoError:             return "IoError";
    case ErrKind::Deadlock:            return "Deadlock";
    case ErrKind::NotRun:              return "NotRun";
    case ErrKind::CorrectnessMismatch: return "CorrectnessMismatch";
    }
    return "Unknown";
}

class SimError : public std::runtime_error {
public:
    SimError(ErrKind kind, const std::string& msg)
        : std::runtime_error(std::string(to_string(kind)) + ": " + msg), kind_(kind) {}

    ErrKind kind() const { return kind_; }

private:
    ErrKind kind_;
};

[[noreturn]] inline void raise(ErrKind kind, const std::string& msg) {
    throw SimError(kind, msg);
}

}  // namespace streamsim
