#pragma once

// Shared vocabulary for the activity-recognition pipeline: the binary
// activity label, the error hierarchy, and the fixed segment-grid constants.

#include <cmath>
#include <cstddef>
#include <cstdint>
#include <stdexcept>
#include <string>
#include <string_view>

namespace equipact {

/// Value-adding (Major) vs supporting (Minor) equipment activity.
enum class Activity : std::int8_t { Minor = -1, Major = 1 };

inline constexpr int to_sign(Activity a) noexcept { return static_cast<int>(a); }

inline constexpr Activity from_sign(double v) noexcept {
    return v >= 0.0 ? Activity::Major : Activity::Minor;
}

inline constexpr std::string_view to_string(Activity a) noexcept {
    return a == Activity::Major ? "major" : "minor";
}

/// State index used by the 2-state models: Major = 0, Minor = 1.
inline constexpr std::size_t state_index(Activity a) noexcept {
    return a == Activity::Major ? 0 : 1;
}

inline constexpr Activity state_activity(std::size_t i) noexcept {
    return i == 0 ? Activity::Major : Activity::Minor;
}

/// Base class for every error raised by the library.
class Error : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

/// Input that violates an operation's contract (bad parameters, bad shapes).
class InvalidArgument : public Error {
public:
    using Error::Error;
};

/// Malformed binary input. Carries the byte offset where decoding failed.
class DecodeError : public Error {
public:
    DecodeError(const std::string& what, std::uint64_t offset)
        : Error(what + " (at byte offset " + std::to_string(offset) + ")"), offset_(offset) {}

    std::uint64_t offset() const noexcept { return offset_; }

private:
    std::uint64_t offset_;
};

/// Well-formed input using an encoding the decoder does not handle.
class UnsupportedFormat : public Error {
public:
    using Error::Error;
};

/// Malformed text input (CSV). Carries the 1-based data row number, 0 for the header.
class FormatError : public Error {
public:
    FormatError(const std::string& what, std::size_t row)
        : Error(what + " (row " + std::to_string(row) + ")"), row_(row) {}

    std::size_t row() const noexcept { return row_; }

private:
    std::size_t row_;
};

/// Feature matrices whose segment grids disagree.
class AlignmentError : public Error {
public:
    using Error::Error;
};

// Segment grid constants.
inline constexpr double kSegmentSeconds = 0.120;
inline constexpr int kDefaultAudioRateHz = 44100;
inline constexpr int kDefaultKinematicRateHz = 100;

// Tolerance used when snapping times onto the segment grid.
inline constexpr double kGridEpsilon = 1e-9;

inline bool all_finite(const double* p, std::size_t n) noexcept {
    for (std::size_t i = 0; i < n; ++i)
        if (!std::isfinite(p[i])) return false;
    return true;
}

}  // namespace equipact
