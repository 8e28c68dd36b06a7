#pragma once

#include <algorithm>
#include <array>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "core.hpp"
#include "features.hpp"
#include "ingest.hpp"

namespace equipact {

enum class Stage { Raw, Swf, Bwf, Mcf };
enum class Modality { Audio, Kinematic, Fused };

inline constexpr std::array<Stage, 4> kAllStages = {Stage::Raw, Stage::Swf, Stage::Bwf, Stage::Mcf};
inline constexpr std::array<Modality, 3> kAllModalities = {Modality::Audio, Modality::Kinematic, Modality::Fused};

inline constexpr std::string_view to_string(Stage s) noexcept {
    switch (s) {
        case Stage::Raw: return "raw";
        case Stage::Swf: return "swf";
        case Stage::Bwf: return "bwf";
        case Stage::Mcf: return "mcf";
    }
    return "?";
}

inline constexpr std::string_view to_string(Modality m) noexcept {
    switch (m) {
        case Modality::Audio: return "audio";
        case Modality::Kinematic: return "kinematic";
        case Modality::Fused: return "fused";
    }
    return "?";
}

inline Modality parse_modality(std::string_view s) {
    for (const auto m : kAllModalities)
        if (to_string(m) == s) return m;
    throw InvalidArgument("unknown modality '" + std::string(s) + "' (expected audio, kinematic or fused)");
}

struct EvalReport {
    double accuracy = 0.0;
    double recall_major = 0.0;
    double recall_minor = 0.0;
    // confusion[truth][predicted], index 0 = Major, 1 = Minor
    std::array<std::array<std::size_t, 2>, 2> confusion{};
    std::size_t n_eval_segments = 0;
    Stage stage = Stage::Raw;
    Modality modality = Modality::Fused;
};

/// Ground-truth label per segment, or nothing when no single interval covers it.
inline std::vector<std::optional<Activity>> segment_truth(const AnnotationTrack& truth, const SegmentGrid& grid) {
    std::vector<std::optional<Activity>> out(grid.n_segments);
    std::size_t iv = 0;
    for (std::size_t k = 0; k < grid.n_segments; ++k) {
        const double s = grid.start_s(k), e = grid.end_s(k);
        while (iv < truth.intervals.size() && truth.intervals[iv].end_s < e - kGridEpsilon) ++iv;
        if (iv < truth.intervals.size() && truth.intervals[iv].start_s <= s + kGridEpsilon &&
            truth.intervals[iv].end_s >= e - kGridEpsilon)
            out[k] = truth.intervals[iv].label;
    }
    return out;
}

/// Scores segments fully covered by a truth interval and not listed in `exclude`.
inline EvalReport evaluate(std::span<const Activity> pred, const AnnotationTrack& truth, const SegmentGrid& grid,
                           std::span<const std::size_t> exclude = {}, Stage stage = Stage::Raw,
                           Modality modality = Modality::Fused) {
    if (pred.size() != grid.n_segments)
        throw InvalidArgument("prediction count " + std::to_string(pred.size()) + " differs from segment count " +
                              std::to_string(grid.n_segments));
    std::vector<bool> skip(grid.n_segments, false);
    for (const auto k : exclude)
        if (k < skip.size()) skip[k] = true;

    EvalReport r;
    r.stage = stage;
    r.modality = modality;
    const auto labels = segment_truth(truth, grid);
    for (std::size_t k = 0; k < grid.n_segments; ++k) {
        if (skip[k] || !labels[k]) continue;
        ++r.confusion[state_index(*labels[k])][state_index(pred[k])];
        ++r.n_eval_segments;
    }
    if (r.n_eval_segments == 0) throw InvalidArgument("no evaluable segments: annotations cover nothing outside training");
    r.accuracy = static_cast<double>(r.confusion[0][0] + r.confusion[1][1]) / static_cast<double>(r.n_eval_segments);
    const auto major = r.confusion[0][0] + r.confusion[0][1];
    const auto minor = r.confusion[1][0] + r.confusion[1][1];
    r.recall_major = major ? static_cast<double>(r.confusion[0][0]) / static_cast<double>(major) : 0.0;
    r.recall_minor = minor ? static_cast<double>(r.confusion[1][1]) / static_cast<double>(minor) : 0.0;
    return r;
}

}  // namespace equipact
