#pragma once

// Label-sequence post-processing: majority-vote window filtering (small and
// big windows) followed by a two-state Viterbi smoother.

#include <algorithm>
#include <array>
#include <cmath>
#include <cstdint>
#include <span>
#include <vector>

#include "core.hpp"

namespace equipact {

/// Per-segment labels with the decision values and P(Major) they came from.
struct LabelSequence {
    std::vector<Activity> labels;
    std::vector<double> scores;
    std::vector<double> probs;

    std::size_t size() const noexcept { return labels.size(); }

    void validate() const {
        if (!scores.empty() && scores.size() != labels.size())
            throw InvalidArgument("score count differs from label count");
        if (!probs.empty() && probs.size() != labels.size())
            throw InvalidArgument("probability count differs from label count");
        for (const double p : probs)
            if (!(p >= 0.0 && p <= 1.0)) throw InvalidArgument("probabilities must lie in [0, 1]");
    }
};

inline constexpr std::size_t kSmallWindow = 2;
inline constexpr std::size_t kBigWindow = 6;

/// Each label is replaced by the majority of up to `w` labels on either side
/// (itself excluded, clamped at the ends), read from the unfiltered input.
/// Ties keep the original label.
inline LabelSequence window_filter(const LabelSequence& in, std::size_t w) {
    if (w < 1) throw InvalidArgument("window filter half-width must be at least 1");
    LabelSequence out = in;
    const std::size_t n = in.size();
    for (std::size_t t = 0; t < n; ++t) {
        const std::size_t lo = t >= w ? t - w : 0;
        const std::size_t hi = std::min(n - 1, t + w);
        int votes = 0;
        for (std::size_t k = lo; k <= hi; ++k)
            if (k != t) votes += to_sign(in.labels[k]);
        if (votes != 0) out.labels[t] = from_sign(votes);
    }
    return out;
}

/// Row-stochastic 2x2 transitions over (Major, Minor) plus the initial distribution.
struct TransitionModel {
    std::array<std::array<double, 2>, 2> transition{{{0.5, 0.5}, {0.5, 0.5}}};
    std::array<double, 2> initial{0.5, 0.5};
};

/// Add-one smoothed transition counts summed over one or more runs. The
/// initial distribution is the add-one smoothed state frequency.
inline TransitionModel estimate_transitions(std::span<const std::vector<Activity>> runs) {
    std::array<std::array<double, 2>, 2> counts{};
    std::array<double, 2> occupancy{};
    std::size_t total = 0;
    for (const auto& run : runs) {
        for (std::size_t t = 0; t < run.size(); ++t) {
            occupancy[state_index(run[t])] += 1.0;
            ++total;
            if (t > 0) counts[state_index(run[t - 1])][state_index(run[t])] += 1.0;
        }
    }
    if (total < 2) throw InvalidArgument("transition estimation needs at least two labels");
    TransitionModel tm;
    for (std::size_t i = 0; i < 2; ++i) {
        const double row = counts[i][0] + counts[i][1];
        for (std::size_t j = 0; j < 2; ++j) tm.transition[i][j] = (counts[i][j] + 1.0) / (row + 2.0);
        tm.initial[i] = (occupancy[i] + 1.0) / (static_cast<double>(total) + 2.0);
    }
    return tm;
}

inline TransitionModel estimate_transitions(const LabelSequence& labels) {
    const std::array<std::vector<Activity>, 1> runs{labels.labels};
    return estimate_transitions(runs);
}

/// Probabilities are clamped to [kEmissionFloor, 1 - kEmissionFloor] before
/// taking logs.
inline constexpr double kEmissionFloor = 1e-12;

/// Markov-chain filter: Viterbi path with emissions P(Major) = probs[t],
/// P(Minor) = 1 - probs[t]. Equal-score choices prefer the state matching the
/// input label at that index.
inline LabelSequence mcf(const LabelSequence& in, const TransitionModel& tm) {
    in.validate();
    const std::size_t n = in.size();
    if (in.probs.size() != n) throw InvalidArgument("Markov-chain filter needs one probability per label");
    LabelSequence out = in;
    if (n == 0) return out;

    auto log_emit = [&](std::size_t t, std::size_t s) {
        const double p = std::clamp(in.probs[t], kEmissionFloor, 1.0 - kEmissionFloor);
        return std::log(s == 0 ? p : 1.0 - p);
    };
    std::array<std::array<double, 2>, 2> log_t{};
    for (std::size_t i = 0; i < 2; ++i)
        for (std::size_t j = 0; j < 2; ++j) log_t[i][j] = std::log(tm.transition[i][j]);

    std::vector<std::array<std::uint8_t, 2>> back(n);
    std::array<double, 2> score{};
    for (std::size_t s = 0; s < 2; ++s) score[s] = std::log(tm.initial[s]) + log_emit(0, s);

    for (std::size_t t = 1; t < n; ++t) {
        const std::size_t preferred = state_index(in.labels[t - 1]);
        std::array<double, 2> next{};
        for (std::size_t s = 0; s < 2; ++s) {
            const double from0 = score[0] + log_t[0][s];
            const double from1 = score[1] + log_t[1][s];
            std::size_t best = from0 > from1 ? 0 : from1 > from0 ? 1 : preferred;
            back[t][s] = static_cast<std::uint8_t>(best);
            next[s] = (best == 0 ? from0 : from1) + log_emit(t, s);
        }
        score = next;
    }
    std::size_t state = score[0] > score[1] ? 0 : score[1] > score[0] ? 1 : state_index(in.labels[n - 1]);
    for (std::size_t t = n; t-- > 0;) {
        out.labels[t] = state_activity(state);
        if (t > 0) state = back[t][state];
    }
    return out;
}

/// Every stage of the post-processing chain, kept for timeline export.
struct SmoothingStages {
    LabelSequence raw;
    LabelSequence swf;
    LabelSequence bwf;
    LabelSequence mcf;
};

inline SmoothingStages smooth(const LabelSequence& raw, const TransitionModel& tm, std::size_t small_w = kSmallWindow,
                              std::size_t big_w = kBigWindow) {
    SmoothingStages s;
    s.raw = raw;
    s.swf = window_filter(raw, small_w);
    s.bwf = window_filter(s.swf, big_w);
    s.mcf = mcf(s.bwf, tm);
    return s;
}

}  // namespace equipact
