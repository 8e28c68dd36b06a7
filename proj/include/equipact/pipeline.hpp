#pragma once

// End-to-end wiring: modality selection, train-only standardization, SVM,
// Platt calibration, the SWF -> BWF -> MCF chain, and the three-way
// audio / kinematic / fused comparison.

#include <array>
#include <span>
#include <vector>

#include "classifier.hpp"
#include "evaluation.hpp"
#include "features.hpp"
#include "fusion.hpp"
#include "smoothing.hpp"

namespace equipact {

struct PipelineConfig {
    FeatureConfig features;
    SvmParams svm;
    std::size_t small_window = kSmallWindow;
    std::size_t big_window = kBigWindow;
};

/// Everything needed to label new segments of one modality.
struct TrainedPipeline {
    Modality modality = Modality::Fused;
    Standardizer standardizer;
    SvmModel model;
    TransitionModel transitions;
    std::vector<std::size_t> training_rows;
    bool converged = true;
};

inline FeatureMatrix select_modality(const ModalityFeatures& f, Modality m) {
    switch (m) {
        case Modality::Audio: return f.audio;
        case Modality::Kinematic: return f.kinematic;
        case Modality::Fused: return fuse(f.audio, f.kinematic);
    }
    throw InvalidArgument("unknown modality");
}

/// Raw labels, decision values and calibrated probabilities for every row.
inline LabelSequence score_rows(const TrainedPipeline& p, const FeatureMatrix& fm) {
    const auto z = standardize(fm, p.standardizer);
    LabelSequence out;
    out.scores = decision_values(p.model, z);
    out.probs = probabilities(p.model, out.scores);
    out.labels.resize(out.scores.size());
    for (std::size_t i = 0; i < out.scores.size(); ++i) out.labels[i] = from_sign(out.scores[i]);
    return out;
}

namespace detail {

/// Labels of `seq` at the given (sorted) rows, split wherever the rows are not consecutive.
inline std::vector<std::vector<Activity>> contiguous_runs(const std::vector<Activity>& seq,
                                                          std::span<const std::size_t> rows) {
    std::vector<std::vector<Activity>> runs;
    for (std::size_t i = 0; i < rows.size(); ++i) {
        if (i == 0 || rows[i] != rows[i - 1] + 1) runs.emplace_back();
        runs.back().push_back(seq[rows[i]]);
    }
    return runs;
}

}  // namespace detail

/// Fits the standardizer, SVM and Platt map on the training rows, and the MCF
/// transitions on the BWF-stage predictions over those same rows.
inline TrainedPipeline train_pipeline(const FeatureMatrix& fm, const TrainingRows& train, Modality modality,
                                      const PipelineConfig& cfg = {}) {
    TrainedPipeline p;
    p.modality = modality;
    p.training_rows = train.indices;
    p.standardizer = fit_standardizer(fm, train.indices);
    const auto z_train = standardize(fm.select_rows(train.indices), p.standardizer);
    auto trained = train_svm(z_train, train.labels, cfg.svm);
    p.model = std::move(trained.model);
    p.converged = trained.converged;
    const auto f_train = decision_values(p.model, z_train);
    p.model.platt = fit_platt(f_train, train.labels);

    const auto raw = score_rows(p, fm);
    const auto swf = window_filter(raw, cfg.small_window);
    const auto bwf = window_filter(swf, cfg.big_window);
    p.transitions = estimate_transitions(detail::contiguous_runs(bwf.labels, train.indices));
    return p;
}

inline SmoothingStages classify(const TrainedPipeline& p, const FeatureMatrix& fm, const PipelineConfig& cfg = {}) {
    return smooth(score_rows(p, fm), p.transitions, cfg.small_window, cfg.big_window);
}

inline const LabelSequence& stage_labels(const SmoothingStages& s, Stage stage) noexcept {
    switch (stage) {
        case Stage::Raw: return s.raw;
        case Stage::Swf: return s.swf;
        case Stage::Bwf: return s.bwf;
        case Stage::Mcf: break;
    }
    return s.mcf;
}

struct ModalityRun {
    TrainedPipeline trained;
    SmoothingStages stages;
    std::array<EvalReport, 4> reports;  // raw, swf, bwf, mcf
};

struct Comparison {
    SegmentGrid grid;
    std::array<ModalityRun, 3> runs;  // audio, kinematic, fused

    const ModalityRun& run(Modality m) const noexcept { return runs[static_cast<std::size_t>(m)]; }

    const EvalReport& report(Modality m, Stage s) const noexcept {
        return run(m).reports[static_cast<std::size_t>(s)];
    }

    std::vector<EvalReport> all_reports() const {
        std::vector<EvalReport> out;
        for (const auto& r : runs) out.insert(out.end(), r.reports.begin(), r.reports.end());
        return out;
    }
};

inline ModalityRun run_modality(const FeatureMatrix& fm, const SegmentGrid& grid, const AnnotationTrack& truth,
                                const TrainingRows& train, Modality modality, const PipelineConfig& cfg = {}) {
    ModalityRun run;
    run.trained = train_pipeline(fm, train, modality, cfg);
    run.stages = classify(run.trained, fm, cfg);
    for (const auto stage : kAllStages)
        run.reports[static_cast<std::size_t>(stage)] =
            evaluate(stage_labels(run.stages, stage).labels, truth, grid, train.indices, stage, modality);
    return run;
}

/// Runs audio-only, kinematic-only and fused pipelines with the same training rows.
inline Comparison compare_modalities(const ModalityFeatures& features, const SegmentGrid& grid,
                                     const AnnotationTrack& truth, const TrainingSelection& selection,
                                     const PipelineConfig& cfg = {}) {
    const auto train = select_training_rows(grid, selection);
    Comparison c;
    c.grid = grid;
    for (const auto m : kAllModalities)
        c.runs[static_cast<std::size_t>(m)] = run_modality(select_modality(features, m), grid, truth, train, m, cfg);
    return c;
}

inline Comparison compare_modalities(const AudioStream& audio, const KinematicStream& kin, const AnnotationTrack& truth,
                                     const TrainingSelection& selection, const PipelineConfig& cfg = {}) {
    const auto grid = SegmentGrid::covering(audio.duration_s(), kin.duration_s());
    if (grid.n_segments == 0) throw InvalidArgument("audio and kinematic streams share no full 120 ms segment");
    return compare_modalities(extract_segment_features(audio, kin, grid, cfg.features), grid, truth, selection, cfg);
}

}  // namespace equipact
