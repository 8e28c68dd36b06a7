#pragma once

// JSON and CSV exports: standardizer, SVM model, trained pipeline, evaluation
// reports, stage timelines and the modality comparison table. Every writer is
// a pure function of its input, so reruns give byte-identical files.

#include <cstdio>
#include <string>
#include <string_view>
#include <vector>

#include <json.hpp>

#include "classifier.hpp"
#include "evaluation.hpp"
#include "fusion.hpp"
#include "io.hpp"
#include "pipeline.hpp"
#include "smoothing.hpp"

namespace equipact {

using json = nlohmann::json;

inline std::string_view to_string(KernelType k) noexcept { return k == KernelType::Linear ? "linear" : "rbf"; }

inline KernelType parse_kernel(std::string_view s) {
    if (s == "linear") return KernelType::Linear;
    if (s == "rbf") return KernelType::Rbf;
    throw InvalidArgument("unknown kernel '" + std::string(s) + "' (expected linear or rbf)");
}

namespace detail {

template <class T>
T field(const json& j, const char* key) {
    if (!j.is_object() || !j.contains(key)) throw Error(std::string("missing field '") + key + "'");
    try {
        return j.at(key).get<T>();
    } catch (const json::exception& e) {
        throw Error(std::string("field '") + key + "': " + e.what());
    }
}

}  // namespace detail

// ---------------------------------------------------------------------------
// Standardizer

inline json to_json(const Standardizer& s) {
    return json{{"names", s.names}, {"means", s.means}, {"stds", s.stds}};
}

inline Standardizer standardizer_from_json(const json& j) {
    Standardizer s;
    s.names = detail::field<std::vector<std::string>>(j, "names");
    s.means = detail::field<std::vector<double>>(j, "means");
    s.stds = detail::field<std::vector<double>>(j, "stds");
    if (s.means.size() != s.names.size() || s.stds.size() != s.names.size())
        throw Error("standardizer names, means and stds differ in length");
    return s;
}

// ---------------------------------------------------------------------------
// SVM model

inline json to_json(const SvmModel& m) {
    json j;
    j["kernel"] = to_string(m.kernel);
    if (m.kernel == KernelType::Rbf) j["gamma"] = m.gamma;
    j["C"] = m.C;
    j["bias"] = m.bias;
    j["platt_a"] = m.platt.a;
    j["platt_b"] = m.platt.b;
    j["support_vectors"] = m.support_vectors;
    j["dual_coefs"] = m.dual_coefs;
    j["feature_names"] = m.feature_names;
    return j;
}

inline SvmModel svm_model_from_json(const json& j) {
    SvmModel m;
    m.kernel = parse_kernel(detail::field<std::string>(j, "kernel"));
    if (m.kernel == KernelType::Rbf) m.gamma = detail::field<double>(j, "gamma");
    m.C = detail::field<double>(j, "C");
    m.bias = detail::field<double>(j, "bias");
    m.platt.a = detail::field<double>(j, "platt_a");
    m.platt.b = detail::field<double>(j, "platt_b");
    m.support_vectors = detail::field<std::vector<std::vector<double>>>(j, "support_vectors");
    m.dual_coefs = detail::field<std::vector<double>>(j, "dual_coefs");
    m.feature_names = detail::field<std::vector<std::string>>(j, "feature_names");
    m.dim = m.feature_names.size();
    if (m.dual_coefs.size() != m.support_vectors.size())
        throw Error("model has " + std::to_string(m.support_vectors.size()) + " support vectors but " +
                    std::to_string(m.dual_coefs.size()) + " dual coefficients");
    for (const auto& sv : m.support_vectors)
        if (sv.size() != m.dim) throw Error("support vector length differs from the feature count");
    return m;
}

// ---------------------------------------------------------------------------
// Trained pipeline: the model fields at top level plus what classification needs.

inline json to_json(const TransitionModel& tm) {
    return json{{"transition", tm.transition}, {"initial", tm.initial}};
}

inline TransitionModel transitions_from_json(const json& j) {
    TransitionModel tm;
    tm.transition = detail::field<std::array<std::array<double, 2>, 2>>(j, "transition");
    tm.initial = detail::field<std::array<double, 2>>(j, "initial");
    return tm;
}

inline json to_json(const TrainedPipeline& p) {
    json j = to_json(p.model);
    j["modality"] = to_string(p.modality);
    j["standardizer"] = to_json(p.standardizer);
    j["transitions"] = to_json(p.transitions);
    j["training_rows"] = p.training_rows;
    j["converged"] = p.converged;
    return j;
}

inline TrainedPipeline pipeline_from_json(const json& j) {
    TrainedPipeline p;
    p.model = svm_model_from_json(j);
    p.modality = parse_modality(detail::field<std::string>(j, "modality"));
    p.standardizer = standardizer_from_json(detail::field<json>(j, "standardizer"));
    p.transitions = transitions_from_json(detail::field<json>(j, "transitions"));
    p.training_rows = detail::field<std::vector<std::size_t>>(j, "training_rows");
    p.converged = detail::field<bool>(j, "converged");
    if (p.standardizer.names != p.model.feature_names) throw Error("standardizer and model feature names differ");
    return p;
}

inline TrainedPipeline parse_pipeline(std::string_view text) {
    json j;
    try {
        j = json::parse(text);
    } catch (const json::parse_error& e) {
        throw Error(std::string("model file is not valid JSON: ") + e.what());
    }
    return pipeline_from_json(j);
}

inline std::string encode_pipeline(const TrainedPipeline& p) { return to_json(p).dump(2) + "\n"; }

// ---------------------------------------------------------------------------
// Reports

inline json to_json(const EvalReport& r) {
    return json{{"modality", to_string(r.modality)},
                {"stage", to_string(r.stage)},
                {"accuracy", r.accuracy},
                {"recall", {{"major", r.recall_major}, {"minor", r.recall_minor}}},
                {"confusion", r.confusion},
                {"n_eval_segments", r.n_eval_segments}};
}

inline std::string encode_reports(const std::vector<EvalReport>& reports) {
    json arr = json::array();
    for (const auto& r : reports) arr.push_back(to_json(r));
    return arr.dump(2) + "\n";
}

// ---------------------------------------------------------------------------
// Timelines and comparison tables

/// `segment_index,t_center_s,raw,swf,bwf,mcf,truth`; truth is empty where no
/// annotation covers the segment.
inline std::string encode_timeline(const SmoothingStages& s, const SegmentGrid& grid,
                                   const std::vector<std::optional<Activity>>& truth = {}) {
    std::string out = "segment_index,t_center_s,raw,swf,bwf,mcf,truth\n";
    for (std::size_t k = 0; k < s.raw.size(); ++k) {
        out += std::to_string(k);
        out += ',';
        out += io::format_double(grid.center_s(k));
        for (const auto* seq : {&s.raw, &s.swf, &s.bwf, &s.mcf}) {
            out += ',';
            out += to_string(seq->labels[k]);
        }
        out += ',';
        if (k < truth.size() && truth[k]) out += to_string(*truth[k]);
        out += '\n';
    }
    return out;
}

inline std::string encode_comparison_csv(const Comparison& c) {
    std::string out =
        "modality,stage,accuracy,recall_major,recall_minor,n_eval_segments,"
        "major_as_major,major_as_minor,minor_as_major,minor_as_minor\n";
    for (const auto& r : c.all_reports()) {
        out += std::string(to_string(r.modality)) + ',' + std::string(to_string(r.stage)) + ',' +
               io::format_double(r.accuracy) + ',' + io::format_double(r.recall_major) + ',' +
               io::format_double(r.recall_minor) + ',' + std::to_string(r.n_eval_segments);
        for (const auto& row : r.confusion)
            for (const auto v : row) out += ',' + std::to_string(v);
        out += '\n';
    }
    return out;
}

/// Accuracy per modality (rows) and stage (columns), four decimals.
inline std::string encode_comparison_text(const Comparison& c) {
    char buf[96];
    std::string out;
    std::snprintf(buf, sizeof buf, "%-10s %8s %8s %8s %8s %7s\n", "modality", "raw", "swf", "bwf", "mcf", "n");
    out += buf;
    for (const auto m : kAllModalities) {
        const auto& run = c.run(m);
        std::snprintf(buf, sizeof buf, "%-10s %8.4f %8.4f %8.4f %8.4f %7zu\n", std::string(to_string(m)).c_str(),
                      run.reports[0].accuracy, run.reports[1].accuracy, run.reports[2].accuracy,
                      run.reports[3].accuracy, run.reports[3].n_eval_segments);
        out += buf;
    }
    return out;
}

}  // namespace equipact
