#pragma once

// Command-line front end: a JSON run configuration with flag overrides and the
// extract / train / classify / evaluate / synth / compare commands.
//
// Exit codes: 0 success, 1 validation error (bad or missing configuration),
// 2 runtime error. Every output file is written atomically.

#include <cmath>
#include <filesystem>
#include <map>
#include <optional>
#include <ostream>
#include <string>
#include <vector>

#include <CLI11.hpp>
#include <json.hpp>

#include "fft.hpp"
#include "ingest.hpp"
#include "io.hpp"
#include "pipeline.hpp"
#include "serialize.hpp"
#include "synth.hpp"

namespace equipact::cli {

namespace fs = std::filesystem;

/// Missing or out-of-range configuration; reported with exit code 1.
class ConfigError : public Error {
public:
    using Error::Error;
};

enum class Command { Extract, Train, Classify, Evaluate, Synth, Compare };

inline constexpr std::string_view to_string(Command c) noexcept {
    switch (c) {
        case Command::Extract: return "extract";
        case Command::Train: return "train";
        case Command::Classify: return "classify";
        case Command::Evaluate: return "evaluate";
        case Command::Synth: return "synth";
        case Command::Compare: return "compare";
    }
    return "?";
}

struct RunConfig {
    fs::path audio;
    fs::path kinematic;
    fs::path annotations;
    fs::path model;
    fs::path out_dir = ".";
    std::uint64_t seed = 42;
    Modality modality = Modality::Fused;
    double sync_offset_s = 0.0;
    PipelineConfig pipeline;
    std::size_t training_per_class = 4;
    double training_period_s = 6.0;
    std::optional<TrainingSelection> training;  // explicit periods win over the per-class defaults
    SynthSpec synth;
    WavEncoding synth_encoding = WavEncoding::Float32;

    void validate(Command cmd) const;
};

namespace detail {

inline void require_path(const fs::path& p, const char* field, Command cmd) {
    if (p.empty())
        throw ConfigError(std::string(to_string(cmd)) + ": missing required field '" + field + "' (--" + field + ")");
    if (!fs::exists(p)) throw ConfigError(std::string(field) + " file '" + p.string() + "' does not exist");
}

inline void check(bool ok, const std::string& what) {
    if (!ok) throw ConfigError(what);
}

}  // namespace detail

inline void RunConfig::validate(Command cmd) const {
    using detail::check;
    const bool needs_streams = cmd != Command::Synth;
    if (needs_streams) {
        detail::require_path(audio, "audio", cmd);
        detail::require_path(kinematic, "kinematic", cmd);
    }
    if (cmd == Command::Train || cmd == Command::Evaluate || cmd == Command::Compare)
        detail::require_path(annotations, "annotations", cmd);
    if (cmd == Command::Classify || cmd == Command::Evaluate) detail::require_path(model, "model", cmd);

    check(std::isfinite(sync_offset_s), "sync_offset_s must be finite");
    const auto& f = pipeline.features;
    check(f.audio_window_s > 0.0 && f.kinematic_window_s > 0.0, "feature windows must be positive");
    check(is_power_of_two(f.audio_fft_len) && is_power_of_two(f.kinematic_fft_len), "FFT lengths must be powers of two");
    check(f.audio_frame_len >= 2 && f.audio_frame_len <= f.audio_fft_len, "audio frame length must lie in [2, fft_len]");
    check(f.kinematic_frame_len >= 2 && f.kinematic_frame_len <= f.kinematic_fft_len,
          "kinematic frame length must lie in [2, fft_len]");
    check(f.n_bands >= 1 && f.n_bands <= std::min(f.audio_fft_len, f.kinematic_fft_len) / 2,
          "n_bands must lie in [1, fft_len / 2]");
    check(f.rolloff_fraction > 0.0 && f.rolloff_fraction <= 1.0, "rolloff_fraction must lie in (0, 1]");
    const auto& s = pipeline.svm;
    check(s.C > 0.0 && std::isfinite(s.C), "svm.C must be positive");
    check(s.tol > 0.0 && std::isfinite(s.tol), "svm.tol must be positive");
    check(s.gamma >= 0.0 && std::isfinite(s.gamma), "svm.gamma must be non-negative (0 selects 1 / n_features)");
    check(s.max_passes >= 1, "svm.max_passes must be at least 1");
    check(pipeline.small_window >= 1 && pipeline.big_window >= 1, "smoothing windows must be at least 1");
    check(training_per_class >= 1, "training.per_class must be at least 1");
    check(training_period_s > 0.0, "training.period_s must be positive");
    if (cmd == Command::Synth) {
        try {
            synth.validate();
        } catch (const InvalidArgument& e) {
            throw ConfigError(std::string("synth: ") + e.what());
        }
    }
}

// ---------------------------------------------------------------------------
// JSON configuration

namespace detail {

inline void only_keys(const json& j, std::initializer_list<std::string_view> keys, const std::string& where) {
    if (!j.is_object()) throw ConfigError(where + " must be a JSON object");
    for (const auto& [k, _] : j.items()) {
        bool known = false;
        for (const auto key : keys) known = known || k == key;
        if (!known) throw ConfigError("unknown config key '" + where + "." + k + "'");
    }
}

template <class T>
void read(const json& j, const char* key, T& dst, const std::string& where) {
    if (!j.contains(key)) return;
    try {
        dst = j.at(key).get<T>();
    } catch (const json::exception&) {
        throw ConfigError("config key '" + where + "." + key + "' has the wrong type");
    }
}

inline void read_path(const json& j, const char* key, fs::path& dst, const fs::path& base) {
    std::string s;
    read(j, key, s, "config");
    if (!s.empty()) dst = fs::path(s).is_absolute() ? fs::path(s) : base / s;
}

inline std::vector<TimeInterval> read_periods(const json& j, const char* key) {
    std::vector<std::array<double, 2>> raw;
    read(j, key, raw, "training");
    std::vector<TimeInterval> out;
    for (const auto& p : raw) out.push_back({p[0], p[1]});
    return out;
}

}  // namespace detail

/// Parses a run configuration. Relative paths resolve against `base_dir`.
inline RunConfig config_from_json(const json& j, const fs::path& base_dir = {}) {
    using detail::read;
    detail::only_keys(j,
                      {"audio", "kinematic", "annotations", "model", "out_dir", "seed", "modality", "sync_offset_s",
                       "features", "svm", "smoothing", "training", "synth"},
                      "config");
    RunConfig cfg;
    detail::read_path(j, "audio", cfg.audio, base_dir);
    detail::read_path(j, "kinematic", cfg.kinematic, base_dir);
    detail::read_path(j, "annotations", cfg.annotations, base_dir);
    detail::read_path(j, "model", cfg.model, base_dir);
    detail::read_path(j, "out_dir", cfg.out_dir, base_dir);
    read(j, "seed", cfg.seed, "config");
    read(j, "sync_offset_s", cfg.sync_offset_s, "config");
    if (j.contains("modality")) {
        try {
            cfg.modality = parse_modality(j.at("modality").get<std::string>());
        } catch (const std::exception& e) {
            throw ConfigError(std::string("config.modality: ") + e.what());
        }
    }
    if (j.contains("features")) {
        const auto& f = j.at("features");
        detail::only_keys(f,
                          {"audio_window_s", "audio_frame_len", "audio_fft_len", "kinematic_window_s",
                           "kinematic_frame_len", "kinematic_fft_len", "n_bands", "rolloff_fraction"},
                          "features");
        auto& d = cfg.pipeline.features;
        read(f, "audio_window_s", d.audio_window_s, "features");
        read(f, "audio_frame_len", d.audio_frame_len, "features");
        read(f, "audio_fft_len", d.audio_fft_len, "features");
        read(f, "kinematic_window_s", d.kinematic_window_s, "features");
        read(f, "kinematic_frame_len", d.kinematic_frame_len, "features");
        read(f, "kinematic_fft_len", d.kinematic_fft_len, "features");
        read(f, "n_bands", d.n_bands, "features");
        read(f, "rolloff_fraction", d.rolloff_fraction, "features");
    }
    if (j.contains("svm")) {
        const auto& s = j.at("svm");
        detail::only_keys(s, {"C", "kernel", "gamma", "tol", "max_passes"}, "svm");
        auto& d = cfg.pipeline.svm;
        read(s, "C", d.C, "svm");
        read(s, "gamma", d.gamma, "svm");
        read(s, "tol", d.tol, "svm");
        read(s, "max_passes", d.max_passes, "svm");
        if (s.contains("kernel")) {
            try {
                d.kernel = parse_kernel(s.at("kernel").get<std::string>());
            } catch (const std::exception& e) {
                throw ConfigError(std::string("svm.kernel: ") + e.what());
            }
        }
    }
    if (j.contains("smoothing")) {
        const auto& s = j.at("smoothing");
        detail::only_keys(s, {"small_window", "big_window"}, "smoothing");
        read(s, "small_window", cfg.pipeline.small_window, "smoothing");
        read(s, "big_window", cfg.pipeline.big_window, "smoothing");
    }
    if (j.contains("training")) {
        const auto& t = j.at("training");
        detail::only_keys(t, {"per_class", "period_s", "major", "minor"}, "training");
        read(t, "per_class", cfg.training_per_class, "training");
        read(t, "period_s", cfg.training_period_s, "training");
        if (t.contains("major") || t.contains("minor")) {
            TrainingSelection sel;
            sel.major_periods = detail::read_periods(t, "major");
            sel.minor_periods = detail::read_periods(t, "minor");
            cfg.training = sel;
        }
    }
    if (j.contains("synth")) {
        const auto& s = j.at("synth");
        detail::only_keys(s,
                          {"duration_s", "audio_snr_db", "kin_snr_db", "audio_confusability", "kin_confusability",
                           "major_dwell_s", "minor_dwell_s", "encoding"},
                          "synth");
        auto& d = cfg.synth;
        read(s, "duration_s", d.duration_s, "synth");
        read(s, "audio_snr_db", d.audio_snr_db, "synth");
        read(s, "kin_snr_db", d.kin_snr_db, "synth");
        read(s, "audio_confusability", d.audio_confusability, "synth");
        read(s, "kin_confusability", d.kin_confusability, "synth");
        std::array<double, 2> range{};
        if (s.contains("major_dwell_s")) {
            read(s, "major_dwell_s", range, "synth");
            d.major_dwell_min_s = range[0], d.major_dwell_max_s = range[1];
        }
        if (s.contains("minor_dwell_s")) {
            read(s, "minor_dwell_s", range, "synth");
            d.minor_dwell_min_s = range[0], d.minor_dwell_max_s = range[1];
        }
        std::string enc = "float32";
        read(s, "encoding", enc, "synth");
        if (enc == "pcm16") cfg.synth_encoding = WavEncoding::Pcm16;
        else if (enc == "pcm24") cfg.synth_encoding = WavEncoding::Pcm24;
        else if (enc == "float32") cfg.synth_encoding = WavEncoding::Float32;
        else throw ConfigError("synth.encoding must be pcm16, pcm24 or float32");
    }
    return cfg;
}

inline RunConfig load_config(const fs::path& path) {
    if (!fs::exists(path)) throw ConfigError("config file '" + path.string() + "' does not exist");
    json j;
    try {
        j = json::parse(io::read_file(path));
    } catch (const json::parse_error& e) {
        throw ConfigError("config file '" + path.string() + "' is not valid JSON: " + e.what());
    }
    return config_from_json(j, path.parent_path());
}

// ---------------------------------------------------------------------------
// Commands

struct LoadedStreams {
    AudioStream audio;
    KinematicStream kinematic;
    SegmentGrid grid;
    ModalityFeatures features;
};

inline LoadedStreams load_streams(const RunConfig& cfg) {
    LoadedStreams s;
    s.audio = decode_audio(cfg.audio);
    s.kinematic = apply_sync(decode_kinematic(cfg.kinematic), SyncConfig{cfg.sync_offset_s});
    s.grid = SegmentGrid::covering(s.audio.duration_s(), s.kinematic.duration_s());
    if (s.grid.n_segments == 0) throw Error("audio and kinematic streams share no full 120 ms segment");
    s.features = extract_segment_features(s.audio, s.kinematic, s.grid, cfg.pipeline.features);
    return s;
}

inline TrainingSelection training_selection(const RunConfig& cfg, const AnnotationTrack& truth) {
    return cfg.training ? *cfg.training
                        : default_training_selection(truth, cfg.training_per_class, cfg.training_period_s);
}

/// Paths written by a command, plus any text meant for standard output.
struct CommandResult {
    std::vector<fs::path> written;
    std::string message;
};

namespace detail {

inline void emit(CommandResult& r, const fs::path& path, std::string_view contents) {
    io::write_file_atomic(path, contents);
    r.written.push_back(path);
}

inline TrainedPipeline load_model(const RunConfig& cfg) { return parse_pipeline(io::read_file(cfg.model)); }

inline FeatureMatrix model_features(const TrainedPipeline& p, const ModalityFeatures& f) {
    auto fm = select_modality(f, p.modality);
    if (fm.names() != p.model.feature_names)
        throw Error("model feature columns do not match the extracted features (different feature configuration?)");
    return fm;
}

}  // namespace detail

inline CommandResult cmd_extract(const RunConfig& cfg) {
    cfg.validate(Command::Extract);
    const auto s = load_streams(cfg);
    CommandResult r;
    for (const auto m : kAllModalities)
        detail::emit(r, cfg.out_dir / ("features_" + std::string(to_string(m)) + ".csv"),
                     encode_feature_csv(select_modality(s.features, m), s.grid.segment_s));
    r.message = std::to_string(s.grid.n_segments) + " segments\n";
    return r;
}

inline CommandResult cmd_train(const RunConfig& cfg) {
    cfg.validate(Command::Train);
    const auto s = load_streams(cfg);
    const auto truth = decode_annotations(cfg.annotations);
    const auto selection = training_selection(cfg, truth);
    selection.validate(s.grid.n_segments * s.grid.segment_s);
    const auto rows = select_training_rows(s.grid, selection);
    const auto p = train_pipeline(select_modality(s.features, cfg.modality), rows, cfg.modality, cfg.pipeline);
    CommandResult r;
    detail::emit(r, cfg.out_dir / "model.json", encode_pipeline(p));
    r.message = std::string(to_string(cfg.modality)) + " model: " + std::to_string(p.model.support_vectors.size()) +
                " support vectors from " + std::to_string(rows.indices.size()) + " training rows" +
                (p.converged ? "" : " (SMO did not converge; best-so-far model kept)") + "\n";
    return r;
}

/// Uses the modality stored in the model.
inline CommandResult cmd_classify(const RunConfig& cfg) {
    cfg.validate(Command::Classify);
    const auto p = detail::load_model(cfg);
    const auto s = load_streams(cfg);
    const auto stages = classify(p, detail::model_features(p, s.features), cfg.pipeline);
    std::vector<std::optional<Activity>> truth;
    if (!cfg.annotations.empty()) truth = segment_truth(decode_annotations(cfg.annotations), s.grid);
    CommandResult r;
    detail::emit(r, cfg.out_dir / "timeline.csv", encode_timeline(stages, s.grid, truth));
    return r;
}

inline CommandResult cmd_evaluate(const RunConfig& cfg) {
    cfg.validate(Command::Evaluate);
    const auto p = detail::load_model(cfg);
    const auto s = load_streams(cfg);
    const auto truth = decode_annotations(cfg.annotations);
    const auto stages = classify(p, detail::model_features(p, s.features), cfg.pipeline);
    std::vector<EvalReport> reports;
    for (const auto stage : kAllStages)
        reports.push_back(
            evaluate(stage_labels(stages, stage).labels, truth, s.grid, p.training_rows, stage, p.modality));
    CommandResult r;
    detail::emit(r, cfg.out_dir / "report.json", encode_reports(reports));
    for (const auto& rep : reports)
        r.message += std::string(to_string(rep.stage)) + " accuracy " + io::format_double(rep.accuracy) + "\n";
    return r;
}

inline CommandResult cmd_synth(const RunConfig& cfg) {
    cfg.validate(Command::Synth);
    auto spec = cfg.synth;
    spec.seed = cfg.seed;
    const auto rec = synth_recording(spec);
    CommandResult r;
    detail::emit(r, cfg.out_dir / "audio.wav", encode_wav(rec.audio, cfg.synth_encoding));
    detail::emit(r, cfg.out_dir / "kinematic.csv", encode_kinematic_csv(rec.kinematic));
    detail::emit(r, cfg.out_dir / "annotations.csv", encode_annotations_csv(rec.truth));
    return r;
}

inline CommandResult cmd_compare(const RunConfig& cfg) {
    cfg.validate(Command::Compare);
    const auto s = load_streams(cfg);
    const auto truth = decode_annotations(cfg.annotations);
    const auto selection = training_selection(cfg, truth);
    selection.validate(s.grid.n_segments * s.grid.segment_s);
    const auto c = compare_modalities(s.features, s.grid, truth, selection, cfg.pipeline);
    const auto labels = segment_truth(truth, s.grid);
    CommandResult r;
    r.message = encode_comparison_text(c);
    detail::emit(r, cfg.out_dir / "comparison.txt", r.message);
    detail::emit(r, cfg.out_dir / "comparison.csv", encode_comparison_csv(c));
    detail::emit(r, cfg.out_dir / "reports.json", encode_reports(c.all_reports()));
    for (const auto m : kAllModalities)
        detail::emit(r, cfg.out_dir / ("timeline_" + std::string(to_string(m)) + ".csv"),
                     encode_timeline(c.run(m).stages, s.grid, labels));
    return r;
}

inline CommandResult run_command(Command cmd, const RunConfig& cfg) {
    switch (cmd) {
        case Command::Extract: return cmd_extract(cfg);
        case Command::Train: return cmd_train(cfg);
        case Command::Classify: return cmd_classify(cfg);
        case Command::Evaluate: return cmd_evaluate(cfg);
        case Command::Synth: return cmd_synth(cfg);
        case Command::Compare: return cmd_compare(cfg);
    }
    throw ConfigError("unknown command");
}

// ---------------------------------------------------------------------------
// Argument parsing

/// Values given on the command line; only options that were actually passed
/// override the configuration file.
struct Overrides {
    std::string config, audio, kinematic, annotations, model, out_dir, modality, kernel, encoding;
    std::uint64_t seed = 0;
    double sync_offset_s = 0, svm_c = 0, tol = 0, duration_s = 0, audio_conf = 0, kin_conf = 0, snr_db = 0;
    std::size_t max_passes = 0;
    std::map<std::string, const CLI::Option*> opts;

    bool has(const std::string& name) const {
        const auto it = opts.find(name);
        return it != opts.end() && it->second->count() > 0;
    }
};

inline void add_common_options(CLI::App& sub, Overrides& o) {
    auto add = [&](const std::string& name, auto& var, const std::string& help) {
        o.opts[name] = sub.add_option("--" + name, var, help);
    };
    add("config", o.config, "JSON run configuration; flags override its values");
    add("seed", o.seed, "random seed (synthesis)");
    add("out-dir", o.out_dir, "output directory");
    add("modality", o.modality, "audio, kinematic or fused");
    add("sync-offset-s", o.sync_offset_s, "seconds added to kinematic timestamps");
    add("audio", o.audio, "WAV file");
    add("kinematic", o.kinematic, "kinematic CSV (t,ax,ay,az,gx,gy,gz)");
    add("annotations", o.annotations, "annotation CSV (start_s,end_s,label)");
    add("model", o.model, "trained model JSON");
    add("svm-c", o.svm_c, "SVM soft-margin C");
    add("kernel", o.kernel, "linear or rbf");
    add("tol", o.tol, "SMO KKT tolerance");
    add("max-passes", o.max_passes, "SMO iteration budget, in multiples of the training-set size");
    add("duration-s", o.duration_s, "synthetic recording length");
    add("audio-confusability", o.audio_conf, "synthetic audio confusability in [0, 1]");
    add("kin-confusability", o.kin_conf, "synthetic kinematic confusability in [0, 1]");
    add("snr-db", o.snr_db, "synthetic SNR for both modalities");
    add("encoding", o.encoding, "synthetic WAV encoding: pcm16, pcm24 or float32");
}

inline RunConfig resolve_config(const Overrides& o) {
    RunConfig cfg = o.has("config") ? load_config(o.config) : RunConfig{};
    if (o.has("seed")) cfg.seed = o.seed;
    if (o.has("out-dir")) cfg.out_dir = o.out_dir;
    if (o.has("sync-offset-s")) cfg.sync_offset_s = o.sync_offset_s;
    if (o.has("audio")) cfg.audio = o.audio;
    if (o.has("kinematic")) cfg.kinematic = o.kinematic;
    if (o.has("annotations")) cfg.annotations = o.annotations;
    if (o.has("model")) cfg.model = o.model;
    if (o.has("svm-c")) cfg.pipeline.svm.C = o.svm_c;
    if (o.has("tol")) cfg.pipeline.svm.tol = o.tol;
    if (o.has("max-passes")) cfg.pipeline.svm.max_passes = o.max_passes;
    if (o.has("duration-s")) cfg.synth.duration_s = o.duration_s;
    if (o.has("audio-confusability")) cfg.synth.audio_confusability = o.audio_conf;
    if (o.has("kin-confusability")) cfg.synth.kin_confusability = o.kin_conf;
    if (o.has("snr-db")) cfg.synth.audio_snr_db = cfg.synth.kin_snr_db = o.snr_db;
    try {
        if (o.has("modality")) cfg.modality = parse_modality(o.modality);
        if (o.has("kernel")) cfg.pipeline.svm.kernel = parse_kernel(o.kernel);
    } catch (const InvalidArgument& e) {
        throw ConfigError(e.what());
    }
    if (o.has("encoding")) {
        if (o.encoding == "pcm16") cfg.synth_encoding = WavEncoding::Pcm16;
        else if (o.encoding == "pcm24") cfg.synth_encoding = WavEncoding::Pcm24;
        else if (o.encoding == "float32") cfg.synth_encoding = WavEncoding::Float32;
        else throw ConfigError("--encoding must be pcm16, pcm24 or float32");
    }
    return cfg;
}

/// Full CLI entry point; returns the process exit code.
inline int run(int argc, const char* const* argv, std::ostream& out, std::ostream& err) {
    CLI::App app{"Major/minor equipment activity recognition from audio and kinematic data"};
    app.require_subcommand(1);
    Overrides o;
    struct Sub {
        Command cmd;
        const char* help;
        CLI::App* app = nullptr;
    };
    std::array<Sub, 6> subs = {{{Command::Extract, "write per-segment feature CSVs"},
                                {Command::Train, "train an SVM pipeline on the annotated training periods"},
                                {Command::Classify, "label every segment and write the stage timeline"},
                                {Command::Evaluate, "score a trained model against annotations"},
                                {Command::Synth, "render a synthetic recording with ground truth"},
                                {Command::Compare, "audio vs kinematic vs fused comparison"}}};
    for (auto& s : subs) {
        s.app = app.add_subcommand(std::string(to_string(s.cmd)), s.help);
        add_common_options(*s.app, o);
    }
    try {
        app.parse(argc, argv);
    } catch (const CLI::CallForHelp&) {
        out << app.help();
        return 0;
    } catch (const CLI::CallForAllHelp&) {
        out << app.help("", CLI::AppFormatMode::All);
        return 0;
    } catch (const CLI::ParseError& e) {
        err << "error: " << e.what() << "\n" << app.help();
        return 1;
    }
    for (const auto& s : subs) {
        if (!s.app->parsed()) continue;
        // Every subcommand registers the same options; read the selected one's.
        for (auto& [name, opt] : o.opts) opt = s.app->get_option("--" + name);
        try {
            const auto result = run_command(s.cmd, resolve_config(o));
            out << result.message;
            for (const auto& p : result.written) out << "wrote " << p.string() << "\n";
            return 0;
        } catch (const ConfigError& e) {
            err << "error: " << e.what() << "\n" << s.app->help();
            return 1;
        } catch (const std::exception& e) {
            err << "error: " << e.what() << "\n";
            return 2;
        }
    }
    return 1;
}

}  // namespace equipact::cli
