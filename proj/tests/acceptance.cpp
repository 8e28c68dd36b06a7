// Acceptance run: one PASS/FAIL line per criterion, nonzero exit on any FAIL.

#include <chrono>
#include <cstdio>
#include <functional>
#include <numeric>

#include "equipact/cli.hpp"
#include "equipact/equipact.hpp"
#include "oracles.hpp"
#include "support.hpp"

using namespace equipact;
namespace fs = std::filesystem;

namespace {

// Pinned tolerances and budgets.
constexpr double kSpectralRelTol = 1e-9;
constexpr double kTimeDomainRelTol = 1e-12;
constexpr double kAbsFloor = 1e-15;
constexpr double kScaleRelTol = 1e-12;
constexpr double kDualSumTol = 1e-6;
constexpr double kTwoPathTol = 1e-9;
constexpr double kFusedFloor = 0.90;
constexpr double kFusionMargin = 0.05;
constexpr double kSmoothingSlack = 0.02;
constexpr double kOracleBudgetS = 30.0;
constexpr double kExperimentBudgetS = 60.0;

struct Verdict {
    bool pass = true;
    std::string detail;
    std::vector<std::string> notes;

    void require(bool ok, const std::string& what) {
        if (!ok && pass) detail = what;
        pass = pass && ok;
    }
};

double seconds_since(std::chrono::steady_clock::time_point t0) {
    return std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
}

std::string fmt(const char* f, double v) {
    char buf[64];
    std::snprintf(buf, sizeof buf, f, v);
    return buf;
}

double rel_err(double a, double b) {
    const double scale = std::max(std::abs(a), std::abs(b));
    return scale > kAbsFloor ? std::abs(a - b) / scale : 0.0;
}

// Random window with a random framing that fits inside it.
struct WindowCase {
    std::vector<double> x, y;
    int rate;
    std::size_t frame, fft;
};

WindowCase draw_window(testing::Gen& g) {
    WindowCase c;
    const std::size_t n = g.index(64, 4096);
    const int rates[] = {100, 8000, 44100};
    c.rate = rates[g.index(0, 2)];
    c.x = g.mixed_signal(n, c.rate);
    c.y = g.mixed_signal(n, c.rate);
    // frames of 32..1024 samples; the FFT keeps at least 32 non-DC bins for the 25 bands
    std::size_t max_frame = 32;
    while (max_frame * 2 <= std::min<std::size_t>(n, 1024)) max_frame *= 2;
    c.frame = std::size_t{32} << g.index(0, static_cast<std::size_t>(std::log2(max_frame / 32)));
    c.fft = std::max<std::size_t>(64, c.frame << g.index(0, 1));
    return c;
}

// ---------------------------------------------------------------------------

Verdict feature_oracle() {
    Verdict v;
    testing::Gen g(1001);
    const auto t0 = std::chrono::steady_clock::now();
    double worst_spec = 0.0, worst_time = 0.0;
    for (int i = 0; i < 1000; ++i) {
        const auto c = draw_window(g);
        const std::span<const double> sx(c.x), sy(c.y);
        const auto fx = avg_spectrum(sx, c.rate, c.frame, c.fft);
        const auto fy = avg_spectrum(sy, c.rate, c.frame, c.fft);
        const auto ox = oracle::avg_spectrum(c.x, c.frame, c.fft);
        const auto oy = oracle::avg_spectrum(c.y, c.frame, c.fft);
        const double hz = static_cast<double>(c.rate) / static_cast<double>(c.fft);

        std::vector<double> errs;
        const auto bands = stft_band_coeffs(fx), obands = oracle::bands(ox, 25);
        for (std::size_t b = 0; b < bands.size(); ++b) errs.push_back(rel_err(bands[b], obands[b]));
        errs.push_back(rel_err(spectral_centroid(fx), oracle::centroid(ox, hz)));
        errs.push_back(rel_err(spectral_rolloff(fx, 0.85), oracle::rolloff(ox, hz, 0.85)));
        errs.push_back(rel_err(spectral_entropy(fx), oracle::entropy(ox)));
        errs.push_back(rel_err(spectral_flux(fx, fy), oracle::flux(ox, oy)));
        for (const double e : errs) worst_spec = std::max(worst_spec, e);

        const double et = std::max(rel_err(rms(sx), oracle::rms(c.x)), rel_err(ste(sx), oracle::ste(c.x)));
        worst_time = std::max(worst_time, et);
        v.require(zcr(sx) == oracle::zcr(c.x), "ZCR differs from the oracle");
    }
    const double elapsed = seconds_since(t0);
    v.require(worst_spec <= kSpectralRelTol, "spectral error above tolerance");
    v.require(worst_time <= kTimeDomainRelTol, "time-domain error above tolerance");
    v.require(elapsed < kOracleBudgetS, "over the time budget");
    v.detail = (v.pass ? "" : v.detail + "; ") + "1000 windows, max spectral rel err " + fmt("%.2e", worst_spec) +
               ", max time-domain rel err " + fmt("%.2e", worst_time) + ", " + fmt("%.1f s", elapsed);
    return v;
}

Verdict scale_equivariance() {
    Verdict v;
    testing::Gen g(1002);
    std::size_t checks = 0;
    auto close = [&](double a, double b) { return testing::close_rel(a, b, kScaleRelTol, kAbsFloor); };
    for (int i = 0; i < 300; ++i) {
        const auto c = draw_window(g);
        SpectrumAnalyzer an(c.frame, c.fft);
        const std::span<const double> sx(c.x), sy(c.y);
        const auto s1 = an(sx, c.rate), p1 = an(sy, c.rate);
        const auto b1 = stft_band_coeffs(s1);
        for (const double k : {0.5, 3.0, 100.0}) {
            std::vector<double> x2(c.x), y2(c.y);
            for (auto& e : x2) e *= k;
            for (auto& e : y2) e *= k;
            const std::span<const double> sx2(x2), sy2(y2);
            const auto s2 = an(sx2, c.rate), p2 = an(sy2, c.rate);
            v.require(close(rms(sx2), k * rms(sx)), "RMS does not scale by c");
            v.require(close(ste(sx2), k * k * ste(sx)), "STE does not scale by c^2");
            v.require(zcr(sx2) == zcr(sx), "ZCR changed");
            v.require(close(spectral_entropy(s2), spectral_entropy(s1)), "entropy changed");
            v.require(close(spectral_centroid(s2), spectral_centroid(s1)), "centroid changed");
            v.require(spectral_rolloff(s2) == spectral_rolloff(s1), "rolloff changed");
            v.require(close(spectral_flux(s2, p2), spectral_flux(s1, p1)), "flux changed");
            const auto b2 = stft_band_coeffs(s2);
            for (std::size_t b = 0; b < b1.size(); ++b) v.require(close(b2[b], b1[b]), "band vector changed");
            checks += 8;
        }
    }
    v.detail = (v.pass ? "" : v.detail + "; ") + std::to_string(checks) + " checks over 300 windows x {0.5, 3, 100}";
    return v;
}

// Dual feasibility read from the model itself: sum of alpha_i y_i and |alpha_i| <= C.
bool dual_feasible(const SvmModel& m) {
    double sum = 0.0;
    for (const double a : m.dual_coefs) {
        if (std::abs(a) > m.C || a == 0.0) return false;
        sum += a;
    }
    return std::abs(sum) <= kDualSumTol;
}

Verdict svm_correctness(const std::vector<SvmModel>& extra_models) {
    Verdict v;
    testing::Gen g(1003);
    std::size_t models = 0, checked_points = 0;

    for (int i = 0; i < 200; ++i) {
        const std::size_t n = g.index(4, 150), dim = g.index(1, 10);
        FeatureMatrix x(std::vector<std::string>(dim, ""), n);
        std::vector<Activity> y(n);
        const double sep = g.uniform(0.0, 4.0);
        for (std::size_t r = 0; r < n; ++r) {
            y[r] = r % 2 == 0 ? Activity::Major : Activity::Minor;
            for (std::size_t d = 0; d < dim; ++d) x.at(r, d) = g.normal();
            x.at(r, 0) += to_sign(y[r]) * sep / 2;
        }
        SvmParams p;
        p.C = std::exp(g.uniform(std::log(0.01), std::log(100.0)));
        p.kernel = g.coin(0.7) ? KernelType::Linear : KernelType::Rbf;
        const auto r = train_svm(x, y, p);
        if (!r.converged) continue;
        ++models;
        double sum = 0.0;
        bool box = true;
        for (std::size_t k = 0; k < n; ++k) {
            sum += r.alphas[k] * to_sign(y[k]);
            box = box && r.alphas[k] >= 0.0 && r.alphas[k] <= p.C;
        }
        v.require(box && std::abs(sum) <= kDualSumTol, "(a) dual infeasible model");
        if (p.kernel == KernelType::Linear) {
            const auto w = r.model.linear_weights();
            for (std::size_t k = 0; k < n; ++k) {
                double f = r.model.bias;
                for (std::size_t d = 0; d < dim; ++d) f += w[d] * x.at(k, d);
                v.require(std::abs(f - r.model.decision_value(x.row(k))) <= kTwoPathTol * (1.0 + std::abs(f)),
                          "(c) support-vector and primal decisions disagree");
                ++checked_points;
            }
        }
    }
    for (const auto& m : extra_models) {
        ++models;
        v.require(dual_feasible(m), "(a) dual infeasible pipeline model");
    }

    // (b) first three separable draws, hard margin
    std::size_t separable = 0, draws = 0;
    while (separable < 3 && draws < 5000) {
        ++draws;
        std::vector<oracle::Point2> pos, neg;
        FeatureMatrix x({"x", "y"}, 200);
        std::vector<Activity> y(200);
        for (std::size_t i = 0; i < 200; ++i) {
            const bool major = i < 100;
            const oracle::Point2 pt{g.normal(major ? 2.0 : -2.0, 1.0), g.normal(0.0, 1.0)};
            (major ? pos : neg).push_back(pt);
            x.at(i, 0) = pt.x, x.at(i, 1) = pt.y;
            y[i] = major ? Activity::Major : Activity::Minor;
        }
        if (!oracle::separable_2d(pos, neg)) continue;
        ++separable;
        SvmParams p;
        p.C = 1e6;
        p.max_passes = 100000;
        const auto r = train_svm(x, y, p);
        v.require(r.converged, "(b) SMO did not converge on a separable draw");
        v.require(predict(r.model, x) == y, "(b) training error on a separable draw");
        v.require(dual_feasible(r.model), "(b) dual infeasible");
        ++models;
    }
    v.require(separable == 3, "(b) could not draw three separable sets");
    v.detail = (v.pass ? "" : v.detail + "; ") + "(a) " + std::to_string(models) + " converged models feasible, (b) " +
               std::to_string(separable) + " separable blob sets of " + std::to_string(draws) +
               " draws fit exactly (C = 1e6), (c) " + std::to_string(checked_points) + " two-path points";
    return v;
}

Verdict smoothing_oracles() {
    Verdict v;
    testing::Gen g(1004);
    const std::size_t ws[] = {1, 2, 6};
    std::size_t wf_agree = 0, mcf_agree = 0;
    for (int i = 0; i < 10000; ++i) {
        LabelSequence s;
        s.labels = g.coin(0.5) ? g.labels(g.index(0, 200), g.uniform()) : g.runs(g.index(0, 200), 1, 12);
        const std::size_t w = ws[g.index(0, 2)];
        wf_agree += window_filter(s, w).labels == oracle::window_filter(s.labels, w);
    }
    for (int i = 0; i < 1000; ++i) {
        const std::size_t n = g.index(1, 12);
        LabelSequence s;
        for (std::size_t t = 0; t < n; ++t) {
            const double p = g.coin(0.05) ? static_cast<double>(g.index(0, 1)) : g.uniform();
            s.probs.push_back(p);
            s.labels.push_back(p >= 0.5 ? Activity::Major : Activity::Minor);
        }
        TransitionModel tm;
        const double a = g.uniform(0.01, 0.99), b = g.uniform(0.01, 0.99), pi = g.uniform(0.01, 0.99);
        tm.transition = {{{a, 1.0 - a}, {1.0 - b, b}}};
        tm.initial = {pi, 1.0 - pi};
        mcf_agree += mcf(s, tm).labels == oracle::exhaustive_map(s.probs, tm.transition, tm.initial, kEmissionFloor);
    }
    v.require(wf_agree == 10000, "window filter disagrees with the reference");
    v.require(mcf_agree == 1000, "MCF disagrees with exhaustive search");
    v.detail = (v.pass ? "" : v.detail + "; ") + "window filter " + std::to_string(wf_agree) + "/10000, MCF " +
               std::to_string(mcf_agree) + "/1000";
    return v;
}

SynthSpec acceptance_spec() {
    SynthSpec s;
    s.duration_s = 600.0;
    s.seed = 42;
    s.audio_confusability = 0.55;
    s.kin_confusability = 0.55;
    s.audio_snr_db = 10.0;
    s.kin_snr_db = 10.0;
    return s;
}

std::string accuracy_table(const Comparison& c) {
    std::string out;
    for (const auto m : kAllModalities) {
        out += std::string(to_string(m)) + " ";
        for (const auto s : kAllStages)
            out += std::string(to_string(s)) + "=" + fmt("%.4f", c.report(m, s).accuracy) + (s == Stage::Mcf ? "" : " ");
        if (m != Modality::Fused) out += "; ";
    }
    return out;
}

Verdict fused_experiment(const Comparison& c, double elapsed) {
    Verdict v;
    const double fused = c.report(Modality::Fused, Stage::Mcf).accuracy;
    const double audio = c.report(Modality::Audio, Stage::Mcf).accuracy;
    const double kin = c.report(Modality::Kinematic, Stage::Mcf).accuracy;
    v.require(fused >= kFusedFloor, "fused MCF accuracy below 0.90");
    v.require(fused >= audio && fused >= kin, "a single modality beats fused");
    v.require(std::min(audio, kin) <= fused - kFusionMargin, "no single modality trails fused by 0.05");
    v.require(elapsed < kExperimentBudgetS, "over the time budget");
    v.detail = (v.pass ? "" : v.detail + "; ") + "MCF fused " + fmt("%.4f", fused) + ", audio " + fmt("%.4f", audio) +
               ", kinematic " + fmt("%.4f", kin) + ", " + fmt("%.1f s", elapsed);
    return v;
}

Verdict smoothing_gain(const Comparison& c) {
    Verdict v;
    auto holds = [&](Modality m) {
        const double raw = c.report(m, Stage::Raw).accuracy, bwf = c.report(m, Stage::Bwf).accuracy,
                     mcf_acc = c.report(m, Stage::Mcf).accuracy;
        return mcf_acc >= bwf && bwf >= raw - kSmoothingSlack;
    };
    v.require(holds(Modality::Fused), "fused MCF >= BWF >= raw - 0.02 violated");
    const auto& f = c.run(Modality::Fused).reports;
    v.detail = (v.pass ? "" : v.detail + "; ") + "fused raw " + fmt("%.4f", f[0].accuracy) + ", bwf " +
               fmt("%.4f", f[2].accuracy) + ", mcf " + fmt("%.4f", f[3].accuracy);
    for (const auto m : {Modality::Audio, Modality::Kinematic})
        v.notes.push_back(std::string(to_string(m)) + " chain " + (holds(m) ? "also satisfies" : "does not satisfy") +
                          " the inequality (bwf " + fmt("%.4f", c.report(m, Stage::Bwf).accuracy) + ", mcf " +
                          fmt("%.4f", c.report(m, Stage::Mcf).accuracy) + ")");
    return v;
}

Verdict determinism() {
    Verdict v;
    testing::TempDir a("accept_a"), b("accept_b");
    for (const auto* dir : {&a, &b}) {
        cli::RunConfig cfg;
        cfg.seed = 42;
        cfg.synth = acceptance_spec();
        cfg.out_dir = dir->path();
        cli::cmd_synth(cfg);
        cfg.audio = dir->path() / "audio.wav";
        cfg.kinematic = dir->path() / "kinematic.csv";
        cfg.annotations = dir->path() / "annotations.csv";
        cfg.out_dir = dir->path() / "compare";
        cli::cmd_compare(cfg);
    }
    std::size_t files = 0;
    for (const auto& e : fs::recursive_directory_iterator(a.path())) {
        if (!e.is_regular_file()) continue;
        const auto other = b.path() / fs::relative(e.path(), a.path());
        v.require(fs::exists(other) && io::read_file(e.path()) == io::read_file(other),
                  "output differs: " + fs::relative(e.path(), a.path()).string());
        ++files;
    }
    v.require(files == 9, "expected 9 output files, found " + std::to_string(files));
    v.detail = (v.pass ? "" : v.detail + "; ") + std::to_string(files) + " files byte-identical across two synth+compare runs";
    return v;
}

// A degenerate case passes when it throws the expected error type or returns only finite values.
template <class Expected>
bool throws(const std::function<void()>& f, std::string* what) {
    try {
        f();
    } catch (const Expected& e) {
        *what = e.what();
        return true;
    } catch (const std::exception& e) {
        *what = std::string("unexpected error: ") + e.what();
        return false;
    }
    *what = "no error";
    return false;
}

bool all_finite(const Comparison& c) {
    for (const auto& r : c.all_reports())
        if (!std::isfinite(r.accuracy) || !std::isfinite(r.recall_major) || !std::isfinite(r.recall_minor)) return false;
    for (const auto& run : c.runs) {
        for (const double p : run.stages.raw.probs)
            if (!std::isfinite(p)) return false;
        for (const double s : run.stages.raw.scores)
            if (!std::isfinite(s)) return false;
    }
    return true;
}

Verdict degenerate_inputs() {
    Verdict v;
    SynthSpec spec;
    spec.duration_s = 120.0;
    spec.seed = 8;
    const auto rec = synth_recording(spec);
    const auto sel = default_training_selection(rec.truth);
    std::string what;

    {
        auto audio = rec.audio;
        std::fill(audio.samples.begin(), audio.samples.end(), 0.0f);
        const auto grid = SegmentGrid::covering(audio.duration_s(), rec.kinematic.duration_s());
        const auto f = extract_segment_features(audio, rec.kinematic, grid);
        v.require(f.audio.all_finite(), "silent audio: non-finite features");
        const auto c = compare_modalities(audio, rec.kinematic, rec.truth, sel);
        v.require(all_finite(c), "silent audio: non-finite output");
        v.notes.push_back("silent audio: finite, audio-only MCF accuracy " +
                          fmt("%.4f", c.report(Modality::Audio, Stage::Mcf).accuracy));
    }
    {
        auto kin = rec.kinematic;
        const double level[] = {0.0, 0.0, synth_recipe::kGravity, 0.01, -0.02, 0.0};
        for (std::size_t ch = 0; ch < kNumKinematicChannels; ++ch) std::fill(kin.channels[ch].begin(), kin.channels[ch].end(), level[ch]);
        const auto c = compare_modalities(rec.audio, kin, rec.truth, sel);
        v.require(all_finite(c), "constant IMU: non-finite output");
        v.notes.push_back("constant IMU: finite, kinematic-only MCF accuracy " +
                          fmt("%.4f", c.report(Modality::Kinematic, Stage::Mcf).accuracy));
    }
    {
        AnnotationTrack single;
        single.intervals = {{0.0, 120.0, Activity::Major}};
        const bool ok = throws<InvalidArgument>(
            [&] { compare_modalities(rec.audio, rec.kinematic, single, default_training_selection(single)); }, &what);
        v.require(ok, "single-class annotations: " + what);
        v.notes.push_back("single-class annotations: " + what);
    }
    {
        KinematicStream short_kin = rec.kinematic;
        for (auto& ch : short_kin.channels) ch.resize(11);  // 0.11 s
        const bool ok = throws<InvalidArgument>(
            [&] { compare_modalities(rec.audio, short_kin, rec.truth, sel); }, &what);
        v.require(ok, "zero overlap: " + what);
        v.notes.push_back("zero overlap: " + what);
        AudioStream empty;
        const bool ok2 = throws<InvalidArgument>([&] { compare_modalities(empty, rec.kinematic, rec.truth, sel); }, &what);
        v.require(ok2, "empty audio: " + what);
    }
    {
        AnnotationTrack elsewhere;
        elsewhere.intervals = {{500.0, 510.0, Activity::Major}, {510.0, 520.0, Activity::Minor}};
        const auto grid = SegmentGrid::covering(rec.audio.duration_s(), rec.kinematic.duration_s());
        const bool ok = throws<InvalidArgument>(
            [&] { evaluate(std::vector(grid.n_segments, Activity::Major), elsewhere, grid); }, &what);
        v.require(ok, "annotations outside the recording: " + what);
        v.notes.push_back("annotations outside the recording: " + what);
    }
    v.detail = (v.pass ? "" : v.detail + "; ") + "silent audio, constant IMU, single-class annotations, zero overlap";
    return v;
}

}  // namespace

int main() {
    std::vector<std::pair<std::string, Verdict>> results;
    auto record = [&](const std::string& name, const std::function<Verdict()>& f) {
        try {
            results.emplace_back(name, f());
        } catch (const std::exception& e) {
            Verdict v;
            v.pass = false;
            v.detail = std::string("exception: ") + e.what();
            results.emplace_back(name, v);
        }
    };

    // The acceptance recording feeds criteria 3, 5 and 6.
    Comparison experiment;
    double experiment_s = 0.0;
    bool experiment_ok = false;
    std::string experiment_error;
    try {
        const auto t0 = std::chrono::steady_clock::now();
        const auto rec = synth_recording(acceptance_spec());
        experiment = compare_modalities(rec.audio, rec.kinematic, rec.truth, default_training_selection(rec.truth));
        experiment_s = seconds_since(t0);
        experiment_ok = true;
    } catch (const std::exception& e) {
        experiment_error = e.what();
    }
    auto needs_experiment = [&](const std::function<Verdict()>& f) {
        return [&, f] {
            if (!experiment_ok) throw Error("acceptance recording failed: " + experiment_error);
            return f();
        };
    };

    record("feature-oracle equivalence", feature_oracle);
    record("scale equivariance", scale_equivariance);
    record("SVM correctness", [&] {
        std::vector<SvmModel> models;
        if (experiment_ok)
            for (const auto& run : experiment.runs)
                if (run.trained.converged) models.push_back(run.trained.model);
        return svm_correctness(models);
    });
    record("smoothing oracles", smoothing_oracles);
    record("synthetic fused experiment", needs_experiment([&] { return fused_experiment(experiment, experiment_s); }));
    record("smoothing preserves accuracy", needs_experiment([&] { return smoothing_gain(experiment); }));
    record("determinism", determinism);
    record("degenerate inputs", degenerate_inputs);

    bool all = true;
    for (std::size_t i = 0; i < results.size(); ++i) {
        const auto& [name, v] = results[i];
        std::printf("%s %zu %s: %s\n", v.pass ? "PASS" : "FAIL", i + 1, name.c_str(), v.detail.c_str());
        for (const auto& n : v.notes) std::printf("       %s\n", n.c_str());
        all = all && v.pass;
    }
    if (experiment_ok) std::printf("accuracies: %s\n", accuracy_table(experiment).c_str());
    return all ? 0 : 1;
}
