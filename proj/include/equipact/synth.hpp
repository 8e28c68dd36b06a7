#pragma once

// Deterministic synthetic recordings: an alternating Major/Minor dwell path
// rendered as microphone audio and 6-axis IMU data, with per-modality
// "confusion" episodes during which the modality loses its class signature.
//
// Every random draw comes from SynthSpec::seed through splitmix64-derived
// sub-streams; no other entropy source is used.

#include <algorithm>
#include <array>
#include <cmath>
#include <complex>
#include <cstdint>
#include <numbers>
#include <random>
#include <vector>

#include "core.hpp"
#include "ingest.hpp"

namespace equipact {

struct SynthSpec {
    double duration_s = 600.0;
    std::uint64_t seed = 42;
    double major_dwell_min_s = 5.0;
    double major_dwell_max_s = 10.0;
    double minor_dwell_min_s = 5.0;
    double minor_dwell_max_s = 10.0;
    double audio_snr_db = 40.0;
    double kin_snr_db = 40.0;
    double audio_confusability = 0.0;
    double kin_confusability = 0.0;
    int audio_rate_hz = kDefaultAudioRateHz;
    int kinematic_rate_hz = kDefaultKinematicRateHz;

    void validate() const {
        if (!(duration_s > 0.0) || !std::isfinite(duration_s)) throw InvalidArgument("duration must be positive");
        if (!(major_dwell_min_s > 0.0 && major_dwell_max_s >= major_dwell_min_s && minor_dwell_min_s > 0.0 &&
              minor_dwell_max_s >= minor_dwell_min_s))
            throw InvalidArgument("dwell ranges must be positive with min <= max");
        for (const double c : {audio_confusability, kin_confusability})
            if (!(c >= 0.0 && c <= 1.0)) throw InvalidArgument("confusability must lie in [0, 1]");
        if (!std::isfinite(audio_snr_db) || !std::isfinite(kin_snr_db)) throw InvalidArgument("SNR must be finite");
        if (audio_rate_hz <= 0 || kinematic_rate_hz <= 0) throw InvalidArgument("sample rates must be positive");
    }
};

struct SynthRecording {
    AudioStream audio;
    KinematicStream kinematic;
    AnnotationTrack truth;
};

// Generator recipe constants, calibrated against the end-to-end pipeline.
namespace synth_recipe {
inline constexpr double kFundamentalHz = 110.0;
inline constexpr int kHarmonics = 8;
inline constexpr double kBandLowHz = 800.0;
inline constexpr double kBandHighHz = 2000.0;
inline constexpr double kHarmonicShare = 0.8;   // RMS of the harmonic stack within Major audio
inline constexpr double kBandNoiseShare = 0.6;  // RMS of the band-passed noise within Major audio
inline constexpr double kMajorAudioRms = 1.0;
inline constexpr double kMinorAudioRms = 0.25;  // Major:Minor = 4:1
inline constexpr double kPeakLevel = 0.95;

inline constexpr double kMajorAccelHz = 8.0;
inline constexpr double kMajorAccelAmp = 1.5;   // m/s^2
inline constexpr double kMajorGyroStd = 0.25;   // rad/s per axis
inline constexpr double kMajorGyroCutoffHz = 5.0;
inline constexpr double kMinorAccelStd = 0.1;
inline constexpr double kMinorGyroStd = 0.03;
inline constexpr double kMinorDriftCutoffHz = 0.3;
inline constexpr double kMajorAccelAxisRms = 0.612;  // 1.5 / sqrt(2) spread over three axes
inline constexpr double kGravity = 9.81;

// The common texture is an equal-power blend of both class signatures at the
// geometric mean of their levels, so it carries no class information.

// Confusion episodes cover about kEpisodeShare * confusability of the
// timeline; outside them the class signal is blended toward the common
// texture with weight kBlendFloor * confusability.
inline constexpr double kEpisodeShare = 0.4;
inline constexpr double kEpisodeMinS = 4.0;
inline constexpr double kEpisodeMaxS = 12.0;
inline constexpr double kBlendFloor = 0.5;
}  // namespace synth_recipe

namespace detail {

inline std::uint64_t splitmix64(std::uint64_t x) noexcept {
    x += 0x9E3779B97F4A7C15ull;
    x = (x ^ (x >> 30)) * 0xBF58476D1CE4E5B9ull;
    x = (x ^ (x >> 27)) * 0x94D049BB133111EBull;
    return x ^ (x >> 31);
}

/// Portable draws on top of mt19937_64 (whose output sequence is fixed by the standard).
class Rng {
public:
    Rng(std::uint64_t seed, std::uint64_t stream) : gen_(splitmix64(seed ^ splitmix64(stream))) {}

    double uniform() noexcept { return static_cast<double>(gen_() >> 11) * 0x1.0p-53; }

    double uniform(double lo, double hi) noexcept { return lo + (hi - lo) * uniform(); }

    double normal() noexcept {
        if (has_spare_) {
            has_spare_ = false;
            return spare_;
        }
        double u1 = uniform();
        while (u1 <= 0.0) u1 = uniform();
        const double u2 = uniform();
        const double r = std::sqrt(-2.0 * std::log(u1));
        const double a = 2.0 * std::numbers::pi * u2;
        spare_ = r * std::sin(a);
        has_spare_ = true;
        return r * std::cos(a);
    }

private:
    std::mt19937_64 gen_;
    double spare_ = 0.0;
    bool has_spare_ = false;
};

enum : std::uint64_t {
    kStreamPath = 1,
    kStreamAudioConfusion,
    kStreamKinConfusion,
    kStreamHarmonicPhase,
    kStreamBandNoise,
    kStreamPinkNoise,
    kStreamAudioNoise,
    kStreamKinMajor,
    kStreamKinMinor,
    kStreamKinNoise,
    kStreamCalibration = 0xC0FFEE,
};

/// RBJ cookbook biquad, direct form I.
class Biquad {
public:
    static Biquad lowpass(double fc, double fs, double q = std::numbers::sqrt2 / 2.0) {
        const double w = 2.0 * std::numbers::pi * fc / fs, cw = std::cos(w), alpha = std::sin(w) / (2.0 * q);
        return Biquad((1.0 - cw) / 2.0, 1.0 - cw, (1.0 - cw) / 2.0, 1.0 + alpha, -2.0 * cw, 1.0 - alpha);
    }
    static Biquad highpass(double fc, double fs, double q = std::numbers::sqrt2 / 2.0) {
        const double w = 2.0 * std::numbers::pi * fc / fs, cw = std::cos(w), alpha = std::sin(w) / (2.0 * q);
        return Biquad((1.0 + cw) / 2.0, -(1.0 + cw), (1.0 + cw) / 2.0, 1.0 + alpha, -2.0 * cw, 1.0 - alpha);
    }

    double operator()(double x) noexcept {
        const double y = b0_ * x + b1_ * x1_ + b2_ * x2_ - a1_ * y1_ - a2_ * y2_;
        x2_ = x1_, x1_ = x, y2_ = y1_, y1_ = y;
        return y;
    }

private:
    Biquad(double b0, double b1, double b2, double a0, double a1, double a2)
        : b0_(b0 / a0), b1_(b1 / a0), b2_(b2 / a0), a1_(a1 / a0), a2_(a2 / a0) {}

    double b0_, b1_, b2_, a1_, a2_;
    double x1_ = 0, x2_ = 0, y1_ = 0, y2_ = 0;
};

class OnePoleLowpass {
public:
    OnePoleLowpass(double fc, double fs) : alpha_(1.0 - std::exp(-2.0 * std::numbers::pi * fc / fs)) {}

    double operator()(double x) noexcept { return y_ += alpha_ * (x - y_); }

private:
    double alpha_;
    double y_ = 0.0;
};

// Noise sources with unit-ish raw level; gains are measured by `unit_gain`.

class BandNoise {
public:
    BandNoise(std::uint64_t seed, std::uint64_t stream, double fs)
        : rng_(seed, stream),
          hp_(Biquad::highpass(synth_recipe::kBandLowHz, fs)),
          lp_(Biquad::lowpass(synth_recipe::kBandHighHz, fs)) {}

    double operator()() noexcept { return lp_(hp_(rng_.normal())); }

private:
    Rng rng_;
    Biquad hp_, lp_;
};

/// Economy pink-noise filter (three one-pole sections).
class PinkNoise {
public:
    PinkNoise(std::uint64_t seed, std::uint64_t stream) : rng_(seed, stream) {}

    double operator()() noexcept {
        const double w = rng_.normal();
        b0_ = 0.99765 * b0_ + w * 0.0990460;
        b1_ = 0.96300 * b1_ + w * 0.2965164;
        b2_ = 0.57000 * b2_ + w * 1.0526913;
        return b0_ + b1_ + b2_ + w * 0.1848;
    }

private:
    Rng rng_;
    double b0_ = 0, b1_ = 0, b2_ = 0;
};

class LowpassNoise {
public:
    LowpassNoise(std::uint64_t seed, std::uint64_t stream, double fc, double fs)
        : rng_(seed, stream), lp_(Biquad::lowpass(fc, fs)) {}

    double operator()() noexcept { return lp_(rng_.normal()); }

private:
    Rng rng_;
    Biquad lp_;
};

class DriftNoise {
public:
    DriftNoise(std::uint64_t seed, std::uint64_t stream, double fc, double fs) : rng_(seed, stream), lp_(fc, fs) {}

    double operator()() noexcept { return lp_(rng_.normal()); }

private:
    Rng rng_;
    OnePoleLowpass lp_;
};

/// Gain that brings a source to unit RMS, measured on a fixed calibration
/// stream after a warm-up so the value does not depend on the recording seed.
template <class Make>
double unit_gain(Make make, std::size_t n) {
    auto src = make(kStreamCalibration);
    for (std::size_t i = 0; i < n / 4; ++i) (void)src();
    double acc = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
        const double v = src();
        acc += v * v;
    }
    return acc > 0.0 ? 1.0 / std::sqrt(acc / static_cast<double>(n)) : 0.0;
}

struct Dwell {
    double start_s;
    double end_s;
    Activity label;
};

inline std::vector<Dwell> draw_dwells(const SynthSpec& spec) {
    Rng rng(spec.seed, kStreamPath);
    std::vector<Dwell> out;
    Activity state = rng.uniform() < 0.5 ? Activity::Major : Activity::Minor;
    double t = 0.0;
    while (t < spec.duration_s) {
        const double len = state == Activity::Major ? rng.uniform(spec.major_dwell_min_s, spec.major_dwell_max_s)
                                                    : rng.uniform(spec.minor_dwell_min_s, spec.minor_dwell_max_s);
        const double end = std::min(spec.duration_s, t + len);
        out.push_back({t, end, state});
        t = end;
        state = state == Activity::Major ? Activity::Minor : Activity::Major;
    }
    return out;
}


struct Episode {
    double start_s;
    double end_s;
};

/// Alternating clear gaps and confusion episodes; the expected covered share
/// is kEpisodeShare * confusability.
inline std::vector<Episode> draw_episodes(double duration_s, double confusability, Rng& rng) {
    using namespace synth_recipe;
    std::vector<Episode> out;
    const double share = kEpisodeShare * confusability;
    if (share <= 0.0) return out;
    const double mean_episode = 0.5 * (kEpisodeMinS + kEpisodeMaxS);
    const double mean_gap = mean_episode * (1.0 - share) / share;
    double t = rng.uniform(0.0, 2.0 * mean_gap);
    while (t < duration_s) {
        const double len = rng.uniform(kEpisodeMinS, kEpisodeMaxS);
        out.push_back({t, std::min(duration_s, t + len)});
        t += len + rng.uniform(0.5 * mean_gap, 1.5 * mean_gap);
    }
    return out;
}

/// Walks dwells and episodes forward in time for sample-rate lookups.
class Timeline {
public:
    Timeline(const std::vector<Dwell>& dwells, const std::vector<Episode>& episodes, double confusability)
        : dwells_(dwells), episodes_(episodes), floor_(synth_recipe::kBlendFloor * confusability) {}

    Activity state(double t) noexcept {
        while (d_ + 1 < dwells_.size() && t >= dwells_[d_].end_s) ++d_;
        return dwells_[d_].label;
    }

    /// Weight of the common texture at time t.
    double blend(double t) noexcept {
        while (e_ < episodes_.size() && t >= episodes_[e_].end_s) ++e_;
        if (e_ < episodes_.size() && t >= episodes_[e_].start_s) return 1.0;
        return floor_;
    }

private:
    const std::vector<Dwell>& dwells_;
    const std::vector<Episode>& episodes_;
    double floor_;
    std::size_t d_ = 0, e_ = 0;
};

/// Equal-power, geometric-mean-level blend of a Major and a Minor sample
/// whose RMS levels are `major_rms` and `minor_rms`.
inline double common_texture(double major, double minor, double major_rms, double minor_rms) noexcept {
    const double r = std::sqrt(minor_rms / major_rms);
    return std::numbers::sqrt2 / 2.0 * (r * major + minor / r);
}

inline double noise_std_for(double signal_power, double snr_db) {
    return std::sqrt(signal_power / std::pow(10.0, snr_db / 10.0));
}

inline AudioStream render_audio(const SynthSpec& spec, const std::vector<Dwell>& dwells,
                                const std::vector<Episode>& episodes) {
    using namespace synth_recipe;
    const double fs = spec.audio_rate_hz;
    const auto n = static_cast<std::size_t>(std::llround(spec.duration_s * fs));
    const std::size_t calib = static_cast<std::size_t>(fs);

    // Harmonic stack: unit-RMS scaling from sum of 1/k^2 over the harmonics.
    double harmonic_power = 0.0;
    for (int k = 1; k <= kHarmonics; ++k) harmonic_power += 0.5 / (k * k);
    const double harmonic_gain = kHarmonicShare / std::sqrt(harmonic_power);
    std::array<std::complex<double>, kHarmonics> phase_offsets{};
    {
        Rng rng(spec.seed, kStreamHarmonicPhase);
        for (auto& p : phase_offsets) p = std::polar(1.0, 2.0 * std::numbers::pi * rng.uniform());
    }
    const auto step = std::polar(1.0, 2.0 * std::numbers::pi * kFundamentalHz / fs);

    const double band_gain = kBandNoiseShare * unit_gain([&](std::uint64_t s) { return BandNoise(spec.seed, s, fs); }, calib);
    const double pink_gain = kMinorAudioRms * unit_gain([&](std::uint64_t s) { return PinkNoise(spec.seed, s); }, calib);

    BandNoise band(spec.seed, kStreamBandNoise, fs);
    PinkNoise pink(spec.seed, kStreamPinkNoise);
    Timeline timeline(dwells, episodes, spec.audio_confusability);

    AudioStream out;
    out.sample_rate_hz = spec.audio_rate_hz;
    out.samples.resize(n);
    std::complex<double> base{1.0, 0.0};
    double power = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
        const double t = static_cast<double>(i) / fs;
        double harmonic = 0.0;
        std::complex<double> zk = base;
        for (int k = 0; k < kHarmonics; ++k) {
            harmonic += (zk * phase_offsets[k]).imag() / (k + 1);
            zk *= base;
        }
        base *= step;
        if ((i & 1023) == 1023) base /= std::abs(base);

        const double major = kMajorAudioRms * (harmonic_gain * harmonic + band_gain * band());
        const double minor = pink_gain * pink();
        const double texture = common_texture(major, minor, kMajorAudioRms, kMinorAudioRms);
        const double beta = timeline.blend(t);
        const double own = timeline.state(t) == Activity::Major ? major : minor;
        const double v = (1.0 - beta) * own + beta * texture;
        power += v * v;
        out.samples[i] = static_cast<float>(v);
    }

    Rng noise(spec.seed, kStreamAudioNoise);
    const double sigma = n ? noise_std_for(power / static_cast<double>(n), spec.audio_snr_db) : 0.0;
    double peak = 0.0;
    for (auto& s : out.samples) {
        s = static_cast<float>(s + sigma * noise.normal());
        peak = std::max(peak, static_cast<double>(std::abs(s)));
    }
    if (peak > 0.0) {
        const double g = kPeakLevel / peak;
        for (auto& s : out.samples) s = static_cast<float>(s * g);
    }
    return out;
}

inline KinematicStream render_kinematic(const SynthSpec& spec, const std::vector<Dwell>& dwells,
                                        const std::vector<Episode>& episodes) {
    using namespace synth_recipe;
    const double fs = spec.kinematic_rate_hz;
    const auto n = static_cast<std::size_t>(std::llround(spec.duration_s * fs));
    const std::size_t calib = static_cast<std::size_t>(fs) * 200;

    const double gyro_gain =
        kMajorGyroStd * unit_gain([&](std::uint64_t s) { return LowpassNoise(spec.seed, s, kMajorGyroCutoffHz, fs); }, calib);
    const double drift_gain =
        unit_gain([&](std::uint64_t s) { return DriftNoise(spec.seed, s, kMinorDriftCutoffHz, fs); }, calib);

    Rng major_rng(spec.seed, kStreamKinMajor);
    const double phase = 2.0 * std::numbers::pi * major_rng.uniform();
    // Fixed vibration direction, as for a phone rigidly mounted in the cabin.
    const std::array<double, 3> dir = {0.36, 0.48, 0.8};
    std::array<LowpassNoise, 3> gyro_jitter = {
        LowpassNoise(spec.seed, kStreamKinMajor + 100, kMajorGyroCutoffHz, fs),
        LowpassNoise(spec.seed, kStreamKinMajor + 101, kMajorGyroCutoffHz, fs),
        LowpassNoise(spec.seed, kStreamKinMajor + 102, kMajorGyroCutoffHz, fs)};
    std::array<DriftNoise, 6> drift = {
        DriftNoise(spec.seed, kStreamKinMinor + 100, kMinorDriftCutoffHz, fs),
        DriftNoise(spec.seed, kStreamKinMinor + 101, kMinorDriftCutoffHz, fs),
        DriftNoise(spec.seed, kStreamKinMinor + 102, kMinorDriftCutoffHz, fs),
        DriftNoise(spec.seed, kStreamKinMinor + 103, kMinorDriftCutoffHz, fs),
        DriftNoise(spec.seed, kStreamKinMinor + 104, kMinorDriftCutoffHz, fs),
        DriftNoise(spec.seed, kStreamKinMinor + 105, kMinorDriftCutoffHz, fs)};
    Timeline timeline(dwells, episodes, spec.kin_confusability);

    KinematicStream out;
    out.sample_rate_hz = spec.kinematic_rate_hz;
    for (auto& ch : out.channels) ch.resize(n);
    double accel_power = 0.0, gyro_power = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
        const double t = static_cast<double>(i) / fs;
        const double osc = kMajorAccelAmp * std::sin(2.0 * std::numbers::pi * kMajorAccelHz * t + phase);
        const bool major = timeline.state(t) == Activity::Major;
        const double beta = timeline.blend(t);
        for (std::size_t c = 0; c < kNumKinematicChannels; ++c) {
            const bool accel = c < 3;
            const double major_v = accel ? osc * dir[c] : gyro_gain * gyro_jitter[c - 3]();
            const double minor_v = (accel ? kMinorAccelStd : kMinorGyroStd) * drift_gain * drift[c]();
            const double texture = accel ? common_texture(major_v, minor_v, kMajorAccelAxisRms, kMinorAccelStd)
                                         : common_texture(major_v, minor_v, kMajorGyroStd, kMinorGyroStd);
            const double v = (1.0 - beta) * (major ? major_v : minor_v) + beta * texture;
            (accel ? accel_power : gyro_power) += v * v;
            out.channels[c][i] = v;
        }
    }

    Rng noise(spec.seed, kStreamKinNoise);
    const double denom = n ? 3.0 * static_cast<double>(n) : 1.0;
    const double accel_sigma = noise_std_for(accel_power / denom, spec.kin_snr_db);
    const double gyro_sigma = noise_std_for(gyro_power / denom, spec.kin_snr_db);
    for (std::size_t i = 0; i < n; ++i)
        for (std::size_t c = 0; c < kNumKinematicChannels; ++c)
            out.channels[c][i] += (c < 3 ? accel_sigma : gyro_sigma) * noise.normal();
    for (auto& v : out.channels[kAz]) v += kGravity;
    return out;
}

}  // namespace detail

/// Renders a recording and its ground truth from `spec`. Identical specs give
/// bit-identical output.
inline SynthRecording synth_recording(const SynthSpec& spec) {
    spec.validate();
    const auto dwells = detail::draw_dwells(spec);
    detail::Rng audio_conf(spec.seed, detail::kStreamAudioConfusion);
    detail::Rng kin_conf(spec.seed, detail::kStreamKinConfusion);
    const auto audio_episodes = detail::draw_episodes(spec.duration_s, spec.audio_confusability, audio_conf);
    const auto kin_episodes = detail::draw_episodes(spec.duration_s, spec.kin_confusability, kin_conf);

    SynthRecording rec;
    rec.audio = detail::render_audio(spec, dwells, audio_episodes);
    rec.kinematic = detail::render_kinematic(spec, dwells, kin_episodes);
    for (const auto& d : dwells) rec.truth.intervals.push_back({d.start_s, d.end_s, d.label});
    return rec;
}

}  // namespace equipact
