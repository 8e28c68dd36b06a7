#pragma once

// Per-segment feature extraction on the shared 120 ms grid.
//
// Audio: 25 band coefficients, RMS, STE, spectral flux, entropy, centroid and
// roll-off (31 columns). Kinematic: the same set plus ZCR on two
// orientation-invariant channels, |accel - window mean| and |gyro| (64 columns).
// All spectral descriptors ignore the DC bin.

#include <algorithm>
#include <cmath>
#include <complex>
#include <cstdio>
#include <limits>
#include <numbers>
#include <numeric>
#include <span>
#include <string>
#include <vector>

#include "core.hpp"
#include "feature_matrix.hpp"
#include "fft.hpp"
#include "ingest.hpp"

namespace equipact {

/// Non-overlapping 120 ms tiling shared by both modalities.
struct SegmentGrid {
    double segment_s = kSegmentSeconds;
    double hop_s = kSegmentSeconds;
    std::size_t n_segments = 0;

    /// floor(min(durations) / segment), snapped so 1.2 s gives exactly 10.
    static SegmentGrid covering(double audio_duration_s, double kinematic_duration_s) {
        SegmentGrid g;
        const double d = std::min(audio_duration_s, kinematic_duration_s);
        g.n_segments = d > 0.0 ? static_cast<std::size_t>(std::floor(d / g.segment_s + kGridEpsilon)) : 0;
        return g;
    }

    double start_s(std::size_t k) const noexcept { return static_cast<double>(k) * hop_s; }
    double end_s(std::size_t k) const noexcept { return start_s(k) + segment_s; }
    double center_s(std::size_t k) const noexcept { return start_s(k) + 0.5 * segment_s; }
};

struct SpectrumFrame {
    std::vector<double> magnitudes;  // bins 0..fft_len/2
    double bin_hz = 0.0;

    std::size_t bins() const noexcept { return magnitudes.size(); }
    double frequency(std::size_t k) const noexcept { return static_cast<double>(k) * bin_hz; }
};

struct FeatureConfig {
    double audio_window_s = kSegmentSeconds;
    std::size_t audio_frame_len = 1024;
    std::size_t audio_fft_len = 1024;
    double kinematic_window_s = 1.2;
    std::size_t kinematic_frame_len = 64;
    std::size_t kinematic_fft_len = 128;
    std::size_t n_bands = 25;
    double rolloff_fraction = 0.85;
};

// ---------------------------------------------------------------------------
// Windowing

struct WindowSpan {
    std::size_t start = 0;
    std::size_t length = 0;
};

/// One analysis window per grid segment: `window_s` long, centered on the
/// segment, shifted inward (never shortened) where it would cross a signal edge.
inline std::vector<WindowSpan> segment_signal(std::size_t signal_len, int rate_hz, const SegmentGrid& grid,
                                              double window_s) {
    if (rate_hz <= 0) throw InvalidArgument("sample rate must be positive");
    if (window_s + kGridEpsilon < grid.segment_s) throw InvalidArgument("analysis window shorter than a segment");
    const auto len = static_cast<std::size_t>(std::llround(window_s * rate_hz));
    if (len < 8) throw InvalidArgument("analysis window must span at least 8 samples");
    if (signal_len < len)
        throw InvalidArgument("signal of " + std::to_string(signal_len) + " samples is shorter than one " +
                              std::to_string(len) + "-sample window");

    std::vector<WindowSpan> out;
    out.reserve(grid.n_segments);
    const auto max_start = static_cast<long long>(signal_len - len);
    for (std::size_t k = 0; k < grid.n_segments; ++k) {
        const double first = grid.center_s(k) * rate_hz - static_cast<double>(len) / 2.0;
        const auto start = std::clamp(std::llround(first), 0LL, max_start);
        out.push_back({static_cast<std::size_t>(start), len});
    }
    return out;
}

template <class T>
std::vector<std::span<const T>> segment_signal(std::span<const T> x, int rate_hz, const SegmentGrid& grid,
                                               double window_s) {
    std::vector<std::span<const T>> out;
    for (const auto w : segment_signal(x.size(), rate_hz, grid, window_s))
        out.push_back(x.subspan(w.start, w.length));
    return out;
}

// ---------------------------------------------------------------------------
// Spectrum

inline std::vector<double> hann_window(std::size_t n) {
    std::vector<double> w(n, 1.0);
    if (n < 2) return w;
    for (std::size_t i = 0; i < n; ++i)
        w[i] = 0.5 - 0.5 * std::cos(2.0 * std::numbers::pi * static_cast<double>(i) / static_cast<double>(n - 1));
    return w;
}

/// Reusable Hann-framed, 50%-overlap magnitude-spectrum averager.
class SpectrumAnalyzer {
public:
    SpectrumAnalyzer(std::size_t frame_len, std::size_t fft_len)
        : frame_len_(frame_len), fft_len_(fft_len), window_(hann_window(frame_len)), fft_(fft_len), buf_(fft_len) {
        if (frame_len < 2) throw InvalidArgument("frame length must be at least 2");
        if (fft_len < frame_len) throw InvalidArgument("FFT length shorter than frame length");
    }

    std::size_t frame_len() const noexcept { return frame_len_; }
    std::size_t fft_len() const noexcept { return fft_len_; }
    std::size_t hop() const noexcept { return frame_len_ / 2; }

    std::size_t frame_count(std::size_t window_len) const noexcept {
        return window_len < frame_len_ ? 0 : (window_len - frame_len_) / hop() + 1;
    }

    template <class T>
    SpectrumFrame operator()(std::span<const T> window, int rate_hz) {
        const std::size_t frames = frame_count(window.size());
        if (frames == 0)
            throw InvalidArgument("window of " + std::to_string(window.size()) + " samples holds no full " +
                                  std::to_string(frame_len_) + "-sample frame");
        SpectrumFrame out;
        out.bin_hz = static_cast<double>(rate_hz) / static_cast<double>(fft_len_);
        out.magnitudes.assign(fft_len_ / 2 + 1, 0.0);
        for (std::size_t f = 0; f < frames; ++f) {
            const std::size_t off = f * hop();
            for (std::size_t i = 0; i < frame_len_; ++i) buf_[i] = {static_cast<double>(window[off + i]) * window_[i], 0.0};
            std::fill(buf_.begin() + static_cast<std::ptrdiff_t>(frame_len_), buf_.end(), std::complex<double>{});
            fft_.forward(buf_);
            for (std::size_t k = 0; k < out.magnitudes.size(); ++k) out.magnitudes[k] += std::abs(buf_[k]);
        }
        for (auto& m : out.magnitudes) m /= static_cast<double>(frames);
        return out;
    }

private:
    std::size_t frame_len_;
    std::size_t fft_len_;
    std::vector<double> window_;
    Fft fft_;
    std::vector<std::complex<double>> buf_;
};

template <class T>
SpectrumFrame avg_spectrum(std::span<const T> window, int rate_hz, std::size_t frame_len, std::size_t fft_len) {
    if (frame_len > window.size()) throw InvalidArgument("frame length exceeds window length");
    SpectrumAnalyzer analyzer(frame_len, fft_len);
    return analyzer(window, rate_hz);
}

// ---------------------------------------------------------------------------
// Spectral descriptors

/// Mean magnitude of `n_bands` contiguous groups of bins 1..K (sizes differ
/// by at most one), scaled so the largest band is 1. All-zero stays all-zero.
inline std::vector<double> stft_band_coeffs(const SpectrumFrame& spec, std::size_t n_bands = 25) {
    if (n_bands == 0) throw InvalidArgument("band count must be positive");
    if (spec.bins() < n_bands + 1) throw InvalidArgument("spectrum has fewer non-DC bins than bands");
    const std::size_t k = spec.bins() - 1;
    std::vector<double> bands(n_bands, 0.0);
    for (std::size_t b = 0; b < n_bands; ++b) {
        const std::size_t lo = 1 + b * k / n_bands;
        const std::size_t hi = 1 + (b + 1) * k / n_bands;
        double sum = 0.0;
        for (std::size_t i = lo; i < hi; ++i) sum += spec.magnitudes[i];
        bands[b] = sum / static_cast<double>(hi - lo);
    }
    const double peak = *std::max_element(bands.begin(), bands.end());
    if (peak > 0.0)
        for (auto& v : bands) v /= peak;
    return bands;
}

/// Magnitude-weighted mean frequency. 0 for an all-zero spectrum.
inline double spectral_centroid(const SpectrumFrame& spec) {
    double num = 0.0, den = 0.0;
    for (std::size_t k = 1; k < spec.bins(); ++k) {
        num += spec.frequency(k) * spec.magnitudes[k];
        den += spec.magnitudes[k];
    }
    return den > 0.0 ? num / den : 0.0;
}

/// Lowest bin frequency at which cumulative power reaches `q` of the total.
inline double spectral_rolloff(const SpectrumFrame& spec, double q = 0.85) {
    double total = 0.0;
    for (std::size_t k = 1; k < spec.bins(); ++k) total += spec.magnitudes[k] * spec.magnitudes[k];
    if (total <= 0.0) return 0.0;
    double acc = 0.0;
    for (std::size_t k = 1; k < spec.bins(); ++k) {
        acc += spec.magnitudes[k] * spec.magnitudes[k];
        if (acc >= q * total) return spec.frequency(k);
    }
    return spec.frequency(spec.bins() - 1);
}

/// Shannon entropy of the power distribution, normalized by ln K into [0, 1].
inline double spectral_entropy(const SpectrumFrame& spec) {
    const std::size_t k_bins = spec.bins() > 0 ? spec.bins() - 1 : 0;
    if (k_bins < 2) return 0.0;
    double total = 0.0;
    for (std::size_t k = 1; k < spec.bins(); ++k) total += spec.magnitudes[k] * spec.magnitudes[k];
    if (total <= 0.0) return 0.0;
    double h = 0.0;
    for (std::size_t k = 1; k < spec.bins(); ++k) {
        const double p = spec.magnitudes[k] * spec.magnitudes[k] / total;
        if (p > 0.0) h -= p * std::log(p);
    }
    return std::clamp(h / std::log(static_cast<double>(k_bins)), 0.0, 1.0);
}

/// Squared L2 distance between L1-normalized magnitude spectra.
inline double spectral_flux(const SpectrumFrame& current, const SpectrumFrame& previous) {
    if (current.bins() != previous.bins()) throw InvalidArgument("spectral flux needs equal bin counts");
    auto l1 = [](const SpectrumFrame& s) {
        double sum = 0.0;
        for (std::size_t k = 1; k < s.bins(); ++k) sum += s.magnitudes[k];
        return sum;
    };
    const double a = l1(current), b = l1(previous);
    double flux = 0.0;
    for (std::size_t k = 1; k < current.bins(); ++k) {
        const double x = a > 0.0 ? current.magnitudes[k] / a : 0.0;
        const double y = b > 0.0 ? previous.magnitudes[k] / b : 0.0;
        flux += (x - y) * (x - y);
    }
    return flux;
}

// ---------------------------------------------------------------------------
// Time-domain descriptors

template <class T>
double ste(std::span<const T> x) {
    if (x.empty()) throw InvalidArgument("STE of an empty window");
    double sum = 0.0;
    for (const auto v : x) sum += static_cast<double>(v) * static_cast<double>(v);
    return sum / static_cast<double>(x.size());
}

template <class T>
double rms(std::span<const T> x) {
    return std::sqrt(ste(x));
}

/// Fraction of adjacent pairs with a strict sign change after mean removal.
/// Zeros inherit the sign of the previous nonzero sample.
template <class T>
double zcr(std::span<const T> x) {
    if (x.size() < 2) throw InvalidArgument("ZCR needs at least two samples");
    double mean = 0.0;
    for (const auto v : x) mean += static_cast<double>(v);
    mean /= static_cast<double>(x.size());
    int prev = 0;
    std::size_t crossings = 0;
    for (const auto v : x) {
        const double d = static_cast<double>(v) - mean;
        const int s = (d > 0.0) - (d < 0.0);
        if (s == 0) continue;
        if (prev != 0 && s != prev) ++crossings;
        prev = s;
    }
    return static_cast<double>(crossings) / static_cast<double>(x.size() - 1);
}

// ---------------------------------------------------------------------------
// Segment features

struct ModalityFeatures {
    FeatureMatrix audio;
    FeatureMatrix kinematic;
};

namespace detail {

inline std::string two_digits(std::size_t i) {
    char buf[24];
    std::snprintf(buf, sizeof buf, "%02zu", i);
    return buf;
}

inline std::vector<std::string> spectral_feature_names(const std::string& prefix, std::size_t n_bands, bool with_zcr) {
    std::vector<std::string> names;
    for (std::size_t b = 0; b < n_bands; ++b) names.push_back(prefix + "stft" + two_digits(b));
    for (const char* n : {"rms", "ste", "sf", "se", "sc", "sro"}) names.push_back(prefix + n);
    if (with_zcr) names.push_back(prefix + "zcr");
    return names;
}

/// Fills all columns except spectral flux; returns the window's spectrum.
template <class T>
SpectrumFrame fill_window_features(std::span<const T> w, int rate_hz, SpectrumAnalyzer& analyzer,
                                   const FeatureConfig& cfg, bool with_zcr, std::span<double> row) {
    auto spec = analyzer(w, rate_hz);
    const auto bands = stft_band_coeffs(spec, cfg.n_bands);
    std::copy(bands.begin(), bands.end(), row.begin());
    std::size_t c = cfg.n_bands;
    row[c++] = rms(w);
    row[c++] = ste(w);
    row[c++] = 0.0;  // flux, filled by the sequential pass
    row[c++] = spectral_entropy(spec);
    row[c++] = spectral_centroid(spec);
    row[c++] = spectral_rolloff(spec, cfg.rolloff_fraction);
    if (with_zcr) row[c++] = zcr(w);
    return spec;
}

}  // namespace detail

inline std::vector<std::string> audio_feature_names(const FeatureConfig& cfg = {}) {
    return detail::spectral_feature_names("aud.", cfg.n_bands, false);
}

inline std::vector<std::string> kinematic_feature_names(const FeatureConfig& cfg = {}) {
    auto names = detail::spectral_feature_names("kin.acc.", cfg.n_bands, true);
    const auto gyr = detail::spectral_feature_names("kin.gyr.", cfg.n_bands, true);
    names.insert(names.end(), gyr.begin(), gyr.end());
    return names;
}

inline FeatureMatrix extract_audio_features(const AudioStream& audio, const SegmentGrid& grid,
                                            const FeatureConfig& cfg = {}) {
    FeatureMatrix fm(audio_feature_names(cfg), grid.n_segments);
    if (grid.n_segments == 0) return fm;
    const std::span<const float> x(audio.samples);
    const auto windows = segment_signal(x, audio.sample_rate_hz, grid, cfg.audio_window_s);
    SpectrumAnalyzer analyzer(cfg.audio_frame_len, cfg.audio_fft_len);
    const std::size_t flux_col = cfg.n_bands + 2;

    std::vector<SpectrumFrame> spectra;
    spectra.reserve(windows.size());
    for (std::size_t k = 0; k < windows.size(); ++k)
        spectra.push_back(detail::fill_window_features(windows[k], audio.sample_rate_hz, analyzer, cfg, false, fm.row(k)));

    SpectrumFrame silent{std::vector<double>(spectra.front().bins(), 0.0), spectra.front().bin_hz};
    for (std::size_t k = 0; k < spectra.size(); ++k)
        fm.at(k, flux_col) = spectral_flux(spectra[k], k == 0 ? silent : spectra[k - 1]);
    return fm;
}

/// Per-window derived channels: |accel - per-window mean| and |gyro|.
struct KinematicMagnitudes {
    std::vector<double> accel;
    std::vector<double> gyro;
};

inline KinematicMagnitudes kinematic_magnitudes(const KinematicStream& kin, WindowSpan w) {
    KinematicMagnitudes out;
    out.accel.assign(w.length, 0.0);
    out.gyro.assign(w.length, 0.0);
    for (std::size_t axis = kAx; axis <= kAz; ++axis) {
        const auto& ch = kin.channels[axis];
        double mean = 0.0, peak = 0.0;
        for (std::size_t i = 0; i < w.length; ++i) {
            mean += ch[w.start + i];
            peak = std::max(peak, std::abs(ch[w.start + i]));
        }
        mean /= static_cast<double>(w.length);
        // Deviations at rounding level (a constant axis) are exactly zero, so
        // gravity alone cannot produce a max-normalized band pattern.
        const double noise_floor = 16.0 * std::numeric_limits<double>::epsilon() * peak;
        for (std::size_t i = 0; i < w.length; ++i) {
            const double d = ch[w.start + i] - mean;
            if (std::abs(d) > noise_floor) out.accel[i] += d * d;
        }
    }
    for (std::size_t axis = kGx; axis <= kGz; ++axis) {
        const auto& ch = kin.channels[axis];
        for (std::size_t i = 0; i < w.length; ++i) out.gyro[i] += ch[w.start + i] * ch[w.start + i];
    }
    for (auto& v : out.accel) v = std::sqrt(v);
    for (auto& v : out.gyro) v = std::sqrt(v);
    return out;
}

inline FeatureMatrix extract_kinematic_features(const KinematicStream& kin, const SegmentGrid& grid,
                                                const FeatureConfig& cfg = {}) {
    kin.validate();
    FeatureMatrix fm(kinematic_feature_names(cfg), grid.n_segments);
    if (grid.n_segments == 0) return fm;
    const auto windows = segment_signal(kin.size(), kin.sample_rate_hz, grid, cfg.kinematic_window_s);
    SpectrumAnalyzer analyzer(cfg.kinematic_frame_len, cfg.kinematic_fft_len);
    const std::size_t per_channel = cfg.n_bands + 7;
    const std::size_t flux_col = cfg.n_bands + 2;

    std::vector<SpectrumFrame> acc_spectra, gyr_spectra;
    for (std::size_t k = 0; k < windows.size(); ++k) {
        const auto mags = kinematic_magnitudes(kin, windows[k]);
        auto row = fm.row(k);
        acc_spectra.push_back(detail::fill_window_features(std::span<const double>(mags.accel), kin.sample_rate_hz,
                                                           analyzer, cfg, true, row.first(per_channel)));
        gyr_spectra.push_back(detail::fill_window_features(std::span<const double>(mags.gyro), kin.sample_rate_hz,
                                                           analyzer, cfg, true, row.subspan(per_channel, per_channel)));
    }
    SpectrumFrame silent{std::vector<double>(acc_spectra.front().bins(), 0.0), acc_spectra.front().bin_hz};
    for (std::size_t k = 0; k < windows.size(); ++k) {
        fm.at(k, flux_col) = spectral_flux(acc_spectra[k], k == 0 ? silent : acc_spectra[k - 1]);
        fm.at(k, per_channel + flux_col) = spectral_flux(gyr_spectra[k], k == 0 ? silent : gyr_spectra[k - 1]);
    }
    return fm;
}

/// Both modalities on a shared grid. Streams must each cover the grid.
inline ModalityFeatures extract_segment_features(const AudioStream& audio, const KinematicStream& kin,
                                                 const SegmentGrid& grid, const FeatureConfig& cfg = {}) {
    if (grid.start_s(grid.n_segments) > audio.duration_s() + kGridEpsilon ||
        grid.start_s(grid.n_segments) > kin.duration_s() + kGridEpsilon)
        throw InvalidArgument("segment grid extends past the end of a stream");
    return {extract_audio_features(audio, grid, cfg), extract_kinematic_features(kin, grid, cfg)};
}

inline ModalityFeatures extract_segment_features(const AudioStream& audio, const KinematicStream& kin,
                                                 const FeatureConfig& cfg = {}) {
    const auto grid = SegmentGrid::covering(audio.duration_s(), kin.duration_s());
    if (grid.n_segments == 0) throw InvalidArgument("audio and kinematic streams share no full 120 ms segment");
    return extract_segment_features(audio, kin, grid, cfg);
}

}  // namespace equipact
