#pragma once

// Recording ingest: WAV audio, timestamped IMU CSV, activity annotations,
// and the constant clock offset that aligns the IMU with the microphone.

#include <algorithm>
#include <array>
#include <cmath>
#include <cstdint>
#include <cstring>
#include <filesystem>
#include <limits>
#include <span>
#include <string>
#include <vector>

#include "core.hpp"
#include "io.hpp"

namespace equipact {

/// Mono audio. Samples are stored as float: a 10 minute recording at
/// 44.1 kHz is 26M samples.
struct AudioStream {
    std::vector<float> samples;
    int sample_rate_hz = kDefaultAudioRateHz;

    double duration_s() const noexcept {
        return sample_rate_hz > 0 ? static_cast<double>(samples.size()) / sample_rate_hz : 0.0;
    }
};

enum KinematicChannel : std::size_t { kAx = 0, kAy, kAz, kGx, kGy, kGz, kNumKinematicChannels };

inline constexpr std::array<const char*, kNumKinematicChannels> kKinematicColumnNames = {
    "ax", "ay", "az", "gx", "gy", "gz"};

/// Six synchronized channels: acceleration (m/s^2) then angular velocity (rad/s).
struct KinematicStream {
    std::array<std::vector<double>, kNumKinematicChannels> channels;
    int sample_rate_hz = kDefaultKinematicRateHz;

    std::size_t size() const noexcept { return channels[0].size(); }

    double duration_s() const noexcept {
        return sample_rate_hz > 0 ? static_cast<double>(size()) / sample_rate_hz : 0.0;
    }

    void validate() const {
        if (sample_rate_hz <= 0) throw InvalidArgument("kinematic sample rate must be positive");
        for (const auto& ch : channels) {
            if (ch.size() != channels[0].size())
                throw InvalidArgument("kinematic channels differ in length");
            if (!all_finite(ch.data(), ch.size()))
                throw InvalidArgument("kinematic stream contains non-finite values");
        }
    }
};

struct AnnotatedInterval {
    double start_s = 0.0;
    double end_s = 0.0;
    Activity label = Activity::Major;

    double duration_s() const noexcept { return end_s - start_s; }
};

/// Sorted, non-overlapping ground-truth intervals.
struct AnnotationTrack {
    std::vector<AnnotatedInterval> intervals;

    void validate() const {
        for (std::size_t i = 0; i < intervals.size(); ++i) {
            const auto& iv = intervals[i];
            if (!(iv.start_s >= 0.0 && iv.start_s < iv.end_s) || !std::isfinite(iv.end_s))
                throw InvalidArgument("annotation interval " + std::to_string(i) +
                                      " must satisfy 0 <= start < end");
            if (i > 0 && intervals[i - 1].end_s > iv.start_s)
                throw InvalidArgument("annotation intervals must be sorted and non-overlapping (interval " +
                                      std::to_string(i) + ")");
        }
    }
};

/// Seconds added to kinematic timestamps to align them with audio time zero.
struct SyncConfig {
    double kinematic_offset_s = 0.0;
};

// ---------------------------------------------------------------------------
// WAV

enum class WavEncoding { Pcm16, Pcm24, Float32 };

namespace detail {

inline std::uint16_t read_u16(std::span<const std::uint8_t> b, std::size_t at) noexcept {
    return static_cast<std::uint16_t>(b[at] | (b[at + 1] << 8));
}

inline std::uint32_t read_u32(std::span<const std::uint8_t> b, std::size_t at) noexcept {
    return static_cast<std::uint32_t>(b[at]) | (static_cast<std::uint32_t>(b[at + 1]) << 8) |
           (static_cast<std::uint32_t>(b[at + 2]) << 16) | (static_cast<std::uint32_t>(b[at + 3]) << 24);
}

inline bool fourcc_is(std::span<const std::uint8_t> b, std::size_t at, const char* id) noexcept {
    return std::memcmp(b.data() + at, id, 4) == 0;
}

inline void put_u16(std::string& out, std::uint16_t v) {
    out.push_back(static_cast<char>(v & 0xff));
    out.push_back(static_cast<char>(v >> 8));
}

inline void put_u32(std::string& out, std::uint32_t v) {
    for (int i = 0; i < 4; ++i) out.push_back(static_cast<char>((v >> (8 * i)) & 0xff));
}

}  // namespace detail

/// Decodes a RIFF/WAVE buffer: PCM 16/24-bit integer or 32-bit IEEE float,
/// any channel count. Channels are averaged to mono and integers are scaled
/// by 1/2^(bits-1).
inline AudioStream decode_audio(std::span<const std::uint8_t> bytes) {
    using detail::fourcc_is;
    using detail::read_u16;
    using detail::read_u32;

    if (bytes.size() < 12) throw DecodeError("file too short for a RIFF header", bytes.size());
    if (!fourcc_is(bytes, 0, "RIFF")) throw DecodeError("missing RIFF tag", 0);
    if (!fourcc_is(bytes, 8, "WAVE")) throw DecodeError("missing WAVE tag", 8);

    bool have_fmt = false;
    std::uint16_t format = 0, channels = 0, bits = 0, block_align = 0;
    std::uint32_t rate = 0;

    std::size_t pos = 12;
    while (pos + 8 <= bytes.size()) {
        const std::size_t chunk_at = pos;
        const std::uint64_t size = read_u32(bytes, pos + 4);
        const std::size_t body = pos + 8;

        if (fourcc_is(bytes, chunk_at, "fmt ")) {
            if (size < 16) throw DecodeError("fmt chunk shorter than 16 bytes", chunk_at + 4);
            if (body + size > bytes.size()) throw DecodeError("fmt chunk runs past end of file", bytes.size());
            format = read_u16(bytes, body);
            channels = read_u16(bytes, body + 2);
            rate = read_u32(bytes, body + 4);
            block_align = read_u16(bytes, body + 12);
            bits = read_u16(bytes, body + 14);
            if (format == 0xFFFE) {
                if (size < 40) throw DecodeError("extensible fmt chunk shorter than 40 bytes", chunk_at + 4);
                format = read_u16(bytes, body + 24);  // first two bytes of the subformat GUID
            }
            if (channels == 0) throw DecodeError("fmt chunk declares zero channels", body + 2);
            if (rate == 0) throw DecodeError("fmt chunk declares zero sample rate", body + 4);
            const bool pcm_ok = format == 1 && (bits == 16 || bits == 24);
            const bool float_ok = format == 3 && bits == 32;
            if (!pcm_ok && !float_ok)
                throw UnsupportedFormat("unsupported WAV encoding: format tag " + std::to_string(format) + ", " +
                                        std::to_string(bits) + " bits");
            if (block_align != channels * (bits / 8))
                throw DecodeError("fmt block align inconsistent with channels and bit depth", body + 12);
            have_fmt = true;
        } else if (fourcc_is(bytes, chunk_at, "data")) {
            if (!have_fmt) throw DecodeError("data chunk before fmt chunk", chunk_at);
            if (body + size > bytes.size())
                throw DecodeError("data chunk truncated: declares " + std::to_string(size) + " bytes", bytes.size());
            if (size % block_align != 0)
                throw DecodeError("data chunk size is not a multiple of the block size",
                                  body + size - size % block_align);

            const std::size_t frames = size / block_align;
            const std::size_t width = bits / 8;
            AudioStream out;
            out.sample_rate_hz = static_cast<int>(rate);
            out.samples.resize(frames);
            const double scale = format == 3 ? 1.0 : 1.0 / static_cast<double>(1u << (bits - 1));
            for (std::size_t f = 0; f < frames; ++f) {
                double acc = 0.0;
                for (std::size_t c = 0; c < channels; ++c) {
                    const std::size_t at = body + f * block_align + c * width;
                    double v = 0.0;
                    if (format == 3) {
                        const std::uint32_t raw = read_u32(bytes, at);
                        float fv;
                        std::memcpy(&fv, &raw, sizeof fv);
                        v = fv;
                    } else if (bits == 16) {
                        v = static_cast<std::int16_t>(read_u16(bytes, at));
                    } else {
                        std::int32_t raw = bytes[at] | (bytes[at + 1] << 8) | (bytes[at + 2] << 16);
                        if (raw & 0x800000) raw -= 0x1000000;
                        v = raw;
                    }
                    acc += v;
                }
                const double mono = acc * scale / channels;
                if (!std::isfinite(mono))
                    throw DecodeError("non-finite float sample", body + f * block_align);
                out.samples[f] = static_cast<float>(mono);
            }
            return out;
        }
        pos = body + size + (size & 1);
    }
    if (!have_fmt) throw DecodeError("no fmt chunk found", bytes.size());
    throw DecodeError("no data chunk found", bytes.size());
}

inline AudioStream decode_audio(const std::filesystem::path& path) {
    const std::string raw = io::read_file(path);
    return decode_audio(std::span(reinterpret_cast<const std::uint8_t*>(raw.data()), raw.size()));
}

/// Serializes mono audio as a canonical 44-byte-header WAV. Integer encodings
/// round to nearest and saturate.
inline std::string encode_wav(const AudioStream& audio, WavEncoding enc = WavEncoding::Pcm16) {
    const std::uint16_t bits = enc == WavEncoding::Pcm16 ? 16 : enc == WavEncoding::Pcm24 ? 24 : 32;
    const std::uint16_t width = bits / 8;
    const std::uint64_t data_size = audio.samples.size() * width;
    if (data_size > std::numeric_limits<std::uint32_t>::max() - 36)
        throw InvalidArgument("audio too long for a RIFF file");

    std::string out;
    out.reserve(44 + data_size);
    out += "RIFF";
    detail::put_u32(out, static_cast<std::uint32_t>(36 + data_size));
    out += "WAVEfmt ";
    detail::put_u32(out, 16);
    detail::put_u16(out, enc == WavEncoding::Float32 ? 3 : 1);
    detail::put_u16(out, 1);
    detail::put_u32(out, static_cast<std::uint32_t>(audio.sample_rate_hz));
    detail::put_u32(out, static_cast<std::uint32_t>(audio.sample_rate_hz) * width);
    detail::put_u16(out, width);
    detail::put_u16(out, bits);
    out += "data";
    detail::put_u32(out, static_cast<std::uint32_t>(data_size));

    const double full = enc == WavEncoding::Pcm16 ? 32768.0 : 8388608.0;
    for (const float s : audio.samples) {
        if (enc == WavEncoding::Float32) {
            std::uint32_t raw;
            std::memcpy(&raw, &s, sizeof raw);
            detail::put_u32(out, raw);
            continue;
        }
        const double q = std::clamp(std::nearbyint(static_cast<double>(s) * full), -full, full - 1.0);
        const auto v = static_cast<std::int32_t>(q);
        for (int i = 0; i < width; ++i) out.push_back(static_cast<char>((v >> (8 * i)) & 0xff));
    }
    return out;
}

inline void write_wav(const std::filesystem::path& path, const AudioStream& audio,
                      WavEncoding enc = WavEncoding::Pcm16) {
    io::write_file_atomic(path, encode_wav(audio, enc));
}

// ---------------------------------------------------------------------------
// Kinematic CSV

/// Parses `t,ax,ay,az,gx,gy,gz` rows (any column order) and resamples them
/// linearly onto a uniform grid starting at the first timestamp.
inline KinematicStream decode_kinematic_csv(std::string_view text, int rate_hz = kDefaultKinematicRateHz) {
    if (rate_hz <= 0) throw InvalidArgument("kinematic resample rate must be positive");
    const auto rows = io::lines(text);
    if (rows.empty()) throw FormatError("empty kinematic file", 0);

    const auto header = io::split(rows[0]);
    std::array<std::size_t, kNumKinematicChannels + 1> col{};
    const std::array<std::string_view, kNumKinematicChannels + 1> wanted = {"t", "ax", "ay", "az", "gx", "gy", "gz"};
    for (std::size_t w = 0; w < wanted.size(); ++w) {
        std::size_t found = header.size();
        for (std::size_t h = 0; h < header.size(); ++h)
            if (io::to_lower(header[h]) == wanted[w]) found = h;
        if (found == header.size())
            throw FormatError("missing column '" + std::string(wanted[w]) + "' in kinematic header", 0);
        col[w] = found;
    }

    std::vector<double> t;
    std::array<std::vector<double>, kNumKinematicChannels> raw;
    std::size_t row_no = 0;
    for (std::size_t r = 1; r < rows.size(); ++r) {
        if (io::trim(rows[r]).empty()) continue;
        ++row_no;
        const auto fields = io::split(rows[r]);
        if (fields.size() != header.size())
            throw FormatError("expected " + std::to_string(header.size()) + " fields, got " +
                                  std::to_string(fields.size()),
                              row_no);
        std::array<double, kNumKinematicChannels + 1> vals{};
        for (std::size_t w = 0; w < wanted.size(); ++w) {
            const auto v = io::parse_double(fields[col[w]]);
            if (!v || !std::isfinite(*v))
                throw FormatError("bad number in column '" + std::string(wanted[w]) + "'", row_no);
            vals[w] = *v;
        }
        if (!t.empty() && !(vals[0] > t.back()))
            throw FormatError("timestamps must be strictly increasing", row_no);
        t.push_back(vals[0]);
        for (std::size_t c = 0; c < kNumKinematicChannels; ++c) raw[c].push_back(vals[c + 1]);
    }
    if (t.empty()) throw FormatError("kinematic file has no data rows", 1);

    KinematicStream out;
    out.sample_rate_hz = rate_hz;
    const auto n = static_cast<std::size_t>(std::llround((t.back() - t.front()) * rate_hz)) + 1;
    for (auto& ch : out.channels) ch.resize(n);
    std::size_t seg = 0;
    for (std::size_t j = 0; j < n; ++j) {
        const double tau = t.front() + static_cast<double>(j) / rate_hz;
        while (seg + 1 < t.size() && t[seg + 1] <= tau) ++seg;
        if (seg + 1 >= t.size()) {
            for (std::size_t c = 0; c < kNumKinematicChannels; ++c) out.channels[c][j] = raw[c].back();
            continue;
        }
        const double frac = (tau - t[seg]) / (t[seg + 1] - t[seg]);
        for (std::size_t c = 0; c < kNumKinematicChannels; ++c)
            out.channels[c][j] = raw[c][seg] + frac * (raw[c][seg + 1] - raw[c][seg]);
    }
    return out;
}

inline KinematicStream decode_kinematic(const std::filesystem::path& path, int rate_hz = kDefaultKinematicRateHz) {
    return decode_kinematic_csv(io::read_file(path), rate_hz);
}

inline std::string encode_kinematic_csv(const KinematicStream& kin) {
    std::string out = "t,ax,ay,az,gx,gy,gz\n";
    for (std::size_t i = 0; i < kin.size(); ++i) {
        out += io::format_double(static_cast<double>(i) / kin.sample_rate_hz);
        for (const auto& ch : kin.channels) {
            out += ',';
            out += io::format_double(ch[i]);
        }
        out += '\n';
    }
    return out;
}

// ---------------------------------------------------------------------------
// Annotations

inline AnnotationTrack decode_annotations_csv(std::string_view text) {
    const auto rows = io::lines(text);
    if (rows.empty()) throw FormatError("empty annotation file", 0);
    const auto header = io::split(rows[0]);
    if (header.size() != 3 || io::to_lower(header[0]) != "start_s" || io::to_lower(header[1]) != "end_s" ||
        io::to_lower(header[2]) != "label")
        throw FormatError("annotation header must be 'start_s,end_s,label'", 0);

    AnnotationTrack track;
    std::size_t row_no = 0;
    for (std::size_t r = 1; r < rows.size(); ++r) {
        if (io::trim(rows[r]).empty()) continue;
        ++row_no;
        const auto f = io::split(rows[r]);
        if (f.size() != 3) throw FormatError("expected 3 fields", row_no);
        const auto start = io::parse_double(f[0]);
        const auto end = io::parse_double(f[1]);
        if (!start || !end) throw FormatError("bad interval bounds", row_no);
        const auto label = io::to_lower(f[2]);
        if (label != "major" && label != "minor") throw FormatError("label must be major or minor", row_no);
        if (!(*start >= 0.0 && *start < *end) || !std::isfinite(*end))
            throw FormatError("interval must satisfy 0 <= start_s < end_s", row_no);
        if (!track.intervals.empty() && track.intervals.back().end_s > *start)
            throw FormatError("interval overlaps or precedes the previous one", row_no);
        track.intervals.push_back({*start, *end, label == "major" ? Activity::Major : Activity::Minor});
    }
    return track;
}

inline AnnotationTrack decode_annotations(const std::filesystem::path& path) {
    return decode_annotations_csv(io::read_file(path));
}

inline std::string encode_annotations_csv(const AnnotationTrack& track) {
    std::string out = "start_s,end_s,label\n";
    for (const auto& iv : track.intervals) {
        out += io::format_double(iv.start_s) + ',' + io::format_double(iv.end_s) + ',';
        out += to_string(iv.label);
        out += '\n';
    }
    return out;
}

// ---------------------------------------------------------------------------
// Synchronization

/// Shifts the stream by round(offset * rate) samples. Length is preserved:
/// a leading gap repeats the first sample, a trailing gap repeats the last.
inline KinematicStream apply_sync(const KinematicStream& kin, const SyncConfig& cfg) {
    if (!std::isfinite(cfg.kinematic_offset_s)) throw InvalidArgument("sync offset must be finite");
    const auto shift = std::llround(cfg.kinematic_offset_s * kin.sample_rate_hz);
    KinematicStream out;
    out.sample_rate_hz = kin.sample_rate_hz;
    const auto n = static_cast<long long>(kin.size());
    for (std::size_t c = 0; c < kNumKinematicChannels; ++c) {
        const auto& src = kin.channels[c];
        auto& dst = out.channels[c];
        dst.resize(src.size());
        for (long long j = 0; j < n; ++j) {
            const long long from = std::clamp(j - shift, 0LL, n - 1);
            dst[static_cast<std::size_t>(j)] = src[static_cast<std::size_t>(from)];
        }
    }
    return out;
}

}  // namespace equipact
