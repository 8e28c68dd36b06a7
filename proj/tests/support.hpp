#pragma once

// Hand-rolled generators and small fixtures shared by the test binaries.

#include <cmath>
#include <cstdint>
#include <filesystem>
#include <numbers>
#include <random>
#include <string>
#include <vector>

#include "equipact/core.hpp"

namespace testing {

class Gen {
public:
    explicit Gen(std::uint64_t seed) : rng_(seed) {}

    double uniform(double lo = 0.0, double hi = 1.0) { return std::uniform_real_distribution<double>(lo, hi)(rng_); }
    double normal(double mean = 0.0, double sd = 1.0) { return std::normal_distribution<double>(mean, sd)(rng_); }
    std::size_t index(std::size_t lo, std::size_t hi) {  // inclusive
        return std::uniform_int_distribution<std::size_t>(lo, hi)(rng_);
    }
    bool coin(double p = 0.5) { return uniform() < p; }

    equipact::Activity activity(double p_major = 0.5) {
        return coin(p_major) ? equipact::Activity::Major : equipact::Activity::Minor;
    }

    std::vector<equipact::Activity> labels(std::size_t n, double p_major = 0.5) {
        std::vector<equipact::Activity> out(n);
        for (auto& a : out) a = activity(p_major);
        return out;
    }

    /// Labels made of runs, each at least `min_run` long.
    std::vector<equipact::Activity> runs(std::size_t n, std::size_t min_run, std::size_t max_run) {
        std::vector<equipact::Activity> out;
        auto state = activity();
        while (out.size() < n) {
            const auto len = index(min_run, max_run);
            for (std::size_t i = 0; i < len && out.size() < n; ++i) out.push_back(state);
            state = state == equipact::Activity::Major ? equipact::Activity::Minor : equipact::Activity::Major;
        }
        return out;
    }

    /// Sum of a few random sinusoids, white noise and an offset: the "mixed" test signal.
    std::vector<double> mixed_signal(std::size_t n, double rate_hz) {
        std::vector<double> x(n, 0.0);
        const std::size_t tones = index(1, 4);
        const double offset = uniform(-0.2, 0.2);
        const double noise = uniform(0.01, 0.5);
        std::vector<double> f(tones), a(tones), p(tones);
        for (std::size_t t = 0; t < tones; ++t) {
            f[t] = uniform(0.5, 0.45 * rate_hz);
            a[t] = uniform(0.05, 1.0);
            p[t] = uniform(0.0, 2.0 * std::numbers::pi);
        }
        for (std::size_t i = 0; i < n; ++i) {
            double v = offset + noise * normal();
            for (std::size_t t = 0; t < tones; ++t)
                v += a[t] * std::sin(2.0 * std::numbers::pi * f[t] * static_cast<double>(i) / rate_hz + p[t]);
            x[i] = v;
        }
        return x;
    }

    std::mt19937_64& engine() { return rng_; }

private:
    std::mt19937_64 rng_;
};

/// Fresh directory under the system temp dir, removed on destruction.
class TempDir {
public:
    explicit TempDir(const std::string& tag) {
        std::random_device rd;
        path_ = std::filesystem::temp_directory_path() / ("equipact_" + tag + "_" + std::to_string(rd()));
        std::filesystem::create_directories(path_);
    }
    ~TempDir() {
        std::error_code ec;
        std::filesystem::remove_all(path_, ec);
    }
    TempDir(const TempDir&) = delete;
    TempDir& operator=(const TempDir&) = delete;

    const std::filesystem::path& path() const noexcept { return path_; }
    std::filesystem::path operator/(const std::string& name) const { return path_ / name; }

private:
    std::filesystem::path path_;
};

inline bool close_rel(double a, double b, double rel, double abs_floor = 0.0) {
    return std::abs(a - b) <= rel * std::max(std::abs(a), std::abs(b)) + abs_floor;
}

}  // namespace testing

#ifdef CATCH_VERSION_MAJOR
template <>
struct Catch::StringMaker<equipact::Activity> {
    static std::string convert(equipact::Activity a) { return std::string(equipact::to_string(a)); }
};
#endif
