#pragma once

// Early fusion: column concatenation of modality matrices on the shared grid,
// then z-scoring with statistics taken from training rows only.

#include <cmath>
#include <span>
#include <string>
#include <vector>

#include "core.hpp"
#include "feature_matrix.hpp"

namespace equipact {

/// Audio columns first, then kinematic.
inline FeatureMatrix fuse(const FeatureMatrix& audio_fm, const FeatureMatrix& kin_fm) {
    if (audio_fm.cols() == 0) return kin_fm;
    if (kin_fm.cols() == 0) return audio_fm;
    if (audio_fm.rows() != kin_fm.rows())
        throw AlignmentError("cannot fuse matrices with " + std::to_string(audio_fm.rows()) + " and " +
                             std::to_string(kin_fm.rows()) + " rows");
    auto names = audio_fm.names();
    names.insert(names.end(), kin_fm.names().begin(), kin_fm.names().end());
    FeatureMatrix out(std::move(names), audio_fm.rows());
    for (std::size_t r = 0; r < out.rows(); ++r) {
        auto dst = out.row(r);
        const auto a = audio_fm.row(r);
        const auto k = kin_fm.row(r);
        std::copy(a.begin(), a.end(), dst.begin());
        std::copy(k.begin(), k.end(), dst.begin() + static_cast<std::ptrdiff_t>(a.size()));
    }
    return out;
}

struct Standardizer {
    std::vector<std::string> names;
    std::vector<double> means;
    std::vector<double> stds;
    std::size_t fitted_on = 0;

    static constexpr double kMinStd = 1e-12;
};

/// Per-column mean and population standard deviation over `train_rows` only.
inline Standardizer fit_standardizer(const FeatureMatrix& fm, std::span<const std::size_t> train_rows) {
    if (train_rows.empty()) throw InvalidArgument("cannot fit a standardizer on zero training rows");
    Standardizer s;
    s.names = fm.names();
    s.means.assign(fm.cols(), 0.0);
    s.stds.assign(fm.cols(), 0.0);
    s.fitted_on = train_rows.size();
    const double n = static_cast<double>(train_rows.size());
    for (const auto r : train_rows) {
        if (r >= fm.rows()) throw InvalidArgument("training row index out of range");
        const auto row = fm.row(r);
        for (std::size_t c = 0; c < fm.cols(); ++c) s.means[c] += row[c];
    }
    for (auto& m : s.means) m /= n;
    for (const auto r : train_rows) {
        const auto row = fm.row(r);
        for (std::size_t c = 0; c < fm.cols(); ++c) {
            const double d = row[c] - s.means[c];
            s.stds[c] += d * d;
        }
    }
    for (auto& v : s.stds) v = std::sqrt(v / n);
    return s;
}

/// z = (x - mean) / std; columns with std <= 1e-12 map to 0.
inline FeatureMatrix standardize(const FeatureMatrix& fm, const Standardizer& s) {
    if (fm.cols() != s.means.size() || fm.cols() != s.stds.size())
        throw InvalidArgument("standardizer has " + std::to_string(s.means.size()) + " columns, matrix has " +
                              std::to_string(fm.cols()));
    FeatureMatrix out(fm.names(), fm.rows());
    for (std::size_t r = 0; r < fm.rows(); ++r) {
        const auto src = fm.row(r);
        auto dst = out.row(r);
        for (std::size_t c = 0; c < fm.cols(); ++c)
            dst[c] = s.stds[c] > Standardizer::kMinStd ? (src[c] - s.means[c]) / s.stds[c] : 0.0;
    }
    return out;
}

}  // namespace equipact
