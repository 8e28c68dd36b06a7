#pragma once

#include <span>
#include <string>
#include <unordered_set>
#include <vector>

#include "core.hpp"
#include "io.hpp"

namespace equipact {

/// Row-major matrix of per-segment feature vectors with named columns.
/// A matrix may have rows but zero columns (an empty modality).
class FeatureMatrix {
public:
    FeatureMatrix() = default;

    FeatureMatrix(std::vector<std::string> names, std::size_t rows)
        : names_(std::move(names)), rows_(rows), data_(rows * names_.size(), 0.0) {}

    std::size_t rows() const noexcept { return rows_; }
    std::size_t cols() const noexcept { return names_.size(); }
    const std::vector<std::string>& names() const noexcept { return names_; }

    std::span<double> row(std::size_t i) noexcept { return {data_.data() + i * cols(), cols()}; }
    std::span<const double> row(std::size_t i) const noexcept { return {data_.data() + i * cols(), cols()}; }

    double& at(std::size_t r, std::size_t c) noexcept { return data_[r * cols() + c]; }
    double at(std::size_t r, std::size_t c) const noexcept { return data_[r * cols() + c]; }

    std::span<const double> data() const noexcept { return data_; }

    void append_row(std::span<const double> values) {
        if (values.size() != cols()) throw InvalidArgument("row width does not match column count");
        data_.insert(data_.end(), values.begin(), values.end());
        ++rows_;
    }

    FeatureMatrix select_rows(std::span<const std::size_t> indices) const {
        FeatureMatrix out(names_, 0);
        out.data_.reserve(indices.size() * cols());
        for (const auto i : indices) {
            if (i >= rows_) throw InvalidArgument("row index out of range");
            out.append_row(row(i));
        }
        return out;
    }

    bool all_finite() const noexcept { return equipact::all_finite(data_.data(), data_.size()); }

    bool names_unique() const {
        std::unordered_set<std::string> seen(names_.begin(), names_.end());
        return seen.size() == names_.size();
    }

    friend bool operator==(const FeatureMatrix&, const FeatureMatrix&) = default;

private:
    std::vector<std::string> names_;
    std::size_t rows_ = 0;
    std::vector<double> data_;
};

/// CSV with `segment_index,t_center_s` followed by one column per feature.
inline std::string encode_feature_csv(const FeatureMatrix& fm, double segment_s = kSegmentSeconds) {
    std::string out = "segment_index,t_center_s";
    for (const auto& n : fm.names()) out += ',' + n;
    out += '\n';
    for (std::size_t r = 0; r < fm.rows(); ++r) {
        out += std::to_string(r) + ',' + io::format_double((static_cast<double>(r) + 0.5) * segment_s);
        for (const double v : fm.row(r)) out += ',' + io::format_double(v);
        out += '\n';
    }
    return out;
}

inline FeatureMatrix decode_feature_csv(std::string_view text) {
    const auto rows = io::lines(text);
    if (rows.empty()) throw FormatError("empty feature file", 0);
    const auto header = io::split(rows[0]);
    if (header.size() < 2 || header[0] != "segment_index" || header[1] != "t_center_s")
        throw FormatError("feature header must start with 'segment_index,t_center_s'", 0);
    std::vector<std::string> names(header.begin() + 2, header.end());
    FeatureMatrix fm(std::move(names), 0);
    std::vector<double> buf(fm.cols());
    for (std::size_t r = 1; r < rows.size(); ++r) {
        if (io::trim(rows[r]).empty()) continue;
        const auto f = io::split(rows[r]);
        if (f.size() != header.size()) throw FormatError("wrong field count", r);
        for (std::size_t c = 0; c < buf.size(); ++c) {
            const auto v = io::parse_double(f[c + 2]);
            if (!v) throw FormatError("bad number", r);
            buf[c] = *v;
        }
        fm.append_row(buf);
    }
    return fm;
}

}  // namespace equipact
