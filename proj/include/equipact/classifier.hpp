#pragma once

// Binary soft-margin SVM trained by sequential minimal optimization, plus the
// training-period selection protocol and logistic (Platt) calibration of the
// decision values.

#include <algorithm>
#include <cmath>
#include <limits>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "core.hpp"
#include "feature_matrix.hpp"
#include "features.hpp"
#include "ingest.hpp"

namespace equipact {

// ---------------------------------------------------------------------------
// Training selection

struct TimeInterval {
    double start_s = 0.0;
    double end_s = 0.0;

    double duration_s() const noexcept { return end_s - start_s; }
};

/// Labeled periods used for training; by default four per class, 5 to 10 s each.
struct TrainingSelection {
    std::vector<TimeInterval> major_periods;
    std::vector<TimeInterval> minor_periods;
    double min_period_s = 5.0;
    double max_period_s = 10.0;

    void validate(std::optional<double> recording_s = std::nullopt) const {
        std::vector<TimeInterval> all;
        for (const auto* group : {&major_periods, &minor_periods}) {
            for (const auto& iv : *group) {
                if (!(iv.start_s >= 0.0 && iv.end_s > iv.start_s))
                    throw InvalidArgument("training period must satisfy 0 <= start < end");
                if (iv.duration_s() < min_period_s - kGridEpsilon || iv.duration_s() > max_period_s + kGridEpsilon)
                    throw InvalidArgument("training period of " + std::to_string(iv.duration_s()) +
                                          " s is outside the allowed duration range");
                if (recording_s && iv.end_s > *recording_s + kGridEpsilon)
                    throw InvalidArgument("training period extends past the end of the recording");
                all.push_back(iv);
            }
        }
        std::sort(all.begin(), all.end(), [](const auto& a, const auto& b) { return a.start_s < b.start_s; });
        for (std::size_t i = 1; i < all.size(); ++i)
            if (all[i - 1].end_s > all[i].start_s + kGridEpsilon)
                throw InvalidArgument("training periods overlap");
    }
};

/// First `per_class` annotated intervals of each class, each cut to at most `period_s`.
inline TrainingSelection default_training_selection(const AnnotationTrack& truth, std::size_t per_class = 4,
                                                    double period_s = 6.0) {
    TrainingSelection sel;
    for (const auto& iv : truth.intervals) {
        auto& dst = iv.label == Activity::Major ? sel.major_periods : sel.minor_periods;
        if (dst.size() < per_class) dst.push_back({iv.start_s, std::min(iv.end_s, iv.start_s + period_s)});
    }
    return sel;
}

struct TrainingRows {
    std::vector<std::size_t> indices;
    std::vector<Activity> labels;
};

/// A segment is a training row iff its whole [start, end) span lies inside a period.
inline TrainingRows select_training_rows(const SegmentGrid& grid, const TrainingSelection& sel) {
    TrainingRows out;
    for (std::size_t k = 0; k < grid.n_segments; ++k) {
        const double s = grid.start_s(k), e = grid.end_s(k);
        auto inside = [&](const std::vector<TimeInterval>& group) {
            return std::any_of(group.begin(), group.end(), [&](const TimeInterval& iv) {
                return s >= iv.start_s - kGridEpsilon && e <= iv.end_s + kGridEpsilon;
            });
        };
        if (inside(sel.major_periods)) {
            out.indices.push_back(k);
            out.labels.push_back(Activity::Major);
        } else if (inside(sel.minor_periods)) {
            out.indices.push_back(k);
            out.labels.push_back(Activity::Minor);
        }
    }
    if (out.indices.empty())
        throw InvalidArgument("no segment lies fully inside a training period; use longer periods");
    return out;
}

// ---------------------------------------------------------------------------
// SVM

enum class KernelType { Linear, Rbf };

struct SvmParams {
    double C = 1.0;
    KernelType kernel = KernelType::Linear;
    double gamma = 0.0;  // RBF width; 0 selects 1 / n_features
    double tol = 1e-3;
    std::size_t max_passes = 200;
};

struct PlattParams {
    double a = 1.0;
    double b = 0.0;
};

inline double logistic(double z) noexcept {
    return z >= 0.0 ? 1.0 / (1.0 + std::exp(-z)) : std::exp(z) / (1.0 + std::exp(z));
}

struct SvmModel {
    KernelType kernel = KernelType::Linear;
    double gamma = 0.0;
    double C = 1.0;
    double bias = 0.0;
    PlattParams platt;
    std::size_t dim = 0;
    std::vector<std::vector<double>> support_vectors;
    std::vector<double> dual_coefs;  // alpha_i * y_i
    std::vector<std::string> feature_names;

    double kernel_value(std::span<const double> a, std::span<const double> b) const noexcept {
        double acc = 0.0;
        if (kernel == KernelType::Linear) {
            for (std::size_t i = 0; i < a.size(); ++i) acc += a[i] * b[i];
            return acc;
        }
        for (std::size_t i = 0; i < a.size(); ++i) acc += (a[i] - b[i]) * (a[i] - b[i]);
        return std::exp(-gamma * acc);
    }

    double decision_value(std::span<const double> x) const {
        if (x.size() != dim)
            throw InvalidArgument("model expects " + std::to_string(dim) + " features, got " + std::to_string(x.size()));
        double f = bias;
        for (std::size_t i = 0; i < support_vectors.size(); ++i) f += dual_coefs[i] * kernel_value(support_vectors[i], x);
        return f;
    }

    /// w = sum_i dual_coef_i * sv_i. Linear kernel only.
    std::vector<double> linear_weights() const {
        if (kernel != KernelType::Linear) throw InvalidArgument("primal weights exist only for the linear kernel");
        std::vector<double> w(dim, 0.0);
        for (std::size_t i = 0; i < support_vectors.size(); ++i)
            for (std::size_t d = 0; d < dim; ++d) w[d] += dual_coefs[i] * support_vectors[i][d];
        return w;
    }

    double probability(double decision) const noexcept { return logistic(platt.a * decision + platt.b); }
};

struct TrainResult {
    SvmModel model;
    bool converged = false;
    std::size_t iterations = 0;
    std::vector<double> alphas;            // one per training row
    std::vector<double> objective_trace;   // dual objective after every sweep of n updates
};

namespace detail {

/// Q_ij = y_i y_j K(x_i, x_j), fully cached for small problems, computed per
/// row otherwise.
class KernelRows {
public:
    KernelRows(const FeatureMatrix& x, std::span<const double> y, const SvmModel& proto)
        : x_(x), y_(y), proto_(proto), n_(x.rows()), diag_(n_) {
        if (n_ <= kFullCacheRows) {
            full_.resize(n_ * n_);
            for (std::size_t i = 0; i < n_; ++i)
                for (std::size_t j = i; j < n_; ++j) full_[i * n_ + j] = full_[j * n_ + i] = compute(i, j);
        }
        for (std::size_t i = 0; i < n_; ++i) diag_[i] = compute(i, i);
        scratch_[0].resize(n_);
        scratch_[1].resize(n_);
    }

    std::span<const double> row(std::size_t i, int slot) {
        if (!full_.empty()) return {full_.data() + i * n_, n_};
        auto& buf = scratch_[slot];
        for (std::size_t j = 0; j < n_; ++j) buf[j] = compute(i, j);
        return buf;
    }

    double diag(std::size_t i) const noexcept { return diag_[i]; }

private:
    static constexpr std::size_t kFullCacheRows = 4096;

    double compute(std::size_t i, std::size_t j) const noexcept {
        return y_[i] * y_[j] * proto_.kernel_value(x_.row(i), x_.row(j));
    }

    const FeatureMatrix& x_;
    std::span<const double> y_;
    const SvmModel& proto_;
    std::size_t n_;
    std::vector<double> full_;
    std::vector<double> diag_;
    std::vector<double> scratch_[2];
};

}  // namespace detail

/// Soft-margin dual solved by SMO with maximal-violating-pair selection
/// (lowest index wins ties). Stops when the KKT gap m(a) - M(a) <= tol or
/// after max_passes * n pair updates; the latter returns converged = false.
inline TrainResult train_svm(const FeatureMatrix& x, std::span<const Activity> labels, const SvmParams& params = {}) {
    const std::size_t n = x.rows();
    if (labels.size() != n) throw InvalidArgument("label count does not match row count");
    if (!(params.C > 0.0)) throw InvalidArgument("C must be positive");
    if (!(params.tol > 0.0)) throw InvalidArgument("tolerance must be positive");
    if (!x.all_finite()) throw InvalidArgument("training features must be finite");
    const auto n_major = static_cast<std::size_t>(std::count(labels.begin(), labels.end(), Activity::Major));
    if (n_major == 0 || n_major == n) throw InvalidArgument("training data must contain both classes");

    TrainResult result;
    SvmModel& m = result.model;
    m.kernel = params.kernel;
    m.C = params.C;
    m.dim = x.cols();
    m.feature_names = x.names();
    m.gamma = params.kernel == KernelType::Rbf
                  ? (params.gamma > 0.0 ? params.gamma : 1.0 / static_cast<double>(std::max<std::size_t>(x.cols(), 1)))
                  : 0.0;

    std::vector<double> y(n);
    for (std::size_t i = 0; i < n; ++i) y[i] = to_sign(labels[i]);

    detail::KernelRows q(x, y, m);
    const double c = params.C;
    std::vector<double> alpha(n, 0.0);
    std::vector<double> grad(n, -1.0);

    auto is_upper = [&](std::size_t t) { return alpha[t] >= c; };
    auto is_lower = [&](std::size_t t) { return alpha[t] <= 0.0; };
    auto in_up = [&](std::size_t t) { return y[t] > 0 ? !is_upper(t) : !is_lower(t); };
    auto in_low = [&](std::size_t t) { return y[t] > 0 ? !is_lower(t) : !is_upper(t); };
    auto objective = [&] {
        double f = 0.0;
        for (std::size_t t = 0; t < n; ++t) f += alpha[t] * (grad[t] - 1.0);
        return -0.5 * f;
    };

    const std::size_t max_iter = params.max_passes * std::max<std::size_t>(n, 1);
    std::size_t iter = 0;
    while (true) {
        std::size_t i = n, j = n;
        double gmax = -std::numeric_limits<double>::infinity();
        double gmin = std::numeric_limits<double>::infinity();
        for (std::size_t t = 0; t < n; ++t) {
            const double v = -y[t] * grad[t];
            if (in_up(t) && v > gmax) gmax = v, i = t;
            if (in_low(t) && v < gmin) gmin = v, j = t;
        }
        if (i == n || j == n || gmax - gmin <= params.tol) {
            result.converged = true;
            break;
        }
        if (iter >= max_iter) break;
        ++iter;

        const auto qi = q.row(i, 0);
        const auto qj = q.row(j, 1);
        const double old_ai = alpha[i], old_aj = alpha[j];
        constexpr double kTau = 1e-12;
        if (y[i] != y[j]) {
            double quad = q.diag(i) + q.diag(j) + 2.0 * qi[j];
            if (quad <= 0.0) quad = kTau;
            const double delta = (-grad[i] - grad[j]) / quad;
            const double diff = alpha[i] - alpha[j];
            alpha[i] += delta;
            alpha[j] += delta;
            if (diff > 0.0) {
                if (alpha[j] < 0.0) alpha[j] = 0.0, alpha[i] = diff;
            } else {
                if (alpha[i] < 0.0) alpha[i] = 0.0, alpha[j] = -diff;
            }
            if (diff > 0.0) {
                if (alpha[i] > c) alpha[i] = c, alpha[j] = c - diff;
            } else {
                if (alpha[j] > c) alpha[j] = c, alpha[i] = c + diff;
            }
        } else {
            double quad = q.diag(i) + q.diag(j) - 2.0 * qi[j];
            if (quad <= 0.0) quad = kTau;
            const double delta = (grad[i] - grad[j]) / quad;
            const double sum = alpha[i] + alpha[j];
            alpha[i] -= delta;
            alpha[j] += delta;
            if (sum > c) {
                if (alpha[i] > c) alpha[i] = c, alpha[j] = sum - c;
            } else {
                if (alpha[j] < 0.0) alpha[j] = 0.0, alpha[i] = sum;
            }
            if (sum > c) {
                if (alpha[j] > c) alpha[j] = c, alpha[i] = sum - c;
            } else {
                if (alpha[i] < 0.0) alpha[i] = 0.0, alpha[j] = sum;
            }
        }
        const double dai = alpha[i] - old_ai, daj = alpha[j] - old_aj;
        for (std::size_t t = 0; t < n; ++t) grad[t] += qi[t] * dai + qj[t] * daj;

        if (iter % n == 0) result.objective_trace.push_back(objective());
    }
    result.objective_trace.push_back(objective());
    result.iterations = iter;

    // Bias from free vectors, else the midpoint of the feasible interval.
    double ub = std::numeric_limits<double>::infinity(), lb = -ub, sum_free = 0.0;
    std::size_t n_free = 0;
    for (std::size_t t = 0; t < n; ++t) {
        const double yg = y[t] * grad[t];
        if (is_upper(t)) {
            if (y[t] < 0) ub = std::min(ub, yg);
            else lb = std::max(lb, yg);
        } else if (is_lower(t)) {
            if (y[t] > 0) ub = std::min(ub, yg);
            else lb = std::max(lb, yg);
        } else {
            ++n_free;
            sum_free += yg;
        }
    }
    const double rho = n_free > 0 ? sum_free / static_cast<double>(n_free) : (ub + lb) / 2.0;
    m.bias = -rho;

    for (std::size_t t = 0; t < n; ++t) {
        if (alpha[t] <= 0.0) continue;
        const auto r = x.row(t);
        m.support_vectors.emplace_back(r.begin(), r.end());
        m.dual_coefs.push_back(alpha[t] * y[t]);
    }
    result.alphas = std::move(alpha);
    return result;
}

inline std::vector<double> decision_values(const SvmModel& m, const FeatureMatrix& x) {
    if (x.cols() != m.dim)
        throw InvalidArgument("model expects " + std::to_string(m.dim) + " features, got " + std::to_string(x.cols()));
    std::vector<double> out(x.rows());
    for (std::size_t r = 0; r < x.rows(); ++r) out[r] = m.decision_value(x.row(r));
    return out;
}

/// Major iff f(x) >= 0.
inline std::vector<Activity> predict(const SvmModel& m, const FeatureMatrix& x) {
    const auto f = decision_values(m, x);
    std::vector<Activity> out(f.size());
    std::transform(f.begin(), f.end(), out.begin(), [](double v) { return from_sign(v); });
    return out;
}

// ---------------------------------------------------------------------------
// Platt calibration

/// Fits P(Major | f) = sigmoid(a f + b) by damped Newton on the cross-entropy
/// against the prior-corrected targets (N+ + 1)/(N+ + 2) and 1/(N- + 2), at
/// most 100 iterations. Falls back to a = 1, b = 0
/// when the scores are all identical, only one class is present, or the fit
/// leaves the finite range.
inline PlattParams fit_platt(std::span<const double> f, std::span<const Activity> y) {
    const PlattParams fallback{1.0, 0.0};
    if (f.size() != y.size()) throw InvalidArgument("score and label counts differ");
    const std::size_t n = f.size();
    if (n == 0) return fallback;
    const auto [lo, hi] = std::minmax_element(f.begin(), f.end());
    if (*hi - *lo <= 1e-12 * (1.0 + std::abs(*hi))) return fallback;
    const auto n_pos = static_cast<double>(std::count(y.begin(), y.end(), Activity::Major));
    const double n_neg = static_cast<double>(n) - n_pos;
    if (n_pos == 0.0 || n_neg == 0.0) return fallback;
    const double hi_target = (n_pos + 1.0) / (n_pos + 2.0);
    const double lo_target = 1.0 / (n_neg + 2.0);

    auto loss = [&](double a, double b) {
        double l = 0.0;
        for (std::size_t i = 0; i < n; ++i) {
            const double z = a * f[i] + b;
            const double t = y[i] == Activity::Major ? hi_target : lo_target;
            // log(1 + e^z) - t z, evaluated without overflow
            l += (z > 0.0 ? z + std::log1p(std::exp(-z)) : std::log1p(std::exp(z))) - t * z;
        }
        return l;
    };

    double a = 0.0, b = std::log(n_pos / n_neg);
    double current = loss(a, b);
    for (int it = 0; it < 100; ++it) {
        double g1 = 0.0, g2 = 0.0, h11 = 1e-12, h22 = 1e-12, h21 = 0.0;
        for (std::size_t i = 0; i < n; ++i) {
            const double p = logistic(a * f[i] + b);
            const double t = y[i] == Activity::Major ? hi_target : lo_target;
            const double w = p * (1.0 - p);
            g1 += (p - t) * f[i];
            g2 += p - t;
            h11 += w * f[i] * f[i];
            h22 += w;
            h21 += w * f[i];
        }
        if (std::abs(g1) < 1e-5 && std::abs(g2) < 1e-5) break;
        const double det = h11 * h22 - h21 * h21;
        if (!(det > 0.0)) break;
        const double da = -(h22 * g1 - h21 * g2) / det;
        const double db = -(-h21 * g1 + h11 * g2) / det;
        const double slope = g1 * da + g2 * db;
        double step = 1.0;
        bool moved = false;
        while (step >= 1e-10) {
            const double na = a + step * da, nb = b + step * db;
            const double cand = loss(na, nb);
            if (cand <= current + 1e-4 * step * slope) {
                a = na, b = nb, current = cand, moved = true;
                break;
            }
            step /= 2.0;
        }
        if (!moved) break;
    }
    if (!std::isfinite(a) || !std::isfinite(b)) return fallback;
    return {a, b};
}

inline std::vector<double> probabilities(const SvmModel& m, std::span<const double> decisions) {
    std::vector<double> out(decisions.size());
    std::transform(decisions.begin(), decisions.end(), out.begin(), [&](double f) { return m.probability(f); });
    return out;
}

}  // namespace equipact
