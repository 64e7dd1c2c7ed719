#ifndef MCNN_BASELINES_HPP
#define MCNN_BASELINES_HPP

#include <cmath>
#include <cstdint>
#include <optional>
#include <span>
#include <utility>
#include <vector>

#include "mcnn/day_matrix.hpp"
#include "mcnn/error.hpp"

namespace mcnn {

/// Per-(trip slot, segment) mean over the training days. Cells that were
/// never observed fall back to the segment's global mean.
class HistoricalMeanPredictor {
public:
    explicit HistoricalMeanPredictor(std::span<const DayMatrix> train_days) {
        if (train_days.empty()) throw ConfigError("historical mean: no training days");
        segments_ = train_days.front().segments;
        for (const auto& day : train_days) {
            if (day.segments != segments_) {
                throw ConfigError("historical mean: inconsistent segment counts");
            }
            max_trips_ = std::max(max_trips_, day.trips);
        }
        slot_sum_.assign(static_cast<std::size_t>(max_trips_) * segments_, 0.0);
        slot_count_.assign(slot_sum_.size(), 0);
        std::vector<double> seg_sum(segments_, 0.0);
        std::vector<std::size_t> seg_count(segments_, 0);
        double total_sum = 0.0;
        std::size_t total_count = 0;
        for (const auto& day : train_days) {
            for (int t = 0; t < day.trips; ++t) {
                for (int k = 0; k < segments_; ++k) {
                    if (day.is_missing(t, k)) continue;
                    const double v = day.value(t, k);
                    const std::size_t i = static_cast<std::size_t>(t) * segments_ + k;
                    slot_sum_[i] += v;
                    ++slot_count_[i];
                    seg_sum[k] += v;
                    ++seg_count[k];
                    total_sum += v;
                    ++total_count;
                }
            }
        }
        if (total_count == 0) throw ConfigError("historical mean: training days are all missing");
        const double grand_mean = total_sum / static_cast<double>(total_count);
        segment_mean_.assign(segments_, grand_mean);
        for (int k = 0; k < segments_; ++k) {
            if (seg_count[k]) segment_mean_[k] = seg_sum[k] / static_cast<double>(seg_count[k]);
        }
    }

    int segments() const { return segments_; }

    /// trip_slot and segment are 0-based; unseen slots use the segment mean.
    double predict(int trip_slot, int segment) const {
        if (segment < 0 || segment >= segments_) {
            throw DomainError("historical mean: segment out of range");
        }
        if (trip_slot >= 0 && trip_slot < max_trips_) {
            const std::size_t i = static_cast<std::size_t>(trip_slot) * segments_ + segment;
            if (slot_count_[i]) return slot_sum_[i] / static_cast<double>(slot_count_[i]);
        }
        return segment_mean_[segment];
    }

private:
    int segments_ = 0;
    int max_trips_ = 0;
    std::vector<double> slot_sum_;
    std::vector<std::size_t> slot_count_;
    std::vector<double> segment_mean_;
};

namespace detail {

/// Gaussian elimination with partial pivoting; nullopt when singular.
inline std::optional<std::vector<double>> solve_linear(std::vector<double> a,
                                                       std::vector<double> b, int n) {
    double scale = 0.0;
    for (double v : a) scale = std::max(scale, std::fabs(v));
    if (scale == 0.0) return std::nullopt;
    auto at = [&](int r, int c) -> double& { return a[static_cast<std::size_t>(r) * n + c]; };
    for (int col = 0; col < n; ++col) {
        int pivot = col;
        for (int r = col + 1; r < n; ++r) {
            if (std::fabs(at(r, col)) > std::fabs(at(pivot, col))) pivot = r;
        }
        if (std::fabs(at(pivot, col)) < 1e-12 * scale) return std::nullopt;
        if (pivot != col) {
            for (int c = 0; c < n; ++c) std::swap(at(col, c), at(pivot, c));
            std::swap(b[col], b[pivot]);
        }
        for (int r = col + 1; r < n; ++r) {
            const double f = at(r, col) / at(col, col);
            for (int c = col; c < n; ++c) at(r, c) -= f * at(col, c);
            b[r] -= f * b[col];
        }
    }
    std::vector<double> x(n, 0.0);
    for (int r = n - 1; r >= 0; --r) {
        double y = b[r];
        for (int c = r + 1; c < n; ++c) y -= at(r, c) * x[c];
        x[r] = y / at(r, r);
    }
    return x;
}

}  // namespace detail

/// Least-squares AR(p): no intercept, no differencing, no MA terms.
struct ArModel {
    std::vector<double> coefficients;  // lag 1..p
    bool fitted = false;               // false => normal equations were singular

    double predict(std::span<const double> last_p) const {
        double y = 0.0;
        for (std::size_t i = 0; i < coefficients.size(); ++i) {
            y += coefficients[i] * last_p[last_p.size() - 1 - i];
        }
        return y;
    }
};

/// Fits x_t = a1*x_{t-1} + ... + ap*x_{t-p} on one contiguous series.
inline ArModel fit_ar(std::span<const double> series, int order) {
    if (order < 1) throw ConfigError("ar: order must be >= 1");
    if (static_cast<int>(series.size()) <= order) {
        throw ConfigError("ar: series length must exceed the order");
    }
    const int p = order;
    std::vector<double> a(static_cast<std::size_t>(p) * p, 0.0);
    std::vector<double> b(p, 0.0);
    for (std::size_t t = p; t < series.size(); ++t) {
        for (int i = 0; i < p; ++i) {
            b[i] += series[t] * series[t - 1 - i];
            for (int j = 0; j < p; ++j) {
                a[static_cast<std::size_t>(i) * p + j] += series[t - 1 - i] * series[t - 1 - j];
            }
        }
    }
    ArModel model;
    if (auto x = detail::solve_linear(std::move(a), std::move(b), p)) {
        model.coefficients = std::move(*x);
        model.fitted = true;
    }
    return model;
}

/// Per-segment AR(p) over across-trip series. Lag windows never span missing
/// cells or day boundaries. Segments whose fit is singular, and predictions
/// without p consecutive observed same-day trips, fall back to the
/// historical mean.
class ArPredictor {
public:
    ArPredictor(std::span<const DayMatrix> train_days, int order,
                HistoricalMeanPredictor fallback)
        : order_(order), fallback_(std::move(fallback)) {
        if (train_days.empty()) throw ConfigError("ar baseline: no training days");
        if (order_ < 1) throw ConfigError("ar baseline: order must be >= 1");
        const int K = train_days.front().segments;
        models_.resize(K);
        for (int k = 0; k < K; ++k) {
            models_[k] = fit_segment(train_days, k);
            if (!models_[k].fitted) ++fallback_segments_;
        }
    }

    int order() const { return order_; }
    int fallback_segment_count() const { return fallback_segments_; }
    const ArModel& model(int segment) const { return models_[segment]; }

    /// `day_history` holds this segment's values for trips 0..trip_slot-1 of
    /// the current day, with `history_missing` flagging unobserved entries.
    double predict(int trip_slot, int segment, std::span<const double> day_history,
                   std::span<const std::uint8_t> history_missing) const {
        const auto& model = models_[segment];
        if (model.fitted && static_cast<int>(day_history.size()) >= order_) {
            bool usable = true;
            for (int i = 0; i < order_ && usable; ++i) {
                usable = !history_missing[day_history.size() - 1 - i];
            }
            if (usable) {
                return model.predict(day_history.subspan(day_history.size() - order_));
            }
        }
        return fallback_.predict(trip_slot, segment);
    }

private:
    ArModel fit_segment(std::span<const DayMatrix> train_days, int segment) const {
        const int p = order_;
        std::vector<double> a(static_cast<std::size_t>(p) * p, 0.0);
        std::vector<double> b(p, 0.0);
        std::size_t rows = 0;
        for (const auto& day : train_days) {
            for (int t = p; t < day.trips; ++t) {
                bool ok = !day.is_missing(t, segment);
                for (int i = 1; ok && i <= p; ++i) ok = !day.is_missing(t - i, segment);
                if (!ok) continue;
                ++rows;
                for (int i = 0; i < p; ++i) {
                    const double xi = day.value(t - 1 - i, segment);
                    b[i] += day.value(t, segment) * xi;
                    for (int j = 0; j < p; ++j) {
                        a[static_cast<std::size_t>(i) * p + j] +=
                            xi * day.value(t - 1 - j, segment);
                    }
                }
            }
        }
        ArModel model;
        if (rows == 0) return model;
        if (auto x = detail::solve_linear(std::move(a), std::move(b), p)) {
            model.coefficients = std::move(*x);
            model.fitted = true;
        }
        return model;
    }

    int order_ = 1;
    std::vector<ArModel> models_;
    HistoricalMeanPredictor fallback_;
    int fallback_segments_ = 0;
};

}  // namespace mcnn

#endif  // MCNN_BASELINES_HPP
