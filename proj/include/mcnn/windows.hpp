#ifndef MCNN_WINDOWS_HPP
#define MCNN_WINDOWS_HPP

#include <algorithm>
#include <cstdint>
#include <span>
#include <string>
#include <vector>

#include "mcnn/day_matrix.hpp"
#include "mcnn/error.hpp"
#include "mcnn/quantizer.hpp"

namespace mcnn {

/// H x K matrix of class indices; raster (row-major) order defines the
/// autoregressive factorization. Invalid cells are missing observations or
/// training outliers (t >= t_max) and are excluded from every loss.
struct QuantizedWindow {
    int rows = 0;  // H
    int cols = 0;  // K
    std::vector<int> classes;
    std::vector<std::uint8_t> validity;
    std::string service_date;
    int first_trip = 0;
    bool padded = false;

    std::size_t index(int r, int c) const { return static_cast<std::size_t>(r) * cols + c; }
};

/// Overlapping windows of H consecutive trips, stride 1, never crossing the
/// day boundary. A day shorter than H yields a single top-padded window,
/// flagged so the trainer can decide what to do with it.
inline std::vector<QuantizedWindow> make_windows(const DayMatrix& day, int window_trips,
                                                 const Quantizer& quantizer) {
    if (window_trips < 1) throw ConfigError("make_windows: window size must be >= 1");
    const int H = window_trips;
    const int K = day.segments;

    auto fill_row = [&](QuantizedWindow& w, int window_row, int trip) {
        for (int k = 0; k < K; ++k) {
            const std::size_t i = w.index(window_row, k);
            if (day.is_missing(trip, k)) continue;
            auto cls = quantizer.quantize(day.value(trip, k), QuantizeMode::Missing);
            if (!cls) continue;  // outlier
            w.classes[i] = *cls;
            w.validity[i] = 1;
        }
    };

    std::vector<QuantizedWindow> windows;
    if (day.trips < H) {
        QuantizedWindow w;
        w.rows = H;
        w.cols = K;
        w.classes.assign(static_cast<std::size_t>(H) * K, 0);
        w.validity.assign(static_cast<std::size_t>(H) * K, 0);
        w.service_date = day.service_date;
        w.first_trip = 0;
        w.padded = true;
        const int pad = H - day.trips;
        for (int t = 0; t < day.trips; ++t) fill_row(w, pad + t, t);
        windows.push_back(std::move(w));
        return windows;
    }

    windows.reserve(static_cast<std::size_t>(day.trips - H + 1));
    for (int start = 0; start + H <= day.trips; ++start) {
        QuantizedWindow w;
        w.rows = H;
        w.cols = K;
        w.classes.assign(static_cast<std::size_t>(H) * K, 0);
        w.validity.assign(static_cast<std::size_t>(H) * K, 0);
        w.service_date = day.service_date;
        w.first_trip = start;
        for (int r = 0; r < H; ++r) fill_row(w, r, start + r);
        windows.push_back(std::move(w));
    }
    return windows;
}

inline std::vector<QuantizedWindow> make_windows(const std::vector<DayMatrix>& days,
                                                 int window_trips, const Quantizer& quantizer) {
    std::vector<QuantizedWindow> all;
    for (const auto& day : days) {
        auto w = make_windows(day, window_trips, quantizer);
        all.insert(all.end(), std::make_move_iterator(w.begin()),
                   std::make_move_iterator(w.end()));
    }
    return all;
}

/// Window classes with invalid cells replaced by the per-segment fill value.
/// The fill keeps the network input defined everywhere; the validity mask
/// keeps filled cells out of the loss.
inline std::vector<int> fill_with_medians(const QuantizedWindow& w,
                                          const std::vector<int>& medians) {
    if (medians.size() != static_cast<std::size_t>(w.cols)) {
        throw ConfigError("median fill: fill table size mismatch");
    }
    std::vector<int> filled = w.classes;
    for (int r = 0; r < w.rows; ++r) {
        for (int c = 0; c < w.cols; ++c) {
            const std::size_t i = w.index(r, c);
            if (!w.validity[i]) filled[i] = medians[c];
        }
    }
    return filled;
}

/// Per-segment median class over valid cells; the fill value for unobserved
/// cells. Segments with no data fall back to the global median, then to C/2.
inline std::vector<int> segment_median_classes(std::span<const QuantizedWindow> windows,
                                               int segments, int classes) {
    std::vector<std::vector<int>> per_segment(static_cast<std::size_t>(segments));
    std::vector<int> all;
    for (const auto& w : windows) {
        if (w.cols != segments) throw ConfigError("median fill: window segment count mismatch");
        for (int r = 0; r < w.rows; ++r) {
            for (int c = 0; c < w.cols; ++c) {
                const std::size_t i = w.index(r, c);
                if (!w.validity[i]) continue;
                per_segment[c].push_back(w.classes[i]);
                all.push_back(w.classes[i]);
            }
        }
    }
    int global = classes / 2;
    if (!all.empty()) {
        std::sort(all.begin(), all.end());
        global = all[(all.size() - 1) / 2];
    }
    std::vector<int> medians(static_cast<std::size_t>(segments), global);
    for (int k = 0; k < segments; ++k) {
        auto& vals = per_segment[k];
        if (vals.empty()) continue;
        std::sort(vals.begin(), vals.end());
        medians[k] = vals[(vals.size() - 1) / 2];
    }
    return medians;
}

}  // namespace mcnn

#endif  // MCNN_WINDOWS_HPP
