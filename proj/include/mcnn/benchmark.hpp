#ifndef MCNN_BENCHMARK_HPP
#define MCNN_BENCHMARK_HPP

#include <algorithm>
#include <istream>
#include <map>
#include <optional>
#include <span>
#include <sstream>
#include <string>
#include <tuple>
#include <utility>
#include <vector>

#include "mcnn/baselines.hpp"
#include "mcnn/day_matrix.hpp"
#include "mcnn/error.hpp"
#include "mcnn/metrics.hpp"
#include "mcnn/session.hpp"
#include "mcnn/stop_events.hpp"
#include "mcnn/train.hpp"

namespace mcnn {

/// Third-party predictions keyed by (service_date, trip, 1-based segment).
struct ExternalPredictions {
    std::string name;
    std::map<std::tuple<std::string, int, int>, double> cells;
};

inline constexpr const char* kExternalPredictionHeader =
    "service_date,trip_index,segment_index,predicted_seconds";

inline ExternalPredictions parse_external_predictions(std::istream& in,
                                                      const std::string& name) {
    std::string line;
    if (!std::getline(in, line)) throw IoError("external predictions: empty input");
    while (!line.empty() && (line.back() == '\r' || line.back() == '\n')) line.pop_back();
    if (line != kExternalPredictionHeader) {
        throw IoError(std::string("external predictions: bad header, expected '") +
                      kExternalPredictionHeader + "'");
    }
    ExternalPredictions ext;
    ext.name = name;
    std::size_t line_number = 1;
    while (std::getline(in, line)) {
        ++line_number;
        if (line.empty() || line == "\r") continue;
        auto fields = split_csv_line(line);
        if (fields.size() != 4) {
            throw IoError("external predictions line " + std::to_string(line_number) +
                          ": expected 4 fields");
        }
        try {
            const int trip = std::stoi(fields[1]);
            const int segment = std::stoi(fields[2]);
            const double seconds = std::stod(fields[3]);
            ext.cells[{fields[0], trip, segment}] = seconds;
        } catch (const std::exception&) {
            throw IoError("external predictions line " + std::to_string(line_number) +
                          ": bad field");
        }
    }
    return ext;
}

struct BaselineSet {
    std::optional<HistoricalMeanPredictor> historical;
    std::optional<ArPredictor> ar;
    std::vector<ExternalPredictions> external;
};

/// Evaluate one segment after observing a fixed prefix of the trip.
struct ProbeSpec {
    int segment = 0;  // 1-based target segment
    int prefix = 0;   // observed segments before predicting
};

struct BenchmarkOptions {
    bool trip_start = true;  // full-rollout metrics at trip start
    std::vector<ProbeSpec> probes;
};

struct BenchmarkRow {
    std::string route_id;
    std::string predictor;
    std::string setting;  // one_step | trip_start | seg<j>_prefix<m>
    MetricReport report;
};

namespace detail {

/// H x K class grid for one trip of a day: context rows from the preceding
/// trips (clamp-quantized, median where missing), current row true for the
/// first `prefix` segments and median fill beyond.
inline std::vector<int> inference_grid(const ModelBundle& bundle, const DayMatrix& day, int trip,
                                       int prefix) {
    const auto& cfg = bundle.checkpoint.model_config;
    const auto& q = bundle.checkpoint.quantizer;
    const auto& medians = bundle.checkpoint.median_classes;
    const int H = cfg.window;
    const int K = cfg.segments;
    std::vector<int> grid(static_cast<std::size_t>(H) * K);
    for (int r = 0; r < H; ++r) {
        const int src_trip = trip - (H - 1) + r;
        const int limit = r == H - 1 ? prefix : K;
        for (int k = 0; k < K; ++k) {
            int cls = medians[k];
            if (src_trip >= 0 && k < limit && !day.is_missing(src_trip, k)) {
                cls = q.quantize_clamp(day.value(src_trip, k));
            }
            grid[static_cast<std::size_t>(r) * K + k] = cls;
        }
    }
    return grid;
}

/// Greedy rollout over current-row cells [from, to), writing each predicted
/// class back before the next step. Returns predicted seconds per cell.
inline std::vector<double> rollout(const ModelBundle& bundle, std::vector<int>& grid, int from,
                                   int to) {
    const auto& cfg = bundle.checkpoint.model_config;
    const int H = cfg.window;
    const int K = cfg.segments;
    std::vector<double> seconds;
    seconds.reserve(static_cast<std::size_t>(to - from));
    for (int k = from; k < to; ++k) {
        const FeatureMap logits = bundle.model.forward(bundle.model.scale_input(grid));
        const std::size_t cells = static_cast<std::size_t>(H) * K;
        const std::size_t cell = static_cast<std::size_t>(H - 1) * K + k;
        int best = 0;
        double top = logits.data[cell];
        for (int ch = 1; ch < cfg.classes; ++ch) {
            const double v = logits.data[ch * cells + cell];
            if (v > top) {
                top = v;
                best = ch;
            }
        }
        grid[cell] = best;
        seconds.push_back(bundle.checkpoint.quantizer.dequantize(best));
    }
    return seconds;
}

struct StackedDays {
    std::vector<double> actual;
    std::vector<std::uint8_t> validity;
    int trips = 0;
    int segments = 0;
    std::vector<std::pair<const DayMatrix*, int>> row_source;  // (day, trip within day)
};

inline StackedDays stack_days(std::span<const DayMatrix> days) {
    StackedDays s;
    s.segments = days.front().segments;
    for (const auto& day : days) {
        if (day.segments != s.segments) {
            throw ConfigError("benchmark: test days have inconsistent segment counts");
        }
        for (int t = 0; t < day.trips; ++t) {
            s.row_source.emplace_back(&day, t);
            for (int k = 0; k < s.segments; ++k) {
                s.actual.push_back(day.is_missing(t, k) ? 0.0 : day.value(t, k));
                s.validity.push_back(day.is_missing(t, k) ? 0 : 1);
            }
        }
    }
    s.trips = static_cast<int>(s.row_source.size());
    return s;
}

}  // namespace detail

/// One-step-ahead predictions for every cell of a day, in session-replay
/// semantics: each cell is predicted from the true previous trips plus the
/// true prefix of its own trip. Causality makes this a single forward pass
/// per trip.
inline std::vector<double> cnn_one_step_day(const ModelBundle& bundle, const DayMatrix& day) {
    const auto& cfg = bundle.checkpoint.model_config;
    if (day.segments != cfg.segments) {
        throw ConfigError("benchmark: day segment count does not match model");
    }
    const int K = cfg.segments;
    std::vector<double> predicted(static_cast<std::size_t>(day.trips) * K, 0.0);
    for (int trip = 0; trip < day.trips; ++trip) {
        auto grid = detail::inference_grid(bundle, day, trip, K);
        const auto classes = argmax_classes(bundle.model, grid);
        for (int k = 0; k < K; ++k) {
            predicted[static_cast<std::size_t>(trip) * K + k] = bundle.checkpoint.quantizer
                .dequantize(classes[static_cast<std::size_t>(cfg.window - 1) * K + k]);
        }
    }
    return predicted;
}

/// One-step-ahead metrics over every observed cell of the given days.
inline MetricReport evaluate_one_step(const ModelBundle& bundle,
                                      std::span<const DayMatrix> days) {
    if (days.empty()) throw ConfigError("evaluate: no days");
    const auto stacked = detail::stack_days(days);
    std::vector<double> predicted(stacked.actual.size(), 0.0);
    std::size_t row0 = 0;
    for (const auto& day : days) {
        auto day_pred = cnn_one_step_day(bundle, day);
        std::copy(day_pred.begin(), day_pred.end(),
                  predicted.begin() + row0 * static_cast<std::size_t>(stacked.segments));
        row0 += static_cast<std::size_t>(day.trips);
    }
    return compute_metrics(predicted, stacked.actual, stacked.validity, stacked.trips,
                           stacked.segments);
}

inline std::vector<BenchmarkRow> run_benchmark(const ModelBundle& bundle,
                                               const BaselineSet& baselines,
                                               std::span<const DayMatrix> test_days,
                                               const BenchmarkOptions& options) {
    if (test_days.empty()) throw ConfigError("benchmark: no test days");

    // group by route, preserving date order
    std::map<std::string, std::vector<const DayMatrix*>> routes;
    for (const auto& day : test_days) routes[day.route_id].push_back(&day);

    std::vector<BenchmarkRow> rows;
    for (const auto& [route_id, day_ptrs] : routes) {
        std::vector<DayMatrix> route_days;
        route_days.reserve(day_ptrs.size());
        for (const auto* d : day_ptrs) route_days.push_back(*d);
        const auto stacked = detail::stack_days(route_days);
        const int K = stacked.segments;

        auto add_row = [&](const std::string& predictor, const std::string& setting,
                           const std::vector<double>& predicted,
                           const std::vector<std::uint8_t>& validity) {
            rows.push_back(BenchmarkRow{route_id, predictor, setting,
                                        compute_metrics(predicted, stacked.actual, validity,
                                                        stacked.trips, K)});
        };

        // --- one-step setting ---
        {
            std::vector<double> cnn(stacked.actual.size(), 0.0);
            std::size_t row0 = 0;
            for (const auto& day : route_days) {
                auto day_pred = cnn_one_step_day(bundle, day);
                std::copy(day_pred.begin(), day_pred.end(), cnn.begin() + row0 * K);
                row0 += static_cast<std::size_t>(day.trips);
            }
            add_row("mask-cnn", "one_step", cnn, stacked.validity);

            if (baselines.historical) {
                std::vector<double> pred(stacked.actual.size(), 0.0);
                for (int r = 0; r < stacked.trips; ++r) {
                    const int slot = stacked.row_source[r].second;
                    for (int k = 0; k < K; ++k) {
                        pred[static_cast<std::size_t>(r) * K + k] =
                            baselines.historical->predict(slot, k);
                    }
                }
                add_row("historical-mean", "one_step", pred, stacked.validity);
            }
            if (baselines.ar) {
                std::vector<double> pred(stacked.actual.size(), 0.0);
                std::vector<double> history;
                std::vector<std::uint8_t> history_missing;
                for (std::size_t r = 0; r < stacked.row_source.size(); ++r) {
                    const auto [day, trip] = stacked.row_source[r];
                    for (int k = 0; k < K; ++k) {
                        history.clear();
                        history_missing.clear();
                        for (int t = 0; t < trip; ++t) {
                            history.push_back(day->is_missing(t, k) ? 0.0 : day->value(t, k));
                            history_missing.push_back(day->is_missing(t, k) ? 1 : 0);
                        }
                        pred[r * K + k] =
                            baselines.ar->predict(trip, k, history, history_missing);
                    }
                }
                add_row("ar", "one_step", pred, stacked.validity);
            }
            for (const auto& ext : baselines.external) {
                std::vector<double> pred(stacked.actual.size(), 0.0);
                std::vector<std::string> uncovered;
                for (std::size_t r = 0; r < stacked.row_source.size(); ++r) {
                    const auto [day, trip] = stacked.row_source[r];
                    for (int k = 0; k < K; ++k) {
                        if (!stacked.validity[r * K + k]) continue;
                        auto it = ext.cells.find({day->service_date, trip, k + 1});
                        if (it == ext.cells.end()) {
                            if (uncovered.size() < 8) {
                                uncovered.push_back(day->service_date + "/trip" +
                                                    std::to_string(trip) + "/seg" +
                                                    std::to_string(k + 1));
                            }
                            continue;
                        }
                        pred[r * K + k] = it->second;
                    }
                }
                if (!uncovered.empty()) {
                    std::ostringstream os;
                    os << "benchmark: predictor '" << ext.name << "' does not cover";
                    for (const auto& c : uncovered) os << ' ' << c;
                    os << " ...";
                    throw ConfigError(os.str());
                }
                add_row(ext.name, "one_step", pred, stacked.validity);
            }
        }

        // --- trip-start setting: full greedy rollout with no prefix ---
        if (options.trip_start) {
            std::vector<double> cnn(stacked.actual.size(), 0.0);
            for (std::size_t r = 0; r < stacked.row_source.size(); ++r) {
                const auto [day, trip] = stacked.row_source[r];
                auto grid = detail::inference_grid(bundle, *day, trip, 0);
                const auto seconds = detail::rollout(bundle, grid, 0, K);
                std::copy(seconds.begin(), seconds.end(), cnn.begin() + r * K);
            }
            add_row("mask-cnn", "trip_start", cnn, stacked.validity);
            if (baselines.historical) {
                std::vector<double> pred(stacked.actual.size(), 0.0);
                for (int r = 0; r < stacked.trips; ++r) {
                    for (int k = 0; k < K; ++k) {
                        pred[static_cast<std::size_t>(r) * K + k] =
                            baselines.historical->predict(stacked.row_source[r].second, k);
                    }
                }
                add_row("historical-mean", "trip_start", pred, stacked.validity);
            }
        }

        // --- probe settings: one segment, fixed observed prefix ---
        for (const auto& probe : options.probes) {
            if (probe.segment < 1 || probe.segment > K || probe.prefix < 0 ||
                probe.prefix >= probe.segment) {
                throw ConfigError("benchmark: probe needs 1 <= prefix+1 <= segment <= K");
            }
            std::vector<double> cnn(stacked.actual.size(), 0.0);
            std::vector<double> hist(stacked.actual.size(), 0.0);
            std::vector<std::uint8_t> probe_valid(stacked.actual.size(), 0);
            for (std::size_t r = 0; r < stacked.row_source.size(); ++r) {
                const auto [day, trip] = stacked.row_source[r];
                bool prefix_ok = !day->is_missing(trip, probe.segment - 1);
                for (int k = 0; k < probe.prefix && prefix_ok; ++k) {
                    prefix_ok = !day->is_missing(trip, k);
                }
                if (!prefix_ok) continue;
                auto grid = detail::inference_grid(bundle, *day, trip, probe.prefix);
                const auto seconds = detail::rollout(bundle, grid, probe.prefix, probe.segment);
                const std::size_t cell = r * K + (probe.segment - 1);
                cnn[cell] = seconds.back();
                probe_valid[cell] = 1;
                if (baselines.historical) {
                    hist[cell] = baselines.historical->predict(trip, probe.segment - 1);
                }
            }
            const std::string setting = "seg" + std::to_string(probe.segment) + "_prefix" +
                                        std::to_string(probe.prefix);
            add_row("mask-cnn", setting, cnn, probe_valid);
            if (baselines.historical) add_row("historical-mean", setting, hist, probe_valid);
        }
    }
    return rows;
}

inline void write_benchmark_csv(std::ostream& out, const std::vector<BenchmarkRow>& rows) {
    out << "route,predictor,setting,mape_pct,mae_s,rmse_s,rmse_pooled_s,cells\n";
    for (const auto& row : rows) {
        out << row.route_id << ',' << row.predictor << ',' << row.setting << ','
            << row.report.mape << ',' << row.report.mae << ',' << row.report.rmse << ','
            << row.report.rmse_pooled << ',' << row.report.valid_cells << '\n';
    }
}

}  // namespace mcnn

#endif  // MCNN_BENCHMARK_HPP
