#ifndef MCNN_METRICS_HPP
#define MCNN_METRICS_HPP

#include <cmath>
#include <cstdint>
#include <limits>
#include <vector>

#include "mcnn/error.hpp"

namespace mcnn {

/// Error metrics over cells with observed ground truth.
///
/// `rmse` is the per-trip-then-averaged form
///   (1/T) * sum_trips sqrt(mean over the trip's valid cells of err^2),
/// which differs from the pooled form; both are reported.
struct MetricReport {
    double mape = 0.0;  // percent
    double mae = 0.0;   // seconds
    double rmse = 0.0;  // seconds, per-trip averaged
    double rmse_pooled = 0.0;
    std::size_t valid_cells = 0;      // cells with ground truth
    std::size_t mape_cells = 0;       // cells entering the MAPE mean
    std::size_t excluded_zero = 0;    // valid cells skipped because actual == 0
    std::vector<double> per_stop_mape;
    std::vector<double> per_stop_mae;
    std::vector<double> per_stop_rmse;
    std::vector<std::size_t> per_stop_cells;
};

inline MetricReport compute_metrics(const std::vector<double>& predicted,
                                    const std::vector<double>& actual,
                                    const std::vector<std::uint8_t>& validity, int trips,
                                    int segments) {
    const std::size_t cells = static_cast<std::size_t>(trips) * segments;
    if (predicted.size() != cells || actual.size() != cells || validity.size() != cells) {
        throw ConfigError("compute_metrics: shape mismatch");
    }

    MetricReport report;
    report.per_stop_mape.assign(segments, 0.0);
    report.per_stop_mae.assign(segments, 0.0);
    report.per_stop_rmse.assign(segments, 0.0);
    report.per_stop_cells.assign(segments, 0);
    std::vector<std::size_t> per_stop_mape_cells(segments, 0);

    double abs_sum = 0.0, pct_sum = 0.0, sq_sum = 0.0;
    double trip_rmse_sum = 0.0;
    std::size_t trips_counted = 0;

    for (int t = 0; t < trips; ++t) {
        double trip_sq = 0.0;
        std::size_t trip_cells = 0;
        for (int k = 0; k < segments; ++k) {
            const std::size_t i = static_cast<std::size_t>(t) * segments + k;
            if (!validity[i]) continue;
            const double err = predicted[i] - actual[i];
            const double abs_err = std::fabs(err);
            ++report.valid_cells;
            ++trip_cells;
            ++report.per_stop_cells[k];
            abs_sum += abs_err;
            sq_sum += err * err;
            trip_sq += err * err;
            report.per_stop_mae[k] += abs_err;
            report.per_stop_rmse[k] += err * err;
            if (actual[i] != 0.0) {
                pct_sum += abs_err / std::fabs(actual[i]);
                report.per_stop_mape[k] += abs_err / std::fabs(actual[i]);
                ++report.mape_cells;
                ++per_stop_mape_cells[k];
            } else {
                ++report.excluded_zero;
            }
        }
        if (trip_cells > 0) {
            trip_rmse_sum += std::sqrt(trip_sq / static_cast<double>(trip_cells));
            ++trips_counted;
        }
    }
    if (report.valid_cells == 0) throw ConfigError("compute_metrics: no valid cells");

    report.mae = abs_sum / static_cast<double>(report.valid_cells);
    report.mape = report.mape_cells
                      ? 100.0 * pct_sum / static_cast<double>(report.mape_cells)
                      : std::numeric_limits<double>::quiet_NaN();
    report.rmse = trip_rmse_sum / static_cast<double>(trips_counted);
    report.rmse_pooled = std::sqrt(sq_sum / static_cast<double>(report.valid_cells));
    for (int k = 0; k < segments; ++k) {
        const auto n = report.per_stop_cells[k];
        if (n == 0) continue;
        report.per_stop_mae[k] /= static_cast<double>(n);
        report.per_stop_rmse[k] = std::sqrt(report.per_stop_rmse[k] / static_cast<double>(n));
        report.per_stop_mape[k] = per_stop_mape_cells[k]
                                      ? 100.0 * report.per_stop_mape[k] /
                                            static_cast<double>(per_stop_mape_cells[k])
                                      : std::numeric_limits<double>::quiet_NaN();
    }
    return report;
}

}  // namespace mcnn

#endif  // MCNN_METRICS_HPP
