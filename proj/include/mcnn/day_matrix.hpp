#ifndef MCNN_DAY_MATRIX_HPP
#define MCNN_DAY_MATRIX_HPP

#include <algorithm>
#include <cstdint>
#include <cstdio>
#include <istream>
#include <map>
#include <ostream>
#include <string>
#include <tuple>
#include <utility>
#include <vector>

#include "mcnn/error.hpp"
#include "mcnn/stop_events.hpp"

namespace mcnn {

/// One service day's trips x segments travel-time matrix in seconds.
/// Segment k (column k-1) spans stops k-1 to k, measured arrival-to-arrival,
/// so dwell at the upstream stop is part of the segment time.
struct DayMatrix {
    std::string route_id;
    std::string service_date;
    int trips = 0;     // T
    int segments = 0;  // K
    std::vector<double> travel_times;   // T*K, seconds; 0 where missing
    std::vector<std::uint8_t> missing;  // T*K

    DayMatrix() = default;
    DayMatrix(std::string route, std::string date, int trips_, int segments_)
        : route_id(std::move(route)), service_date(std::move(date)), trips(trips_),
          segments(segments_) {
        if (trips < 1 || segments < 1) throw ConfigError("day matrix dimensions must be >= 1");
        travel_times.assign(static_cast<std::size_t>(trips) * segments, 0.0);
        missing.assign(static_cast<std::size_t>(trips) * segments, 1);
    }

    std::size_t index(int trip, int segment) const {
        return static_cast<std::size_t>(trip) * segments + segment;
    }
    double value(int trip, int segment) const { return travel_times[index(trip, segment)]; }
    bool is_missing(int trip, int segment) const { return missing[index(trip, segment)] != 0; }

    void set(int trip, int segment, double seconds) {
        travel_times[index(trip, segment)] = seconds;
        missing[index(trip, segment)] = 0;
    }
};

struct IngestResult {
    std::vector<DayMatrix> days;  // sorted by (route_id, service_date)
    std::vector<RejectedRecord> rejected;
};

/// Builds day matrices from stop events. t[trip][k] = arrival(k) - arrival(k-1)
/// for k >= 2; segment 1 uses the origin (stop 0) departure when present.
/// A negative computed travel time rejects the later event; missing events
/// leave their adjacent cells missing, never interpolated.
inline IngestResult ingest_events(const std::vector<StopEvent>& events) {
    if (events.empty()) throw ConfigError("ingest: no events");

    // (route, date) -> trip -> stop -> event
    std::map<std::pair<std::string, std::string>, std::map<int, std::map<int, StopEvent>>> grouped;
    int max_stop = 0;
    IngestResult result;
    for (const auto& ev : events) {
        auto& trip_map = grouped[{ev.route_id, ev.service_date}][ev.trip_index];
        auto [it, inserted] = trip_map.emplace(ev.stop_index, ev);
        if (!inserted) {
            throw DomainError("ingest: duplicate event for route " + ev.route_id + " date " +
                              ev.service_date + " trip " + std::to_string(ev.trip_index) +
                              " stop " + std::to_string(ev.stop_index));
        }
        max_stop = std::max(max_stop, ev.stop_index);
    }
    if (max_stop < 1) throw ConfigError("ingest: no events beyond the origin stop");
    const int K = max_stop;

    for (auto& [key, trips] : grouped) {
        const int T = trips.rbegin()->first + 1;
        DayMatrix day(key.first, key.second, T, K);
        for (auto& [trip_index, stops] : trips) {
            // Walk stops in order, rejecting events whose arrival runs backwards.
            std::map<int, double> arrivals;  // accepted arrival per stop >= 1
            double origin_departure = 0.0;
            bool has_origin = false;
            if (auto it = stops.find(0); it != stops.end()) {
                origin_departure = it->second.departure_ts;
                has_origin = true;
            }
            for (auto& [stop, ev] : stops) {
                if (stop == 0) continue;
                double prev = 0.0;
                bool has_prev = false;
                if (stop == 1) {
                    prev = origin_departure;
                    has_prev = has_origin;
                } else if (auto it = arrivals.find(stop - 1); it != arrivals.end()) {
                    prev = it->second;
                    has_prev = true;
                }
                if (has_prev && ev.arrival_ts < prev) {
                    result.rejected.push_back(
                        {0,
                         "negative travel time at route " + key.first + " date " + key.second +
                             " trip " + std::to_string(trip_index) + " stop " +
                             std::to_string(stop),
                         ""});
                    continue;  // event dropped; adjacent cells stay missing
                }
                arrivals[stop] = ev.arrival_ts;
                if (has_prev) day.set(trip_index, stop - 1, ev.arrival_ts - prev);
            }
        }
        result.days.push_back(std::move(day));
    }
    return result;
}

// ---- day-matrix CSV: one trip per row, K columns, empty field = missing ----

inline void write_day_matrix(std::ostream& out, const DayMatrix& day) {
    char buf[32];
    for (int t = 0; t < day.trips; ++t) {
        for (int k = 0; k < day.segments; ++k) {
            if (k) out << ',';
            if (!day.is_missing(t, k)) {
                std::snprintf(buf, sizeof buf, "%.6f", day.value(t, k));
                out << buf;
            }
        }
        out << '\n';
    }
}

inline DayMatrix parse_day_matrix(std::istream& in, const std::string& route_id,
                                  const std::string& service_date) {
    std::vector<std::vector<std::optional<double>>> rows;
    std::string line;
    std::size_t width = 0;
    while (std::getline(in, line)) {
        while (!line.empty() && (line.back() == '\r' || line.back() == '\n')) line.pop_back();
        if (line.empty() && in.peek() == std::char_traits<char>::eof()) break;
        auto fields = split_csv_line(line);
        std::vector<std::optional<double>> row;
        row.reserve(fields.size());
        for (const auto& f : fields) {
            if (f.empty()) {
                row.push_back(std::nullopt);
                continue;
            }
            try {
                double v = std::stod(f);
                if (v < 0.0) throw IoError("day matrix: negative travel time '" + f + "'");
                row.push_back(v);
            } catch (const IoError&) {
                throw;
            } catch (const std::exception&) {
                throw IoError("day matrix: bad field '" + f + "'");
            }
        }
        if (width == 0) width = row.size();
        if (row.size() != width) throw IoError("day matrix: ragged rows");
        rows.push_back(std::move(row));
    }
    if (rows.empty() || width == 0) throw IoError("day matrix: no data");
    DayMatrix day(route_id, service_date, static_cast<int>(rows.size()),
                  static_cast<int>(width));
    for (int t = 0; t < day.trips; ++t) {
        for (int k = 0; k < day.segments; ++k) {
            if (rows[t][k]) day.set(t, k, *rows[t][k]);
        }
    }
    return day;
}

// ---- chronological split ----

struct TrainTestSplit {
    std::vector<DayMatrix> train;
    std::vector<DayMatrix> test;
};

/// Splits strictly by calendar date: train < boundary <= test. No shuffling.
inline TrainTestSplit split_train_test(std::vector<DayMatrix> days,
                                       const std::string& boundary_date) {
    if (days.empty()) throw ConfigError("split: no days");
    if (!parse_date(boundary_date)) throw ConfigError("split: bad boundary date");
    std::sort(days.begin(), days.end(), [](const DayMatrix& a, const DayMatrix& b) {
        return std::tie(a.service_date, a.route_id) < std::tie(b.service_date, b.route_id);
    });
    TrainTestSplit split;
    for (auto& day : days) {
        (day.service_date < boundary_date ? split.train : split.test).push_back(std::move(day));
    }
    if (split.train.empty()) throw ConfigError("split: boundary leaves no training days");
    if (split.test.empty()) throw ConfigError("split: boundary leaves no test days");
    return split;
}

}  // namespace mcnn

#endif  // MCNN_DAY_MATRIX_HPP
