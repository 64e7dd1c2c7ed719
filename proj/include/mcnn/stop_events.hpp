#ifndef MCNN_STOP_EVENTS_HPP
#define MCNN_STOP_EVENTS_HPP

#include <cctype>
#include <cstdint>
#include <cstdlib>
#include <cstdio>
#include <istream>
#include <optional>
#include <string>
#include <vector>

#include "mcnn/error.hpp"

namespace mcnn {

/// One recorded stop visit. Stop index 0 is the origin terminal; its departure
/// anchors segment 1. Stops 1..K bound segments 1..K.
struct StopEvent {
    std::string route_id;
    std::string service_date;  // YYYY-MM-DD
    int trip_index = 0;        // 0-based slot within the day
    int stop_index = 0;
    double arrival_ts = 0.0;   // epoch seconds
    double departure_ts = 0.0;
};

// ---- calendar helpers (proleptic Gregorian, UTC) ----

inline std::int64_t days_from_civil(int y, int m, int d) {
    y -= m <= 2;
    const std::int64_t era = (y >= 0 ? y : y - 399) / 400;
    const unsigned yoe = static_cast<unsigned>(y - era * 400);
    const unsigned doy = (153u * (m + (m > 2 ? -3 : 9)) + 2u) / 5u + d - 1;
    const unsigned doe = yoe * 365 + yoe / 4 - yoe / 100 + doy;
    return era * 146097 + static_cast<std::int64_t>(doe) - 719468;
}

inline void civil_from_days(std::int64_t z, int& y, int& m, int& d) {
    z += 719468;
    const std::int64_t era = (z >= 0 ? z : z - 146096) / 146097;
    const unsigned doe = static_cast<unsigned>(z - era * 146097);
    const unsigned yoe = (doe - doe / 1460 + doe / 36524 - doe / 146096) / 365;
    const int yy = static_cast<int>(yoe) + static_cast<int>(era) * 400;
    const unsigned doy = doe - (365 * yoe + yoe / 4 - yoe / 100);
    const unsigned mp = (5 * doy + 2) / 153;
    d = static_cast<int>(doy - (153 * mp + 2) / 5 + 1);
    m = static_cast<int>(mp + (mp < 10 ? 3 : -9));
    y = yy + (m <= 2);
}

inline std::string format_date(std::int64_t days_since_epoch) {
    int y, m, d;
    civil_from_days(days_since_epoch, y, m, d);
    char buf[16];
    std::snprintf(buf, sizeof buf, "%04d-%02d-%02d", y, m, d);
    return buf;
}

inline std::optional<std::int64_t> parse_date(const std::string& s) {
    int y, m, d;
    char extra;
    if (std::sscanf(s.c_str(), "%d-%d-%d%c", &y, &m, &d, &extra) != 3) return std::nullopt;
    if (m < 1 || m > 12 || d < 1 || d > 31) return std::nullopt;
    return days_from_civil(y, m, d);
}

/// Accepts epoch seconds (possibly fractional) or ISO-8601
/// "YYYY-MM-DD[T ]HH:MM:SS[.frac][Z]" treated as UTC.
inline std::optional<double> parse_timestamp(const std::string& s) {
    if (s.empty()) return std::nullopt;
    {
        char* end = nullptr;
        double v = std::strtod(s.c_str(), &end);
        if (end && *end == '\0' && end != s.c_str()) return v;
    }
    int y, mo, d, h, mi;
    double sec;
    char sep;
    int n = std::sscanf(s.c_str(), "%d-%d-%d%c%d:%d:%lf", &y, &mo, &d, &sep, &h, &mi, &sec);
    if (n != 7 || (sep != 'T' && sep != ' ')) return std::nullopt;
    if (mo < 1 || mo > 12 || d < 1 || d > 31 || h < 0 || h > 23 || mi < 0 || mi > 59 ||
        sec < 0.0 || sec >= 61.0) {
        return std::nullopt;
    }
    return static_cast<double>(days_from_civil(y, mo, d)) * 86400.0 + h * 3600.0 + mi * 60.0 +
           sec;
}

// ---- stop-event CSV ----

inline constexpr const char* kStopEventHeader =
    "route_id,service_date,trip_index,stop_index,arrival_ts,departure_ts";

inline std::vector<std::string> split_csv_line(const std::string& line) {
    std::vector<std::string> fields;
    std::string cur;
    for (char ch : line) {
        if (ch == ',') {
            fields.push_back(cur);
            cur.clear();
        } else if (ch != '\r') {
            cur.push_back(ch);
        }
    }
    fields.push_back(cur);
    return fields;
}

struct RejectedRecord {
    std::size_t line_number = 0;
    std::string reason;
    std::string text;
};

struct StopEventParse {
    std::vector<StopEvent> events;
    std::vector<RejectedRecord> rejected;
};

/// Parses the stop-event CSV. A bad header or a stream with no parseable
/// events is an error; individual malformed lines are rejected and reported.
inline StopEventParse parse_stop_events(std::istream& in) {
    std::string line;
    if (!std::getline(in, line)) throw IoError("stop-event CSV: empty input");
    while (!line.empty() && (line.back() == '\r' || line.back() == '\n')) line.pop_back();
    if (line != kStopEventHeader) {
        throw IoError(std::string("stop-event CSV: bad header, expected '") + kStopEventHeader +
                      "'");
    }

    StopEventParse out;
    std::size_t line_number = 1;
    while (std::getline(in, line)) {
        ++line_number;
        if (line.empty() || line == "\r") continue;
        auto fields = split_csv_line(line);
        auto reject = [&](const std::string& why) {
            out.rejected.push_back({line_number, why, line});
        };
        if (fields.size() != 6) {
            reject("expected 6 fields, got " + std::to_string(fields.size()));
            continue;
        }
        StopEvent ev;
        ev.route_id = fields[0];
        ev.service_date = fields[1];
        if (!parse_date(ev.service_date)) {
            reject("bad service_date '" + fields[1] + "'");
            continue;
        }
        try {
            ev.trip_index = std::stoi(fields[2]);
            ev.stop_index = std::stoi(fields[3]);
        } catch (const std::exception&) {
            reject("bad trip/stop index");
            continue;
        }
        if (ev.trip_index < 0 || ev.stop_index < 0) {
            reject("negative trip/stop index");
            continue;
        }
        auto arr = parse_timestamp(fields[4]);
        auto dep = parse_timestamp(fields[5]);
        if (!arr || !dep) {
            reject("bad timestamp");
            continue;
        }
        ev.arrival_ts = *arr;
        ev.departure_ts = *dep;
        if (ev.departure_ts < ev.arrival_ts) {
            reject("departure before arrival");
            continue;
        }
        out.events.push_back(std::move(ev));
    }
    if (out.events.empty()) throw IoError("stop-event CSV: no valid event records");
    return out;
}

inline void write_stop_events(std::ostream& out, const std::vector<StopEvent>& events) {
    out << kStopEventHeader << '\n';
    char buf[64];
    for (const auto& ev : events) {
        std::snprintf(buf, sizeof buf, "%.3f,%.3f", ev.arrival_ts, ev.departure_ts);
        out << ev.route_id << ',' << ev.service_date << ',' << ev.trip_index << ','
            << ev.stop_index << ',' << buf << '\n';
    }
}

}  // namespace mcnn

#endif  // MCNN_STOP_EVENTS_HPP
