#ifndef MCNN_SYNTHETIC_HPP
#define MCNN_SYNTHETIC_HPP

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <string>
#include <vector>

#include "mcnn/error.hpp"
#include "mcnn/rng.hpp"
#include "mcnn/stop_events.hpp"

namespace mcnn {

/// Synthetic route generator for desk-scale experiments.
///
/// t[trip][k] = base_k * rush[trip] * exp(a_trip + g[trip][k]) + noise, where
/// `a` is a per-trip congestion level shared by all segments and `g` is a
/// per-segment congestion series; both follow an order-1 autoregression with
/// coefficient `trip_persistence` across the trips of a day. Innovation
/// scales are proportional to the persistence, so persistence 0 degenerates
/// to base * rush + noise exactly. Missing data is produced by dropping stop
/// events with probability 1 - sqrt(1 - missing_rate), which makes each
/// matrix cell missing with probability missing_rate.
struct SyntheticConfig {
    std::string route_id = "R1";
    int segments = 20;
    int trips_per_day = 40;
    int days = 90;
    std::string start_date = "2024-03-01";
    std::vector<double> base_profile;     // per-segment seconds; size K
    std::vector<double> rush_multiplier;  // per trip slot; size trips_per_day
    double trip_persistence = 0.0;        // rho in [0, 1)
    double congestion_scale = 0.15;       // log-space spread of the AR factors
    double noise_sd = 0.0;                // additive observation noise, seconds
    double missing_rate = 0.0;            // fraction of cells dropped, [0, 1)
    std::uint64_t seed = 0;
    double headway_s = 1200.0;            // trip start spacing
    double first_departure_s = 6 * 3600.0;  // seconds after midnight
    double stop_dwell_s = 15.0;           // departure lag at non-origin stops

    void validate() const {
        if (segments < 1 || trips_per_day < 1 || days < 1) {
            throw ConfigError("synthetic: segments, trips_per_day and days must be >= 1");
        }
        if (base_profile.size() != static_cast<std::size_t>(segments)) {
            throw ConfigError("synthetic: base_profile must have one entry per segment");
        }
        if (rush_multiplier.size() != static_cast<std::size_t>(trips_per_day)) {
            throw ConfigError("synthetic: rush_multiplier must have one entry per trip slot");
        }
        for (double b : base_profile) {
            if (b <= 0.0) throw ConfigError("synthetic: base profile must be positive");
        }
        for (double r : rush_multiplier) {
            if (r <= 0.0) throw ConfigError("synthetic: rush multipliers must be positive");
        }
        if (trip_persistence < 0.0 || trip_persistence >= 1.0) {
            throw ConfigError("synthetic: trip_persistence must be in [0, 1)");
        }
        if (noise_sd < 0.0) throw ConfigError("synthetic: noise_sd must be >= 0");
        if (missing_rate < 0.0 || missing_rate >= 1.0) {
            throw ConfigError("synthetic: missing_rate must be in [0, 1)");
        }
        if (congestion_scale < 0.0) throw ConfigError("synthetic: congestion_scale must be >= 0");
        if (!parse_date(start_date)) throw ConfigError("synthetic: bad start_date");
        if (headway_s <= 0.0) throw ConfigError("synthetic: headway must be positive");
    }

    /// Flat base profile helper.
    static std::vector<double> flat_profile(int segments, double seconds) {
        return std::vector<double>(static_cast<std::size_t>(segments), seconds);
    }

    /// Two-peak rush profile: `peak` at morning slots and late-afternoon
    /// slots, 1.0 elsewhere, with one-slot shoulders.
    static std::vector<double> two_peak_rush(int trips_per_day, double peak) {
        std::vector<double> rush(static_cast<std::size_t>(trips_per_day), 1.0);
        auto apply = [&](int center) {
            for (int s = center - 3; s <= center + 3; ++s) {
                if (s < 0 || s >= trips_per_day) continue;
                double w = 1.0 - std::abs(s - center) / 4.0;
                rush[s] = std::max(rush[s], 1.0 + (peak - 1.0) * w);
            }
        };
        apply(trips_per_day / 4);
        apply(3 * trips_per_day / 4);
        return rush;
    }
};

/// Deterministic for a given config and seed: the value stream and the
/// drop stream use separate generators, so missing_rate does not perturb
/// the generated travel times.
inline std::vector<StopEvent> generate_synthetic(const SyntheticConfig& config) {
    config.validate();
    const int K = config.segments;
    const double rho = config.trip_persistence;
    // innovation scales proportional to rho: persistence 0 => no congestion
    const double shared_sd = config.congestion_scale * rho;
    const double segment_sd = 0.6 * config.congestion_scale * rho;
    const double stationary = rho < 1.0 ? 1.0 / std::sqrt(1.0 - rho * rho) : 1.0;

    Rng values(config.seed);
    Rng drops(config.seed ^ 0x9e3779b97f4a7c15ull);
    const double drop_p =
        config.missing_rate > 0.0 ? 1.0 - std::sqrt(1.0 - config.missing_rate) : 0.0;

    const std::int64_t day0 = *parse_date(config.start_date);
    std::vector<StopEvent> events;
    events.reserve(static_cast<std::size_t>(config.days) * config.trips_per_day * (K + 1));

    std::vector<double> g(static_cast<std::size_t>(K));
    for (int d = 0; d < config.days; ++d) {
        const std::string date = format_date(day0 + d);
        const double midnight = static_cast<double>(day0 + d) * 86400.0;
        // fresh congestion state each day, drawn from the stationary law
        double a = values.normal(0.0, shared_sd * stationary);
        for (int k = 0; k < K; ++k) g[k] = values.normal(0.0, segment_sd * stationary);

        for (int trip = 0; trip < config.trips_per_day; ++trip) {
            if (trip > 0) {
                a = rho * a + values.normal(0.0, shared_sd);
                for (int k = 0; k < K; ++k) g[k] = rho * g[k] + values.normal(0.0, segment_sd);
            }
            const double start =
                midnight + config.first_departure_s + trip * config.headway_s;

            StopEvent origin;
            origin.route_id = config.route_id;
            origin.service_date = date;
            origin.trip_index = trip;
            origin.stop_index = 0;
            origin.arrival_ts = start;
            origin.departure_ts = start;
            events.push_back(origin);

            double clock = start;
            for (int k = 0; k < K; ++k) {
                double t = config.base_profile[k] * config.rush_multiplier[trip] *
                           std::exp(a + g[k]);
                if (config.noise_sd > 0.0) t += values.normal(0.0, config.noise_sd);
                t = std::max(t, 1.0);
                clock += t;
                StopEvent ev;
                ev.route_id = config.route_id;
                ev.service_date = date;
                ev.trip_index = trip;
                ev.stop_index = k + 1;
                ev.arrival_ts = clock;
                ev.departure_ts = clock + config.stop_dwell_s;
                events.push_back(ev);
            }
        }
    }

    if (drop_p > 0.0) {
        std::vector<StopEvent> kept;
        kept.reserve(events.size());
        for (auto& ev : events) {
            if (drops.uniform() < drop_p) continue;
            kept.push_back(std::move(ev));
        }
        events = std::move(kept);
    }
    return events;
}

}  // namespace mcnn

#endif  // MCNN_SYNTHETIC_HPP
