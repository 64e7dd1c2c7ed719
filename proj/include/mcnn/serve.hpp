#ifndef MCNN_SERVE_HPP
#define MCNN_SERVE_HPP

#include <algorithm>
#include <deque>
#include <map>
#include <memory>
#include <mutex>
#include <string>
#include <utility>
#include <vector>

#include <json.hpp>

#include "mcnn/error.hpp"
#include "mcnn/session.hpp"

namespace mcnn {

/// JSON-lines session server: one request and one response per line, shared
/// by the standard-stream and TCP transports.
///
/// Requests:  {"cmd":"start"|"obs"|"end","trip":id[,"segment":k,"seconds":t]}
/// Responses: {"trip":id,"eta":[{"segment":k,"seconds":s,"arrival_offset":a},..]}
///            or {"error":category[,"detail":text]}
///
/// Completed trips (all segments observed before "end") roll into the
/// conditioning context for the next trips; the server never mixes days, so
/// run one server per service day.
class SessionServer {
public:
    explicit SessionServer(std::shared_ptr<const ModelBundle> bundle,
                           std::vector<TripObservation> initial_context = {})
        : bundle_(std::move(bundle)) {
        for (auto& trip : initial_context) context_.push_back(std::move(trip));
        trim_context();
    }

    /// Handles one request line; always returns exactly one response line.
    std::string handle_line(const std::string& line) {
        std::lock_guard<std::mutex> lock(mutex_);
        nlohmann::json request;
        try {
            request = nlohmann::json::parse(line);
        } catch (const nlohmann::json::exception&) {
            return error_response("parse", "request is not valid JSON");
        }
        try {
            if (!request.is_object() || !request.contains("cmd") || !request.contains("trip")) {
                return error_response("protocol", "need cmd and trip fields");
            }
            const std::string cmd = request["cmd"].get<std::string>();
            const std::string trip = trip_id(request["trip"]);
            if (cmd == "start") return handle_start(trip);
            if (cmd == "obs") return handle_obs(trip, request);
            if (cmd == "end") return handle_end(trip);
            return error_response("protocol", "unknown cmd '" + cmd + "'");
        } catch (const nlohmann::json::exception& e) {
            return error_response("protocol", e.what());
        } catch (const SequencingError& e) {
            return error_response("sequencing", e.what());
        } catch (const DomainError& e) {
            return error_response("domain", e.what());
        } catch (const std::exception& e) {
            return error_response("internal", e.what());
        }
    }

    std::size_t live_trips() const {
        std::lock_guard<std::mutex> lock(mutex_);
        return trips_.size();
    }

private:
    struct LiveTrip {
        TripSession session;
        std::vector<double> observed;
    };

    static std::string trip_id(const nlohmann::json& v) {
        if (v.is_string()) return v.get<std::string>();
        return v.dump();
    }

    static std::string error_response(const std::string& category, const std::string& detail) {
        nlohmann::json j;
        j["error"] = category;
        j["detail"] = detail;
        return j.dump();
    }

    std::string eta_response(const std::string& trip, const TripSession& session) const {
        nlohmann::json j;
        j["trip"] = trip;
        j["eta"] = nlohmann::json::array();
        for (const auto& p : session.predictions()) {
            j["eta"].push_back({{"segment", p.segment},
                                {"seconds", p.seconds},
                                {"arrival_offset", p.arrival_offset}});
        }
        return j.dump();
    }

    std::string handle_start(const std::string& trip) {
        if (trips_.count(trip)) {
            return error_response("exists", "trip '" + trip + "' already started");
        }
        std::vector<TripObservation> context(context_.begin(), context_.end());
        auto [it, ok] = trips_.emplace(
            trip, LiveTrip{TripSession(bundle_, std::move(context)), {}});
        return eta_response(trip, it->second.session);
    }

    std::string handle_obs(const std::string& trip, const nlohmann::json& request) {
        auto it = trips_.find(trip);
        if (it == trips_.end()) {
            return error_response("unknown trip", "no session for '" + trip + "'");
        }
        if (!request.contains("segment") || !request.contains("seconds")) {
            return error_response("protocol", "obs needs segment and seconds");
        }
        const int segment = request["segment"].get<int>();
        const double seconds = request["seconds"].get<double>();
        it->second.session.observe(segment, seconds);
        it->second.observed.push_back(seconds);
        return eta_response(trip, it->second.session);
    }

    std::string handle_end(const std::string& trip) {
        auto it = trips_.find(trip);
        if (it == trips_.end()) {
            return error_response("unknown trip", "no session for '" + trip + "'");
        }
        const int K = bundle_->checkpoint.model_config.segments;
        if (static_cast<int>(it->second.observed.size()) == K) {
            TripObservation obs;
            obs.seconds = it->second.observed;
            context_.push_back(std::move(obs));
            trim_context();
        }
        trips_.erase(it);
        nlohmann::json j;
        j["trip"] = trip;
        j["eta"] = nlohmann::json::array();
        return j.dump();
    }

    void trim_context() {
        const std::size_t keep =
            static_cast<std::size_t>(std::max(0, bundle_->checkpoint.model_config.window - 1));
        while (context_.size() > keep) context_.pop_front();
    }

    mutable std::mutex mutex_;
    std::shared_ptr<const ModelBundle> bundle_;
    std::deque<TripObservation> context_;
    std::map<std::string, LiveTrip> trips_;
};

}  // namespace mcnn

#endif  // MCNN_SERVE_HPP
