#ifndef MCNN_SESSION_HPP
#define MCNN_SESSION_HPP

#include <algorithm>
#include <cstdint>
#include <memory>
#include <string>
#include <utility>
#include <vector>

#include "mcnn/checkpoint.hpp"
#include "mcnn/error.hpp"
#include "mcnn/loss.hpp"
#include "mcnn/model.hpp"
#include "mcnn/rng.hpp"
#include "mcnn/windows.hpp"

namespace mcnn {

/// Checkpoint plus the model rebuilt from it, shared read-only across
/// concurrent sessions.
struct ModelBundle {
    Checkpoint checkpoint;
    MaskCnn model;

    explicit ModelBundle(Checkpoint cp)
        : checkpoint(std::move(cp)), model(checkpoint.to_model()) {}
};

/// One completed trip used as conditioning context.
struct TripObservation {
    std::vector<double> seconds;
    std::vector<std::uint8_t> missing;  // empty means fully observed
};

struct SegmentPrediction {
    int segment = 0;          // 1-based
    int predicted_class = 0;
    double seconds = 0.0;
    double arrival_offset = 0.0;  // cumulative seconds until the stop is reached
};

enum class RolloutMode { Argmax, Sample };

/// Live autoregressive ETA state for one trip in progress. Observations must
/// arrive in segment order; every observation advances the prefix and
/// regenerates the predictions for the remaining segments.
class TripSession {
public:
    TripSession(std::shared_ptr<const ModelBundle> bundle, std::vector<TripObservation> context,
                RolloutMode mode = RolloutMode::Argmax, std::uint64_t sample_seed = 0)
        : bundle_(std::move(bundle)), mode_(mode), sample_rng_(sample_seed) {
        const auto& cfg = bundle_->checkpoint.model_config;
        const auto& q = bundle_->checkpoint.quantizer;
        const auto& medians = bundle_->checkpoint.median_classes;
        const int H = cfg.window;
        const int K = cfg.segments;
        for (const auto& trip : context) {
            if (static_cast<int>(trip.seconds.size()) != K) {
                throw ConfigError("session: context trip has " +
                                  std::to_string(trip.seconds.size()) + " segments, model needs " +
                                  std::to_string(K));
            }
        }

        grid_.assign(static_cast<std::size_t>(H) * K, 0);
        // most recent H-1 completed trips, top-padded with the training medians
        const int ctx_rows = H - 1;
        const int have = std::min<int>(ctx_rows, static_cast<int>(context.size()));
        for (int r = 0; r < ctx_rows; ++r) {
            const int from_end = ctx_rows - r;  // rows count back from the current trip
            const TripObservation* trip =
                from_end <= have ? &context[context.size() - from_end] : nullptr;
            for (int k = 0; k < K; ++k) {
                int cls = medians[k];
                if (trip && (trip->missing.empty() || !trip->missing[k])) {
                    cls = q.quantize_clamp(trip->seconds[k]);
                }
                grid_[static_cast<std::size_t>(r) * K + k] = cls;
            }
        }
        for (int k = 0; k < K; ++k) {
            grid_[static_cast<std::size_t>(H - 1) * K + k] = medians[k];
        }
        predict_remaining();
    }

    const std::vector<SegmentPrediction>& predictions() const { return predictions_; }
    int current_stop() const { return current_stop_; }
    const ModelBundle& bundle() const { return *bundle_; }

    /// Records the observed travel time of segment k (1-based, in order) and
    /// regenerates the predictions for segments k+1..K.
    void observe(int segment, double seconds) {
        const int K = bundle_->checkpoint.model_config.segments;
        if (seconds < 0.0) throw DomainError("observe: negative travel time");
        if (segment != current_stop_ + 1) {
            throw SequencingError("observe: expected segment " +
                                  std::to_string(current_stop_ + 1) + ", got " +
                                  std::to_string(segment));
        }
        if (segment > K) throw SequencingError("observe: trip already complete");
        const int H = bundle_->checkpoint.model_config.window;
        grid_[static_cast<std::size_t>(H - 1) * K + (segment - 1)] =
            bundle_->checkpoint.quantizer.quantize_clamp(seconds);
        current_stop_ = segment;
        predict_remaining();
    }

    /// Greedy rollout: for each remaining segment in order, run the network,
    /// pick the class (argmax by default, softmax draw in sample mode), write
    /// it back, and continue. Cells past the one being predicted hold the
    /// deterministic median fill; by causality they cannot influence it.
    void predict_remaining() {
        const auto& cfg = bundle_->checkpoint.model_config;
        const auto& q = bundle_->checkpoint.quantizer;
        const int H = cfg.window;
        const int K = cfg.segments;
        predictions_.clear();
        for (int k = current_stop_; k < K; ++k) {
            grid_[static_cast<std::size_t>(H - 1) * K + k] =
                bundle_->checkpoint.median_classes[k];
        }
        double cumulative = 0.0;
        for (int k = current_stop_; k < K; ++k) {
            const FeatureMap logits = bundle_->model.forward(bundle_->model.scale_input(grid_));
            const int cls = select_class(logits, H - 1, k);
            grid_[static_cast<std::size_t>(H - 1) * K + k] = cls;
            SegmentPrediction p;
            p.segment = k + 1;
            p.predicted_class = cls;
            p.seconds = q.dequantize(cls);
            cumulative += p.seconds;
            p.arrival_offset = cumulative;
            predictions_.push_back(p);
        }
    }

private:
    int select_class(const FeatureMap& logits, int row, int col) {
        const auto probs = softmax_at(logits, row, col);
        if (mode_ == RolloutMode::Sample) {
            double r = sample_rng_.uniform();
            double cum = 0.0;
            for (std::size_t c = 0; c < probs.size(); ++c) {
                cum += probs[c];
                if (r < cum) return static_cast<int>(c);
            }
            return static_cast<int>(probs.size()) - 1;
        }
        int best = 0;
        for (std::size_t c = 1; c < probs.size(); ++c) {
            if (probs[c] > probs[best]) best = static_cast<int>(c);
        }
        return best;
    }

    std::shared_ptr<const ModelBundle> bundle_;
    RolloutMode mode_;
    Rng sample_rng_;
    std::vector<int> grid_;  // H x K class indices: context rows + current trip
    std::vector<SegmentPrediction> predictions_;
    int current_stop_ = 0;
};

inline TripSession start_session(std::shared_ptr<const ModelBundle> bundle,
                                 std::vector<TripObservation> context,
                                 RolloutMode mode = RolloutMode::Argmax,
                                 std::uint64_t sample_seed = 0) {
    return TripSession(std::move(bundle), std::move(context), mode, sample_seed);
}

/// Conditional class distribution at one window cell: softmax of the logits.
inline std::vector<double> predict_position(const ModelBundle& bundle,
                                            const QuantizedWindow& window, int row, int col) {
    const auto& cfg = bundle.checkpoint.model_config;
    if (window.rows != cfg.window || window.cols != cfg.segments) {
        throw ConfigError("predict_position: window shape does not match model");
    }
    if (row < 0 || row >= window.rows || col < 0 || col >= window.cols) {
        throw DomainError("predict_position: cell outside window");
    }
    const auto filled = fill_with_medians(window, bundle.checkpoint.median_classes);
    const FeatureMap logits = bundle.model.forward(bundle.model.scale_input(filled));
    return softmax_at(logits, row, col);
}

}  // namespace mcnn

#endif  // MCNN_SESSION_HPP
