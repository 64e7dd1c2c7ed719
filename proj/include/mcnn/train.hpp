#ifndef MCNN_TRAIN_HPP
#define MCNN_TRAIN_HPP

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <limits>
#include <numeric>
#include <optional>
#include <ostream>
#include <span>
#include <utility>
#include <vector>

#include "mcnn/checkpoint.hpp"
#include "mcnn/error.hpp"
#include "mcnn/loss.hpp"
#include "mcnn/model.hpp"
#include "mcnn/optimizer.hpp"
#include "mcnn/quantizer.hpp"
#include "mcnn/rng.hpp"
#include "mcnn/windows.hpp"

namespace mcnn {

struct TrainConfig {
    int batch_size = 32;
    double learning_rate = 0.01;
    int max_epochs = 200;
    int early_stop_patience = 10;
    double validation_fraction = 0.1;
    std::uint64_t seed = 0;
    double rms_decay = 0.9;
    double rms_epsilon = 1e-8;

    void validate() const {
        if (batch_size < 1) throw ConfigError("train: batch size must be >= 1");
        if (learning_rate <= 0.0) throw ConfigError("train: learning rate must be positive");
        if (max_epochs < 1) throw ConfigError("train: max_epochs must be >= 1");
        if (early_stop_patience < 1) throw ConfigError("train: patience must be >= 1");
        if (validation_fraction <= 0.0 || validation_fraction >= 1.0) {
            throw ConfigError("train: validation fraction must be in (0, 1)");
        }
    }
};

struct TrainResult {
    Checkpoint checkpoint;
    bool diverged = false;
    int best_epoch = -1;  // -1 when no validation split existed
};

/// Argmax class per cell under teacher forcing: every prediction is
/// conditioned on the true raster-causal context, one forward pass total.
inline std::vector<int> argmax_classes(const MaskCnn& model, const std::vector<int>& filled) {
    const FeatureMap logits = model.forward(model.scale_input(filled));
    const int C = logits.channels;
    const std::size_t cells = static_cast<std::size_t>(logits.rows) * logits.cols;
    std::vector<int> best(cells, 0);
    for (std::size_t cell = 0; cell < cells; ++cell) {
        double top = logits.data[cell];
        for (int ch = 1; ch < C; ++ch) {
            const double v = logits.data[ch * cells + cell];
            if (v > top) {
                top = v;
                best[cell] = ch;
            }
        }
    }
    return best;
}

/// Mean absolute percentage error of one-step argmax predictions over the
/// valid cells of the given windows, in percent, in the dequantized domain.
inline double windows_one_step_mape(const MaskCnn& model,
                                    std::span<const QuantizedWindow> windows,
                                    const std::vector<int>& medians,
                                    const Quantizer& quantizer) {
    double sum = 0.0;
    std::size_t count = 0;
    for (const auto& w : windows) {
        const auto predicted = argmax_classes(model, fill_with_medians(w, medians));
        for (std::size_t i = 0; i < w.validity.size(); ++i) {
            if (!w.validity[i]) continue;
            const double actual = quantizer.dequantize(w.classes[i]);
            const double pred = quantizer.dequantize(predicted[i]);
            sum += std::fabs(pred - actual) / actual;
            ++count;
        }
    }
    return count == 0 ? std::numeric_limits<double>::quiet_NaN()
                      : 100.0 * sum / static_cast<double>(count);
}

namespace detail {

struct OptimizerBank {
    std::vector<RmsPropState> weight_states;
    std::vector<RmsPropState> bias_states;

    OptimizerBank(const MaskCnn& model, const TrainConfig& tc) {
        for (const auto& layer : model.layers()) {
            weight_states.emplace_back(layer.params.weights.size(), tc.learning_rate,
                                       tc.rms_decay, tc.rms_epsilon);
            bias_states.emplace_back(layer.params.bias.size(), tc.learning_rate, tc.rms_decay,
                                     tc.rms_epsilon);
        }
    }
};

struct GradBank {
    std::vector<LayerGrads> grads;

    explicit GradBank(const MaskCnn& model) {
        for (const auto& layer : model.layers()) {
            grads.push_back(LayerGrads{std::vector<double>(layer.params.weights.size(), 0.0),
                                       std::vector<double>(layer.params.bias.size(), 0.0)});
        }
    }

    void zero() {
        for (auto& g : grads) {
            std::fill(g.weights.begin(), g.weights.end(), 0.0);
            std::fill(g.bias.begin(), g.bias.end(), 0.0);
        }
    }

    void add(const std::vector<LayerGrads>& delta) {
        for (std::size_t l = 0; l < grads.size(); ++l) {
            for (std::size_t i = 0; i < grads[l].weights.size(); ++i) {
                grads[l].weights[i] += delta[l].weights[i];
            }
            for (std::size_t i = 0; i < grads[l].bias.size(); ++i) {
                grads[l].bias[i] += delta[l].bias[i];
            }
        }
    }
};

}  // namespace detail

/// Minimizes the masked C-way cross entropy of every cell given its
/// raster-causal context. Deterministic for a fixed seed: initialization,
/// shuffling and reduction orders are all fixed.
inline TrainResult train(const std::vector<QuantizedWindow>& windows,
                         const ModelConfig& model_config, const TrainConfig& train_config,
                         const Quantizer& quantizer, std::ostream* log = nullptr,
                         std::optional<std::pair<MaskSpec, MaskSpec>> custom_masks = std::nullopt) {
    train_config.validate();
    if (windows.empty()) throw ConfigError("train: no training windows");
    ModelConfig mc = model_config;
    if (mc.segments == 0) mc.segments = windows.front().cols;
    mc.validate();
    if (mc.classes != quantizer.classes) {
        throw ConfigError("train: model classes and quantizer classes differ");
    }
    for (const auto& w : windows) {
        if (w.rows != mc.window || w.cols != mc.segments) {
            throw ConfigError("train: window shape does not match model config");
        }
    }

    // chronological tail of the windows becomes the validation split
    const std::size_t n = windows.size();
    std::size_t n_val = 0;
    if (n >= 2) {
        n_val = static_cast<std::size_t>(std::llround(train_config.validation_fraction *
                                                      static_cast<double>(n)));
        n_val = std::clamp<std::size_t>(n_val, 1, n - 1);
    }
    const std::size_t n_train = n - n_val;
    const std::span<const QuantizedWindow> train_span(windows.data(), n_train);
    const std::span<const QuantizedWindow> val_span(windows.data() + n_train, n_val);

    const std::vector<int> medians = segment_median_classes(train_span, mc.segments, mc.classes);

    MaskCnn model(mc, train_config.seed, custom_masks);
    detail::OptimizerBank optim(model, train_config);
    detail::GradBank batch_grads(model);

    std::vector<std::vector<int>> filled(n_train);
    std::vector<std::size_t> valid_counts(n_train);
    for (std::size_t i = 0; i < n_train; ++i) {
        filled[i] = fill_with_medians(windows[i], medians);
        valid_counts[i] = 0;
        for (auto v : windows[i].validity) valid_counts[i] += v ? 1 : 0;
    }

    Rng shuffle_rng(train_config.seed ^ 0xa5a5a5a5a5a5a5a5ull);
    std::vector<std::size_t> order(n_train);
    std::iota(order.begin(), order.end(), std::size_t{0});

    TrainResult result;
    std::vector<ConvLayer> last_good = model.layers();
    std::vector<ConvLayer> best_layers = model.layers();
    double best_val = std::numeric_limits<double>::infinity();
    int best_epoch = -1;
    int since_best = 0;
    std::vector<TrainEpoch> history;

    for (int epoch = 0; epoch < train_config.max_epochs && !result.diverged; ++epoch) {
        shuffle_rng.shuffle(order);
        double epoch_loss_sum = 0.0;
        std::size_t epoch_valid = 0;

        for (std::size_t begin = 0; begin < n_train && !result.diverged;
             begin += train_config.batch_size) {
            const std::size_t end =
                std::min(n_train, begin + static_cast<std::size_t>(train_config.batch_size));
            std::size_t batch_valid = 0;
            for (std::size_t i = begin; i < end; ++i) batch_valid += valid_counts[order[i]];
            if (batch_valid == 0) continue;

            batch_grads.zero();
            double batch_loss_sum = 0.0;
            bool bad = false;
            try {
                for (std::size_t i = begin; i < end; ++i) {
                    const auto& w = windows[order[i]];
                    if (valid_counts[order[i]] == 0) continue;
                    const FeatureMap input = model.scale_input(filled[order[i]]);
                    MaskCnn::Trace trace = model.forward_trace(input);
                    CrossEntropyResult ce =
                        softmax_cross_entropy(trace.logits, w.classes, w.validity);
                    if (!std::isfinite(ce.loss_sum)) {
                        bad = true;
                        break;
                    }
                    batch_loss_sum += ce.loss_sum;
                    // rescale the per-window mean gradient onto the batch mean
                    const double rescale = static_cast<double>(ce.valid_count) /
                                           static_cast<double>(batch_valid);
                    for (double& g : ce.logit_grad.data) g *= rescale;
                    batch_grads.add(model.backward(input, trace, ce.logit_grad));
                }
            } catch (const NumericError&) {
                bad = true;  // exploding activations count as divergence
            }

            if (!bad) {
                try {
                    auto& layers = model.layers();
                    for (std::size_t l = 0; l < layers.size(); ++l) {
                        const std::string path = "layer" + std::to_string(l);
                        rmsprop_step(layers[l].params.weights, batch_grads.grads[l].weights,
                                     optim.weight_states[l], path + ".weight");
                        rmsprop_step(layers[l].params.bias, batch_grads.grads[l].bias,
                                     optim.bias_states[l], path + ".bias");
                    }
                } catch (const NumericError&) {
                    bad = true;
                }
            }
            if (bad) {
                model.layers() = last_good;
                result.diverged = true;
                break;
            }
            epoch_loss_sum += batch_loss_sum;
            epoch_valid += batch_valid;
        }
        if (result.diverged) break;

        TrainEpoch entry;
        entry.train_loss =
            epoch_valid ? epoch_loss_sum / static_cast<double>(epoch_valid)
                        : std::numeric_limits<double>::quiet_NaN();
        entry.val_mape = std::numeric_limits<double>::quiet_NaN();
        if (n_val) {
            try {
                entry.val_mape = windows_one_step_mape(model, val_span, medians, quantizer);
            } catch (const NumericError&) {
                model.layers() = last_good;
                result.diverged = true;
                break;
            }
        }
        history.push_back(entry);
        if (log) {
            (*log) << "epoch " << epoch + 1 << "  loss " << entry.train_loss << " nats/cell";
            if (n_val) (*log) << "  val MAPE " << entry.val_mape << "%";
            (*log) << '\n';
        }

        last_good = model.layers();
        if (n_val) {
            if (entry.val_mape < best_val) {
                best_val = entry.val_mape;
                best_layers = model.layers();
                best_epoch = epoch;
                since_best = 0;
            } else if (++since_best >= train_config.early_stop_patience) {
                break;
            }
        }
    }

    Checkpoint cp;
    cp.model_config = mc;
    cp.quantizer = quantizer;
    cp.layers = n_val && best_epoch >= 0 && !result.diverged ? std::move(best_layers)
                                                             : model.layers();
    cp.learning_rate = train_config.learning_rate;
    cp.rms_decay = train_config.rms_decay;
    cp.rms_epsilon = train_config.rms_epsilon;
    cp.median_classes = medians;
    cp.history = std::move(history);
    cp.seed = train_config.seed;
    result.checkpoint = std::move(cp);
    result.best_epoch = best_epoch;
    return result;
}

}  // namespace mcnn

#endif  // MCNN_TRAIN_HPP
