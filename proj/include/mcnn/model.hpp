#ifndef MCNN_MODEL_HPP
#define MCNN_MODEL_HPP

#include <cmath>
#include <cstdint>
#include <optional>
#include <string>
#include <utility>
#include <vector>

#include "mcnn/activation.hpp"
#include "mcnn/conv.hpp"
#include "mcnn/error.hpp"
#include "mcnn/mask.hpp"
#include "mcnn/rng.hpp"
#include "mcnn/tensor.hpp"

namespace mcnn {

/// Architecture hyperparameters. Paddings are always derived from the filter
/// sizes; they are never free parameters.
struct ModelConfig {
    int first_filter = 5;    // F, mask-A layer
    int inner_filter = 5;    // L, mask-B layers
    int first_channels = 64;  // N
    int inner_channels = 64;  // n
    int inner_depth = 6;      // number of mask-B layers
    int classes = 512;        // C
    int mask_variant = 2;     // 1..3; 0 marks masks supplied from a file
    int window = 10;          // H
    int segments = 0;         // K, fixed by the route

    int first_padding() const { return (first_filter - 1) / 2; }
    int inner_padding() const { return (inner_filter - 1) / 2; }
    int conv_layer_count() const { return 1 + inner_depth; }

    void validate() const {
        auto odd = [](int f) { return f >= 3 && f % 2 == 1; };
        if (!odd(first_filter) || !odd(inner_filter)) {
            throw ConfigError("model: filter sizes must be odd and >= 3");
        }
        if (first_channels < 1 || inner_channels < 1) {
            throw ConfigError("model: filter counts must be >= 1");
        }
        if (inner_depth < 1) throw ConfigError("model: inner depth must be >= 1");
        if (classes < 2) throw ConfigError("model: class count must be >= 2");
        if (mask_variant < 0 || mask_variant > 3) {
            throw ConfigError("model: mask variant must be 1..3 (0 marks file-loaded masks)");
        }
        if (window < 1) throw ConfigError("model: window must be >= 1");
        if (segments < 1) throw ConfigError("model: segment count must be set");
    }
};

struct ConvLayer {
    ConvLayerParams params;
    int padding = 0;
};

struct LayerGrads {
    std::vector<double> weights;
    std::vector<double> bias;
};

/// The masked convolutional stack:
///   mask-A F x F (N ch) -> ReLU -> inner_depth x [mask-B L x L (n ch) -> ReLU]
///   -> 1 x 1 conv with C output channels (the logits).
/// With a mask-A first layer, the logits at raster cell p depend only on
/// input cells strictly before p in raster order.
class MaskCnn {
public:
    MaskCnn(ModelConfig config, std::uint64_t seed,
            std::optional<std::pair<MaskSpec, MaskSpec>> custom_masks = std::nullopt)
        : config_(config) {
        config_.validate();
        MaskSpec mask_a, mask_b;
        if (custom_masks) {
            mask_a = custom_masks->first;
            mask_b = custom_masks->second;
            if (mask_a.kind != MaskKind::A || mask_b.kind != MaskKind::B) {
                throw ConfigError("model: custom masks must be one kind A and one kind B");
            }
            if (mask_a.size != config_.first_filter || mask_b.size != config_.inner_filter) {
                throw ConfigError("model: custom mask sizes must match the filter sizes");
            }
            config_.mask_variant = 0;
        } else {
            if (config_.mask_variant == 0) {
                throw ConfigError("model: mask variant 0 requires explicit masks");
            }
            mask_a = build_mask(MaskKind::A, config_.mask_variant, config_.first_filter);
            mask_b = build_mask(MaskKind::B, config_.mask_variant, config_.inner_filter);
        }

        layers_.emplace_back(ConvLayer{ConvLayerParams(config_.first_channels, 1, mask_a),
                                       config_.first_padding()});
        for (int i = 0; i < config_.inner_depth; ++i) {
            const int in_ch = i == 0 ? config_.first_channels : config_.inner_channels;
            layers_.emplace_back(ConvLayer{ConvLayerParams(config_.inner_channels, in_ch, mask_b),
                                           config_.inner_padding()});
        }
        layers_.emplace_back(
            ConvLayer{ConvLayerParams(config_.classes, config_.inner_channels, unit_mask()), 0});

        init_parameters(seed);
    }

    /// Reconstructs a model from explicit layers (checkpoint load path).
    MaskCnn(ModelConfig config, std::vector<ConvLayer> layers)
        : config_(std::move(config)), layers_(std::move(layers)) {
        if (layers_.size() != static_cast<std::size_t>(config_.conv_layer_count()) + 1) {
            throw ConfigError("model: layer count does not match config");
        }
    }

    const ModelConfig& config() const { return config_; }
    std::vector<ConvLayer>& layers() { return layers_; }
    const std::vector<ConvLayer>& layers() const { return layers_; }

    /// Scales a class grid to the network input range [-1, 1].
    FeatureMap scale_input(const std::vector<int>& classes) const {
        const int H = config_.window;
        const int K = config_.segments;
        if (classes.size() != static_cast<std::size_t>(H) * K) {
            throw ConfigError("model: input grid must be H x K");
        }
        FeatureMap input(1, H, K);
        const double denom = static_cast<double>(config_.classes - 1);
        for (std::size_t i = 0; i < classes.size(); ++i) {
            input.data[i] = 2.0 * static_cast<double>(classes[i]) / denom - 1.0;
        }
        return input;
    }

    struct Trace {
        std::vector<FeatureMap> pre_act;   // conv outputs, one per masked layer
        std::vector<FeatureMap> post_act;  // relu outputs, one per masked layer
        FeatureMap logits;
    };

    Trace forward_trace(const FeatureMap& input) const {
        Trace trace;
        const std::size_t masked = layers_.size() - 1;
        trace.pre_act.reserve(masked);
        trace.post_act.reserve(masked);
        const FeatureMap* x = &input;
        for (std::size_t i = 0; i < masked; ++i) {
            trace.pre_act.push_back(masked_conv_forward(*x, layers_[i].params,
                                                        layers_[i].padding));
            trace.post_act.push_back(relu(trace.pre_act.back()));
            x = &trace.post_act.back();
        }
        trace.logits = masked_conv_forward(*x, layers_.back().params, 0);
        return trace;
    }

    /// Logits with C channels for an H x K input.
    FeatureMap forward(const FeatureMap& input) const { return forward_trace(input).logits; }

    /// Per-layer parameter gradients for an upstream gradient on the logits.
    std::vector<LayerGrads> backward(const FeatureMap& input, const Trace& trace,
                                     const FeatureMap& logit_grad) const {
        const std::size_t masked = layers_.size() - 1;
        std::vector<LayerGrads> grads(layers_.size());

        ConvGrads head = masked_conv_backward(trace.post_act.back(), layers_.back().params,
                                              logit_grad);
        grads.back().weights = std::move(head.weights);
        grads.back().bias = std::move(head.bias);

        FeatureMap g = std::move(head.input);
        for (std::size_t i = masked; i-- > 0;) {
            g = relu_backward(trace.pre_act[i], g);
            const FeatureMap& layer_input = i == 0 ? input : trace.post_act[i - 1];
            ConvGrads cg = masked_conv_backward(layer_input, layers_[i].params, g);
            grads[i].weights = std::move(cg.weights);
            grads[i].bias = std::move(cg.bias);
            g = std::move(cg.input);
        }
        return grads;
    }

    std::size_t parameter_count() const {
        std::size_t n = 0;
        for (const auto& layer : layers_) {
            n += layer.params.weights.size() + layer.params.bias.size();
        }
        return n;
    }

private:
    // He-style init: zero-mean normal with scale sqrt(2 / fan_in); masked
    // positions are zeroed afterwards so checkpoints carry no dead noise.
    void init_parameters(std::uint64_t seed) {
        Rng rng(seed);
        for (auto& layer : layers_) {
            auto& p = layer.params;
            const double fan_in =
                static_cast<double>(p.in_channels) * p.filter_size() * p.filter_size();
            const double scale = std::sqrt(2.0 / fan_in);
            for (double& w : p.weights) w = rng.normal(0.0, scale);
            const int F = p.filter_size();
            for (int oc = 0; oc < p.out_channels; ++oc) {
                for (int ic = 0; ic < p.in_channels; ++ic) {
                    for (int fr = 0; fr < F; ++fr) {
                        for (int fc = 0; fc < F; ++fc) {
                            if (!p.mask.at(fr, fc)) {
                                p.weights[p.weight_index(oc, ic, fr, fc)] = 0.0;
                            }
                        }
                    }
                }
            }
        }
    }

    ModelConfig config_;
    std::vector<ConvLayer> layers_;
};

}  // namespace mcnn

#endif  // MCNN_MODEL_HPP
