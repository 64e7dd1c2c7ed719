#ifndef MCNN_CONV_HPP
#define MCNN_CONV_HPP

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <string>
#include <tuple>
#include <vector>

#include "mcnn/error.hpp"
#include "mcnn/mask.hpp"
#include "mcnn/tensor.hpp"

namespace mcnn {

/// Parameters of one masked convolution layer. The mask is multiplied into the
/// weights on every forward and backward pass, so masked weights stay inert no
/// matter what the optimizer accumulates.
template <class Scalar>
struct ConvLayerParamsT {
    int out_channels = 0;
    int in_channels = 0;
    MaskSpec mask;
    std::vector<Scalar> weights;  // (out, in, filter_row, filter_col)
    std::vector<Scalar> bias;     // per out-channel

    ConvLayerParamsT() = default;
    ConvLayerParamsT(int out_channels_, int in_channels_, MaskSpec mask_)
        : out_channels(out_channels_), in_channels(in_channels_), mask(std::move(mask_)) {
        if (out_channels <= 0 || in_channels <= 0) {
            throw ConfigError("conv layer channel counts must be positive");
        }
        if (mask.size < 1 || mask.size % 2 == 0) {
            throw ConfigError("conv mask size must be odd and positive");
        }
        weights.assign(static_cast<std::size_t>(out_channels) * in_channels * mask.size *
                           mask.size,
                       Scalar{0});
        bias.assign(static_cast<std::size_t>(out_channels), Scalar{0});
    }

    int filter_size() const { return mask.size; }

    std::size_t weight_index(int oc, int ic, int fr, int fc) const {
        return ((static_cast<std::size_t>(oc) * in_channels + ic) * mask.size + fr) * mask.size +
               fc;
    }
};

using ConvLayerParams = ConvLayerParamsT<double>;

template <class Scalar>
struct ConvGradsT {
    FeatureMapT<Scalar> input;
    std::vector<Scalar> weights;
    std::vector<Scalar> bias;
};

using ConvGrads = ConvGradsT<double>;

/// Masked 2-D convolution, stride 1, zero padding (F-1)/2; preserves rows x cols.
/// Accumulation is in double regardless of the storage scalar, and the loop
/// order is fixed, so results are bitwise reproducible.
template <class Scalar>
FeatureMapT<Scalar> masked_conv_forward(const FeatureMapT<Scalar>& input,
                                        const ConvLayerParamsT<Scalar>& params, int padding) {
    const int F = params.filter_size();
    const int center = (F - 1) / 2;
    if (padding != center) {
        throw ConfigError("conv padding must be (F-1)/2 = " + std::to_string(center) + ", got " +
                          std::to_string(padding));
    }
    if (input.channels != params.in_channels) {
        throw ConfigError("conv input has " + std::to_string(input.channels) +
                          " channels, layer expects " + std::to_string(params.in_channels));
    }
    if (!input.all_finite()) throw NumericError("conv input contains non-finite values");

    const int rows = input.rows;
    const int cols = input.cols;
    FeatureMapT<Scalar> output(params.out_channels, rows, cols);
    std::vector<double> acc(static_cast<std::size_t>(rows) * cols);

    for (int oc = 0; oc < params.out_channels; ++oc) {
        std::fill(acc.begin(), acc.end(), static_cast<double>(params.bias[oc]));
        for (int ic = 0; ic < params.in_channels; ++ic) {
            const Scalar* in_ch = input.channel(ic);
            for (int fr = 0; fr < F; ++fr) {
                for (int fc = 0; fc < F; ++fc) {
                    if (!params.mask.at(fr, fc)) continue;
                    const double w =
                        static_cast<double>(params.weights[params.weight_index(oc, ic, fr, fc)]);
                    if (w == 0.0) continue;
                    const int dr = fr - center;
                    const int dc = fc - center;
                    const int r_begin = std::max(0, -dr);
                    const int r_end = std::min(rows, rows - dr);
                    const int c_begin = std::max(0, -dc);
                    const int c_end = std::min(cols, cols - dc);
                    for (int r = r_begin; r < r_end; ++r) {
                        const Scalar* src = in_ch + static_cast<std::size_t>(r + dr) * cols + dc;
                        double* dst = acc.data() + static_cast<std::size_t>(r) * cols;
                        for (int c = c_begin; c < c_end; ++c) {
                            dst[c] += w * static_cast<double>(src[c]);
                        }
                    }
                }
            }
        }
        Scalar* out_ch = output.channel(oc);
        for (std::size_t i = 0; i < acc.size(); ++i) out_ch[i] = static_cast<Scalar>(acc[i]);
    }
    return output;
}

/// Gradients w.r.t. input, weights and bias. Masked weight positions receive
/// exactly zero gradient.
template <class Scalar>
ConvGradsT<Scalar> masked_conv_backward(const FeatureMapT<Scalar>& input,
                                        const ConvLayerParamsT<Scalar>& params,
                                        const FeatureMapT<Scalar>& upstream_grad) {
    const int F = params.filter_size();
    const int center = (F - 1) / 2;
    const int rows = input.rows;
    const int cols = input.cols;
    if (input.channels != params.in_channels) {
        throw ConfigError("conv backward: input channel mismatch");
    }
    if (upstream_grad.channels != params.out_channels || upstream_grad.rows != rows ||
        upstream_grad.cols != cols) {
        throw ConfigError("conv backward: upstream gradient shape mismatch");
    }

    ConvGradsT<Scalar> grads;
    grads.input = FeatureMapT<Scalar>(params.in_channels, rows, cols);
    grads.weights.assign(params.weights.size(), Scalar{0});
    grads.bias.assign(params.bias.size(), Scalar{0});

    std::vector<double> in_acc(static_cast<std::size_t>(rows) * cols);

    for (int oc = 0; oc < params.out_channels; ++oc) {
        const Scalar* g_ch = upstream_grad.channel(oc);
        double bias_acc = 0.0;
        for (std::size_t i = 0; i < static_cast<std::size_t>(rows) * cols; ++i) {
            bias_acc += static_cast<double>(g_ch[i]);
        }
        grads.bias[oc] = static_cast<Scalar>(bias_acc);
    }

    for (int ic = 0; ic < params.in_channels; ++ic) {
        std::fill(in_acc.begin(), in_acc.end(), 0.0);
        const Scalar* in_ch = input.channel(ic);
        for (int oc = 0; oc < params.out_channels; ++oc) {
            const Scalar* g_ch = upstream_grad.channel(oc);
            for (int fr = 0; fr < F; ++fr) {
                for (int fc = 0; fc < F; ++fc) {
                    if (!params.mask.at(fr, fc)) continue;
                    const std::size_t wi = params.weight_index(oc, ic, fr, fc);
                    const double w = static_cast<double>(params.weights[wi]);
                    const int dr = fr - center;
                    const int dc = fc - center;
                    const int r_begin = std::max(0, -dr);
                    const int r_end = std::min(rows, rows - dr);
                    const int c_begin = std::max(0, -dc);
                    const int c_end = std::min(cols, cols - dc);
                    // dL/dw = sum over output cells of g * shifted input
                    double w_acc = 0.0;
                    for (int r = r_begin; r < r_end; ++r) {
                        const Scalar* src = in_ch + static_cast<std::size_t>(r + dr) * cols + dc;
                        const Scalar* g_row = g_ch + static_cast<std::size_t>(r) * cols;
                        for (int c = c_begin; c < c_end; ++c) {
                            w_acc += static_cast<double>(g_row[c]) * static_cast<double>(src[c]);
                        }
                    }
                    grads.weights[wi] = static_cast<Scalar>(w_acc);
                    // dL/dx scatters g through the same taps
                    if (w != 0.0) {
                        for (int r = r_begin; r < r_end; ++r) {
                            double* dst = in_acc.data() + static_cast<std::size_t>(r + dr) * cols +
                                          dc;
                            const Scalar* g_row = g_ch + static_cast<std::size_t>(r) * cols;
                            for (int c = c_begin; c < c_end; ++c) {
                                dst[c] += w * static_cast<double>(g_row[c]);
                            }
                        }
                    }
                }
            }
        }
        Scalar* dst = grads.input.channel(ic);
        for (std::size_t i = 0; i < in_acc.size(); ++i) dst[i] = static_cast<Scalar>(in_acc[i]);
    }
    return grads;
}

}  // namespace mcnn

#endif  // MCNN_CONV_HPP
