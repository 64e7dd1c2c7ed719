#ifndef MCNN_LOSS_HPP
#define MCNN_LOSS_HPP

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <limits>
#include <vector>

#include "mcnn/error.hpp"
#include "mcnn/tensor.hpp"

namespace mcnn {

template <class Scalar>
struct CrossEntropyResultT {
    double loss = 0.0;               // mean nats over valid cells
    double loss_sum = 0.0;           // summed nats, before division
    std::size_t valid_count = 0;
    FeatureMapT<Scalar> logit_grad;  // (softmax - one_hot) / valid_count at valid cells
};

using CrossEntropyResult = CrossEntropyResultT<double>;

/// C-way softmax cross entropy over an H x K grid of class targets.
/// Invalid cells contribute zero loss and zero gradient.
template <class Scalar>
CrossEntropyResultT<Scalar> softmax_cross_entropy(const FeatureMapT<Scalar>& logits,
                                                  const std::vector<int>& targets,
                                                  const std::vector<std::uint8_t>& validity) {
    const int C = logits.channels;
    const int rows = logits.rows;
    const int cols = logits.cols;
    const std::size_t cells = static_cast<std::size_t>(rows) * cols;
    if (targets.size() != cells || validity.size() != cells) {
        throw ConfigError("cross entropy: targets/validity size must be rows*cols");
    }

    CrossEntropyResultT<Scalar> result;
    result.logit_grad = FeatureMapT<Scalar>(C, rows, cols);
    for (std::size_t i = 0; i < cells; ++i) {
        if (validity[i]) ++result.valid_count;
    }
    if (result.valid_count == 0) {
        throw DomainError("cross entropy: no valid cells to score");
    }

    std::vector<double> probs(static_cast<std::size_t>(C));
    const std::size_t stride = cells;
    for (int r = 0; r < rows; ++r) {
        for (int c = 0; c < cols; ++c) {
            const std::size_t cell = static_cast<std::size_t>(r) * cols + c;
            if (!validity[cell]) continue;
            const int target = targets[cell];
            if (target < 0 || target >= C) {
                throw DomainError("cross entropy: target class " + std::to_string(target) +
                                  " outside [0, " + std::to_string(C) + ")");
            }
            double max_logit = -std::numeric_limits<double>::infinity();
            for (int ch = 0; ch < C; ++ch) {
                max_logit = std::max(max_logit,
                                     static_cast<double>(logits.data[ch * stride + cell]));
            }
            double sum_exp = 0.0;
            for (int ch = 0; ch < C; ++ch) {
                double e = std::exp(static_cast<double>(logits.data[ch * stride + cell]) -
                                    max_logit);
                probs[ch] = e;
                sum_exp += e;
            }
            const double log_sum = std::log(sum_exp);
            result.loss_sum -=
                static_cast<double>(logits.data[target * stride + cell]) - max_logit - log_sum;
            const double inv_count = 1.0 / static_cast<double>(result.valid_count);
            for (int ch = 0; ch < C; ++ch) {
                double p = probs[ch] / sum_exp;
                double g = (p - (ch == target ? 1.0 : 0.0)) * inv_count;
                result.logit_grad.data[ch * stride + cell] = static_cast<Scalar>(g);
            }
        }
    }
    result.loss = result.loss_sum / static_cast<double>(result.valid_count);
    if (!std::isfinite(result.loss)) throw NumericError("cross entropy: non-finite loss");
    return result;
}

/// Softmax probabilities for one grid cell of a C-channel logit map.
template <class Scalar>
std::vector<double> softmax_at(const FeatureMapT<Scalar>& logits, int row, int col) {
    if (row < 0 || row >= logits.rows || col < 0 || col >= logits.cols) {
        throw DomainError("softmax_at: cell (" + std::to_string(row) + "," + std::to_string(col) +
                          ") outside grid");
    }
    const std::size_t stride = static_cast<std::size_t>(logits.rows) * logits.cols;
    const std::size_t cell = static_cast<std::size_t>(row) * logits.cols + col;
    std::vector<double> probs(static_cast<std::size_t>(logits.channels));
    double max_logit = -std::numeric_limits<double>::infinity();
    for (int ch = 0; ch < logits.channels; ++ch) {
        max_logit = std::max(max_logit, static_cast<double>(logits.data[ch * stride + cell]));
    }
    double sum_exp = 0.0;
    for (int ch = 0; ch < logits.channels; ++ch) {
        probs[ch] = std::exp(static_cast<double>(logits.data[ch * stride + cell]) - max_logit);
        sum_exp += probs[ch];
    }
    for (double& p : probs) p /= sum_exp;
    return probs;
}

}  // namespace mcnn

#endif  // MCNN_LOSS_HPP
