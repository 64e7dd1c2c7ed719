#ifndef MCNN_GRADCHECK_HPP
#define MCNN_GRADCHECK_HPP

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <cstdint>
#include <functional>
#include <numeric>
#include <span>
#include <vector>

#include "mcnn/error.hpp"
#include "mcnn/rng.hpp"

namespace mcnn {

/// Compares an analytic gradient against central finite differences of a
/// deterministic loss. `loss` must evaluate the loss at the current contents
/// of `params`; the parameters are perturbed in place and restored.
///
/// Returns max over the sampled subset of
///   |analytic - numeric| / max(|analytic|, |numeric|, 1e-12).
inline double grad_check(const std::function<double()>& loss, std::span<double> params,
                         std::span<const double> analytic_grad, double step,
                         std::size_t max_samples = 500, std::uint64_t seed = 0) {
    if (step <= 0.0) throw DomainError("grad_check: step must be positive");
    if (params.size() != analytic_grad.size()) {
        throw ConfigError("grad_check: gradient size does not match parameter size");
    }
    const double base = loss();
    if (loss() != base) {
        throw NumericError("grad_check: loss is not deterministic between calls");
    }

    std::vector<std::size_t> indices(params.size());
    std::iota(indices.begin(), indices.end(), std::size_t{0});
    if (indices.size() > max_samples) {
        Rng rng(seed);
        rng.shuffle(indices);
        indices.resize(max_samples);
        std::sort(indices.begin(), indices.end());
    }

    double max_rel_err = 0.0;
    for (std::size_t i : indices) {
        const double saved = params[i];
        params[i] = saved + step;
        const double plus = loss();
        params[i] = saved - step;
        const double minus = loss();
        params[i] = saved;
        const double numeric = (plus - minus) / (2.0 * step);
        const double analytic = analytic_grad[i];
        const double denom = std::max({std::fabs(analytic), std::fabs(numeric), 1e-12});
        max_rel_err = std::max(max_rel_err, std::fabs(analytic - numeric) / denom);
    }
    return max_rel_err;
}

}  // namespace mcnn

#endif  // MCNN_GRADCHECK_HPP
