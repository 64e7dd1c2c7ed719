#ifndef MCNN_OPTIMIZER_HPP
#define MCNN_OPTIMIZER_HPP

#include <cmath>
#include <span>
#include <string>
#include <vector>

#include "mcnn/error.hpp"

namespace mcnn {

/// RMSprop state for one parameter tensor: second-moment accumulator plus the
/// hyperparameters recorded with it for reproducibility.
struct RmsPropState {
    double learning_rate = 0.01;
    double decay = 0.9;
    double epsilon = 1e-8;
    std::vector<double> v;  // same length as the parameter tensor

    RmsPropState() = default;
    RmsPropState(std::size_t param_count, double learning_rate_, double decay_ = 0.9,
                 double epsilon_ = 1e-8)
        : learning_rate(learning_rate_), decay(decay_), epsilon(epsilon_), v(param_count, 0.0) {
        if (learning_rate <= 0.0) throw ConfigError("rmsprop: learning rate must be positive");
        if (decay <= 0.0 || decay >= 1.0) throw ConfigError("rmsprop: decay must be in (0,1)");
        if (epsilon <= 0.0) throw ConfigError("rmsprop: epsilon must be positive");
    }
};

/// v <- decay*v + (1-decay)*g^2;  p <- p - lr*g/(sqrt(v) + eps)
inline void rmsprop_step(std::span<double> params, std::span<const double> grads,
                         RmsPropState& state, const std::string& param_path = {}) {
    if (params.size() != grads.size() || params.size() != state.v.size()) {
        throw ConfigError("rmsprop: parameter/gradient/state sizes differ" +
                          (param_path.empty() ? std::string{} : " at " + param_path));
    }
    for (std::size_t i = 0; i < params.size(); ++i) {
        const double g = grads[i];
        if (!std::isfinite(g)) {
            throw NumericError("rmsprop: non-finite gradient at " +
                               (param_path.empty() ? std::string{"<param>"} : param_path) + "[" +
                               std::to_string(i) + "]");
        }
        state.v[i] = state.decay * state.v[i] + (1.0 - state.decay) * g * g;
        params[i] -= state.learning_rate * g / (std::sqrt(state.v[i]) + state.epsilon);
    }
}

}  // namespace mcnn

#endif  // MCNN_OPTIMIZER_HPP
