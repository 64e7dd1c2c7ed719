#ifndef MCNN_ACTIVATION_HPP
#define MCNN_ACTIVATION_HPP

#include "mcnn/error.hpp"
#include "mcnn/tensor.hpp"

namespace mcnn {

template <class Scalar>
FeatureMapT<Scalar> relu(const FeatureMapT<Scalar>& input) {
    FeatureMapT<Scalar> out = input;
    for (Scalar& v : out.data) {
        if (v < Scalar{0}) v = Scalar{0};
    }
    return out;
}

/// Passes the upstream gradient where the pre-activation input was > 0.
template <class Scalar>
FeatureMapT<Scalar> relu_backward(const FeatureMapT<Scalar>& input,
                                  const FeatureMapT<Scalar>& upstream_grad) {
    if (!input.same_shape(upstream_grad)) {
        throw ConfigError("relu backward: shape mismatch");
    }
    FeatureMapT<Scalar> out = upstream_grad;
    for (std::size_t i = 0; i < out.data.size(); ++i) {
        if (!(input.data[i] > Scalar{0})) out.data[i] = Scalar{0};
    }
    return out;
}

}  // namespace mcnn

#endif  // MCNN_ACTIVATION_HPP
