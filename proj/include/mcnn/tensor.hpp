#ifndef MCNN_TENSOR_HPP
#define MCNN_TENSOR_HPP

#include <cmath>
#include <cstddef>
#include <string>
#include <vector>

#include "mcnn/error.hpp"

namespace mcnn {

/// Dense (channels, rows, cols) tensor, row-major within a channel.
/// Rows index trips (H), cols index route segments (K).
template <class Scalar>
struct FeatureMapT {
    int channels = 0;
    int rows = 0;
    int cols = 0;
    std::vector<Scalar> data;

    FeatureMapT() = default;
    FeatureMapT(int channels_, int rows_, int cols_, Scalar fill = Scalar{0})
        : channels(channels_), rows(rows_), cols(cols_) {
        if (channels <= 0 || rows <= 0 || cols <= 0) {
            throw ConfigError("feature map dimensions must be strictly positive");
        }
        data.assign(static_cast<std::size_t>(channels) * rows * cols, fill);
    }

    std::size_t size() const { return data.size(); }

    std::size_t index(int ch, int r, int c) const {
        return (static_cast<std::size_t>(ch) * rows + r) * cols + c;
    }

    Scalar& at(int ch, int r, int c) { return data[index(ch, r, c)]; }
    const Scalar& at(int ch, int r, int c) const { return data[index(ch, r, c)]; }

    Scalar* channel(int ch) { return data.data() + static_cast<std::size_t>(ch) * rows * cols; }
    const Scalar* channel(int ch) const {
        return data.data() + static_cast<std::size_t>(ch) * rows * cols;
    }

    bool same_shape(const FeatureMapT& other) const {
        return channels == other.channels && rows == other.rows && cols == other.cols;
    }

    bool all_finite() const {
        for (Scalar v : data) {
            if (!std::isfinite(static_cast<double>(v))) return false;
        }
        return true;
    }
};

using FeatureMap = FeatureMapT<double>;

template <class Scalar>
void require_shape(const FeatureMapT<Scalar>& m, int channels, int rows, int cols,
                   const std::string& what) {
    if (m.channels != channels || m.rows != rows || m.cols != cols) {
        throw ConfigError(what + ": expected " + std::to_string(channels) + "x" +
                          std::to_string(rows) + "x" + std::to_string(cols) + ", got " +
                          std::to_string(m.channels) + "x" + std::to_string(m.rows) + "x" +
                          std::to_string(m.cols));
    }
}

}  // namespace mcnn

#endif  // MCNN_TENSOR_HPP
