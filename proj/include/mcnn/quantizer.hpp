#ifndef MCNN_QUANTIZER_HPP
#define MCNN_QUANTIZER_HPP

#include <cmath>
#include <optional>
#include <string>

#include "mcnn/error.hpp"

namespace mcnn {

enum class QuantizeMode {
    Clamp,    // t >= t_max maps to the top class (inference context)
    Missing,  // t >= t_max is treated as an outlier and dropped (training)
};

/// Uniform quantizer over [0, t_max) seconds with C = t_max / level classes.
struct Quantizer {
    double t_max = 1024.0;
    double level = 2.0;
    int classes = 512;

    static Quantizer from_level(double t_max, double level) {
        if (t_max <= 0.0 || level <= 0.0) {
            throw ConfigError("quantizer: t_max and level must be positive");
        }
        double c = t_max / level;
        if (std::fabs(c - std::round(c)) > 1e-9 || std::round(c) < 1.0) {
            throw ConfigError("quantizer: t_max must be divisible by level");
        }
        return Quantizer{t_max, level, static_cast<int>(std::llround(c))};
    }

    static Quantizer from_classes(double t_max, int classes) {
        if (classes < 1) throw ConfigError("quantizer: class count must be positive");
        return from_level(t_max, t_max / classes);
    }

    std::optional<int> quantize(double t, QuantizeMode mode) const {
        if (t < 0.0 || !std::isfinite(t)) {
            throw DomainError("quantize: travel time must be finite and >= 0, got " +
                              std::to_string(t));
        }
        if (t >= t_max) {
            if (mode == QuantizeMode::Missing) return std::nullopt;
            return classes - 1;
        }
        int cls = static_cast<int>(std::floor(t / level));
        if (cls > classes - 1) cls = classes - 1;
        return cls;
    }

    int quantize_clamp(double t) const { return *quantize(t, QuantizeMode::Clamp); }

    /// Class midpoint in seconds.
    double dequantize(int cls) const {
        if (cls < 0 || cls >= classes) {
            throw DomainError("dequantize: class " + std::to_string(cls) + " outside [0, " +
                              std::to_string(classes) + ")");
        }
        return (cls + 0.5) * level;
    }
};

}  // namespace mcnn

#endif  // MCNN_QUANTIZER_HPP
