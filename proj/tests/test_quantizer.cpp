#include <gtest/gtest.h>

#include "mcnn/quantizer.hpp"
#include "mcnn/rng.hpp"

using namespace mcnn;

TEST(Quantizer, PaperGridConfigs) {
    for (int C : {128, 256, 512}) {
        const auto q = Quantizer::from_classes(1024.0, C);
        EXPECT_EQ(q.classes, C);
        EXPECT_DOUBLE_EQ(q.level, 1024.0 / C);
    }
}

TEST(Quantizer, FloorBinning) {
    const auto q = Quantizer::from_classes(1024.0, 512);
    EXPECT_EQ(q.quantize_clamp(301.0), 150);
    EXPECT_EQ(q.quantize_clamp(0.0), 0);
    EXPECT_EQ(q.quantize_clamp(1.999), 0);
    EXPECT_EQ(q.quantize_clamp(2.0), 1);
}

TEST(Quantizer, OutlierHandlingPerMode) {
    const auto q = Quantizer::from_classes(1024.0, 512);
    EXPECT_EQ(q.quantize_clamp(5000.0), 511);
    EXPECT_FALSE(q.quantize(5000.0, QuantizeMode::Missing).has_value());
    EXPECT_EQ(q.quantize(1023.999, QuantizeMode::Missing), std::optional<int>(511));
}

TEST(Quantizer, NegativeTimeRejected) {
    const auto q = Quantizer::from_classes(1024.0, 512);
    EXPECT_THROW(q.quantize_clamp(-1.0), DomainError);
}

TEST(Quantizer, DequantizeMidpoints) {
    const auto q = Quantizer::from_classes(1024.0, 512);
    EXPECT_DOUBLE_EQ(q.dequantize(150), 301.0);
    EXPECT_DOUBLE_EQ(q.dequantize(0), 1.0);
    EXPECT_THROW(q.dequantize(512), DomainError);
    EXPECT_THROW(q.dequantize(-1), DomainError);
}

TEST(Quantizer, RoundTripWithinHalfLevel) {
    Rng rng(3);
    for (int C : {512, 256, 128}) {
        const auto q = Quantizer::from_classes(1024.0, C);
        for (int i = 0; i < 10000; ++i) {
            const double t = rng.uniform() * 1024.0;
            const double back = q.dequantize(q.quantize_clamp(t));
            EXPECT_LE(std::fabs(back - t), q.level / 2.0);
        }
    }
}

TEST(Quantizer, Monotone) {
    const auto q = Quantizer::from_classes(1024.0, 256);
    Rng rng(4);
    for (int i = 0; i < 1000; ++i) {
        double a = rng.uniform() * 1024.0;
        double b = rng.uniform() * 1024.0;
        if (a > b) std::swap(a, b);
        EXPECT_LE(q.quantize_clamp(a), q.quantize_clamp(b));
    }
}

TEST(Quantizer, RejectsIndivisibleLevel) {
    EXPECT_THROW(Quantizer::from_level(1024.0, 3.0), ConfigError);
    EXPECT_THROW(Quantizer::from_level(0.0, 2.0), ConfigError);
    EXPECT_NO_THROW(Quantizer::from_level(1024.0, 8.0));
}
