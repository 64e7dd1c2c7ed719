#include <gtest/gtest.h>

#include <cmath>

#include "mcnn/activation.hpp"
#include "mcnn/loss.hpp"
#include "mcnn/optimizer.hpp"
#include "mcnn/rng.hpp"

using namespace mcnn;

TEST(Relu, Elementwise) {
    FeatureMap in(1, 1, 3);
    in.data = {-1.0, 0.0, 2.0};
    const auto out = relu(in);
    EXPECT_EQ(out.data, (std::vector<double>{0.0, 0.0, 2.0}));
}

TEST(Relu, IdentityOnPositive) {
    FeatureMap in(1, 2, 2);
    in.data = {0.5, 1.0, 2.0, 3.5};
    EXPECT_EQ(relu(in).data, in.data);
}

TEST(Relu, BackwardGatesOnInputSign) {
    FeatureMap in(1, 1, 3);
    in.data = {-1.0, 0.0, 2.0};
    FeatureMap up(1, 1, 3);
    up.data = {5.0, 5.0, 5.0};
    const auto g = relu_backward(in, up);
    EXPECT_EQ(g.data, (std::vector<double>{0.0, 0.0, 5.0}));
}

TEST(SoftmaxCrossEntropy, SymmetricLogits) {
    FeatureMap logits(2, 1, 1, 0.0);
    const auto result = softmax_cross_entropy(logits, {0}, {1});
    EXPECT_NEAR(result.loss, std::log(2.0), 1e-12);
    EXPECT_NEAR(result.logit_grad.at(0, 0, 0), -0.5, 1e-12);
    EXPECT_NEAR(result.logit_grad.at(1, 0, 0), 0.5, 1e-12);
}

TEST(SoftmaxCrossEntropy, LargeMarginLossVanishes) {
    FeatureMap logits(3, 1, 1, 0.0);
    logits.at(1, 0, 0) = 50.0;
    const auto result = softmax_cross_entropy(logits, {1}, {1});
    EXPECT_LT(result.loss, 1e-12);
    EXPECT_GE(result.loss, 0.0);
}

TEST(SoftmaxCrossEntropy, MixedValidityMatchesDirectSummation) {
    const int C = 4;
    FeatureMap logits(C, 2, 2);
    Rng rng(17);
    for (double& v : logits.data) v = rng.normal(0.0, 2.0);
    const std::vector<int> targets = {1, 3, 0, 2};
    const std::vector<std::uint8_t> validity = {1, 0, 0, 1};

    // direct summation over the two valid cells
    auto cell_loss = [&](int cell) {
        double max_logit = logits.data[cell];
        for (int ch = 1; ch < C; ++ch) max_logit = std::max(max_logit, logits.data[ch * 4 + cell]);
        double sum = 0.0;
        for (int ch = 0; ch < C; ++ch) sum += std::exp(logits.data[ch * 4 + cell] - max_logit);
        return -(logits.data[targets[cell] * 4 + cell] - max_logit - std::log(sum));
    };
    const double expected = (cell_loss(0) + cell_loss(3)) / 2.0;

    const auto result = softmax_cross_entropy(logits, targets, validity);
    EXPECT_EQ(result.valid_count, 2u);
    EXPECT_NEAR(result.loss, expected, 1e-12);
    // invalid cells carry zero gradient
    for (int ch = 0; ch < C; ++ch) {
        EXPECT_EQ(result.logit_grad.data[ch * 4 + 1], 0.0);
        EXPECT_EQ(result.logit_grad.data[ch * 4 + 2], 0.0);
    }
}

TEST(SoftmaxCrossEntropy, LossNonNegativeOnRandomInputs) {
    Rng rng(99);
    for (int trial = 0; trial < 20; ++trial) {
        FeatureMap logits(8, 3, 5);
        for (double& v : logits.data) v = rng.normal(0.0, 3.0);
        std::vector<int> targets(15);
        std::vector<std::uint8_t> validity(15, 1);
        for (auto& t : targets) t = static_cast<int>(rng.below(8));
        EXPECT_GE(softmax_cross_entropy(logits, targets, validity).loss, 0.0);
    }
}

TEST(SoftmaxCrossEntropy, AllInvalidIsAnError) {
    FeatureMap logits(2, 1, 2, 0.0);
    EXPECT_THROW(softmax_cross_entropy(logits, {0, 1}, {0, 0}), DomainError);
}

TEST(SoftmaxCrossEntropy, GradientSumsToZeroPerValidCell) {
    Rng rng(5);
    FeatureMap logits(6, 2, 3);
    for (double& v : logits.data) v = rng.normal(0.0, 1.0);
    std::vector<int> targets = {0, 1, 2, 3, 4, 5};
    std::vector<std::uint8_t> validity = {1, 1, 0, 1, 1, 1};
    const auto result = softmax_cross_entropy(logits, targets, validity);
    for (int cell = 0; cell < 6; ++cell) {
        double s = 0.0;
        for (int ch = 0; ch < 6; ++ch) s += result.logit_grad.data[ch * 6 + cell];
        EXPECT_NEAR(s, 0.0, 1e-15);
    }
}

TEST(RmsProp, HandWorkedFirstStep) {
    RmsPropState state(1, 0.01, 0.9, 1e-8);
    std::vector<double> params = {0.0};
    std::vector<double> grads = {1.0};
    rmsprop_step(params, grads, state);
    EXPECT_NEAR(state.v[0], 0.1, 1e-15);
    EXPECT_NEAR(params[0], -0.01 / (std::sqrt(0.1) + 1e-8), 1e-15);
    EXPECT_NEAR(params[0], -0.0316228, 1e-6);
}

TEST(RmsProp, ZeroGradientLeavesParamAndDecaysV) {
    RmsPropState state(1, 0.01, 0.9, 1e-8);
    state.v[0] = 0.5;
    std::vector<double> params = {2.5};
    std::vector<double> grads = {0.0};
    rmsprop_step(params, grads, state);
    EXPECT_DOUBLE_EQ(params[0], 2.5);
    EXPECT_NEAR(state.v[0], 0.45, 1e-15);
}

TEST(RmsProp, TwoStepsAccumulate) {
    RmsPropState state(1, 0.01, 0.9, 1e-8);
    std::vector<double> params = {0.0};
    std::vector<double> grads = {1.0};
    rmsprop_step(params, grads, state);
    rmsprop_step(params, grads, state);
    EXPECT_NEAR(state.v[0], 0.19, 1e-15);
}

TEST(RmsProp, NonFiniteGradientNamesTheParameter) {
    RmsPropState state(2, 0.01);
    std::vector<double> params = {0.0, 0.0};
    std::vector<double> grads = {0.0, std::numeric_limits<double>::infinity()};
    try {
        rmsprop_step(params, grads, state, "layer3.weight");
        FAIL() << "expected NumericError";
    } catch (const NumericError& e) {
        EXPECT_NE(std::string(e.what()).find("layer3.weight[1]"), std::string::npos);
    }
}

TEST(RmsProp, RejectsBadHyperparameters) {
    EXPECT_THROW(RmsPropState(1, -0.01), ConfigError);
    EXPECT_THROW(RmsPropState(1, 0.01, 1.5), ConfigError);
    EXPECT_THROW(RmsPropState(1, 0.01, 0.9, 0.0), ConfigError);
}

TEST(RmsProp, RejectsSizeMismatch) {
    RmsPropState state(2, 0.01);
    std::vector<double> params = {0.0};
    std::vector<double> grads = {1.0};
    EXPECT_THROW(rmsprop_step(params, grads, state), ConfigError);
}
