#include <gtest/gtest.h>

#include <cmath>

#include "mcnn/train.hpp"

using namespace mcnn;

namespace {

ModelConfig small_config(int segments) {
    ModelConfig cfg;
    cfg.first_filter = 3;
    cfg.inner_filter = 3;
    cfg.first_channels = 8;
    cfg.inner_channels = 8;
    cfg.inner_depth = 2;
    cfg.classes = 16;
    cfg.mask_variant = 1;
    cfg.window = 6;
    cfg.segments = segments;
    return cfg;
}

QuantizedWindow pattern_window(int rows, int cols, int classes, std::uint64_t seed) {
    QuantizedWindow w;
    w.rows = rows;
    w.cols = cols;
    w.classes.resize(static_cast<std::size_t>(rows) * cols);
    w.validity.assign(w.classes.size(), 1);
    Rng rng(seed);
    for (auto& c : w.classes) c = static_cast<int>(rng.below(classes));
    return w;
}

}  // namespace

TEST(Train, RejectsEmptyWindowSet) {
    TrainConfig tc;
    EXPECT_THROW(train({}, small_config(8), tc, Quantizer::from_classes(1024.0, 16)), ConfigError);
}

TEST(Train, RejectsQuantizerMismatch) {
    std::vector<QuantizedWindow> windows = {pattern_window(6, 8, 16, 1)};
    TrainConfig tc;
    EXPECT_THROW(train(windows, small_config(8), tc, Quantizer::from_classes(1024.0, 32)),
                 ConfigError);
}

TEST(Train, LossBeatsUniformBaselineAfterFirstEpochs) {
    std::vector<QuantizedWindow> windows;
    for (int i = 0; i < 8; ++i) windows.push_back(pattern_window(6, 8, 16, 2));
    TrainConfig tc;
    tc.batch_size = 8;
    tc.max_epochs = 5;
    tc.early_stop_patience = 5;
    tc.seed = 3;
    const auto result = train(windows, small_config(8), tc, Quantizer::from_classes(1024.0, 16));
    // history[0] is measured while making epoch 1's update; history[1] is the
    // first loss after a full epoch of updates
    ASSERT_GE(result.checkpoint.history.size(), 2u);
    EXPECT_LT(result.checkpoint.history[1].train_loss, std::log(16.0));
    EXPECT_FALSE(result.diverged);
}

TEST(Train, MemorizesRepeatedWindow) {
    std::vector<QuantizedWindow> windows;
    for (int i = 0; i < 10; ++i) windows.push_back(pattern_window(6, 8, 16, 7));
    TrainConfig tc;
    tc.batch_size = 10;
    tc.max_epochs = 120;
    tc.early_stop_patience = 120;
    tc.seed = 5;
    const auto result = train(windows, small_config(8), tc, Quantizer::from_classes(1024.0, 16));
    EXPECT_LT(result.checkpoint.history.back().train_loss, 0.5);

    const auto model = result.checkpoint.to_model();
    const auto& w = windows[0];
    const auto filled = fill_with_medians(w, result.checkpoint.median_classes);
    const auto predicted = argmax_classes(model, filled);
    std::size_t hits = 0;
    for (std::size_t i = 0; i < predicted.size(); ++i) {
        hits += predicted[i] == w.classes[i] ? 1 : 0;
    }
    EXPECT_GE(hits, predicted.size() * 9 / 10);
}

TEST(Train, DeterministicGivenSeed) {
    std::vector<QuantizedWindow> windows;
    for (int i = 0; i < 6; ++i) windows.push_back(pattern_window(6, 8, 16, 10 + i));
    TrainConfig tc;
    tc.batch_size = 4;
    tc.max_epochs = 3;
    tc.seed = 11;
    const auto a = train(windows, small_config(8), tc, Quantizer::from_classes(1024.0, 16));
    const auto b = train(windows, small_config(8), tc, Quantizer::from_classes(1024.0, 16));
    EXPECT_EQ(serialize_checkpoint(a.checkpoint), serialize_checkpoint(b.checkpoint));
}

TEST(Train, DivergenceReturnsLastGoodCheckpoint) {
    std::vector<QuantizedWindow> windows;
    for (int i = 0; i < 4; ++i) windows.push_back(pattern_window(6, 8, 16, 20 + i));
    TrainConfig tc;
    tc.batch_size = 4;
    tc.max_epochs = 50;
    tc.learning_rate = 1e80;  // guaranteed overflow within a few layers
    tc.seed = 13;
    const auto result = train(windows, small_config(8), tc, Quantizer::from_classes(1024.0, 16));
    EXPECT_TRUE(result.diverged);
    // the returned parameters are still usable
    const auto model = result.checkpoint.to_model();
    const auto filled = fill_with_medians(windows[0], result.checkpoint.median_classes);
    EXPECT_NO_THROW(model.forward(model.scale_input(filled)));
}

TEST(Train, HistoryAndMediansRecorded) {
    std::vector<QuantizedWindow> windows;
    for (int i = 0; i < 6; ++i) windows.push_back(pattern_window(6, 8, 16, 30 + i));
    TrainConfig tc;
    tc.batch_size = 4;
    tc.max_epochs = 2;
    tc.seed = 17;
    const auto result = train(windows, small_config(8), tc, Quantizer::from_classes(1024.0, 16));
    EXPECT_EQ(result.checkpoint.history.size(), 2u);
    EXPECT_EQ(result.checkpoint.median_classes.size(), 8u);
    EXPECT_EQ(result.checkpoint.learning_rate, tc.learning_rate);
    EXPECT_EQ(result.checkpoint.rms_decay, 0.9);
    EXPECT_EQ(result.checkpoint.rms_epsilon, 1e-8);
    EXPECT_EQ(result.checkpoint.seed, tc.seed);
}

TEST(Train, PaddedWindowCellsStayOutOfLoss) {
    // a window with only one valid row still trains without error
    QuantizedWindow w = pattern_window(6, 8, 16, 40);
    for (int r = 0; r < 5; ++r) {
        for (int c = 0; c < 8; ++c) w.validity[w.index(r, c)] = 0;
    }
    w.padded = true;
    std::vector<QuantizedWindow> windows(4, w);
    TrainConfig tc;
    tc.batch_size = 2;
    tc.max_epochs = 2;
    tc.seed = 19;
    const auto result = train(windows, small_config(8), tc, Quantizer::from_classes(1024.0, 16));
    EXPECT_FALSE(result.diverged);
    EXPECT_TRUE(std::isfinite(result.checkpoint.history.back().train_loss));
}
