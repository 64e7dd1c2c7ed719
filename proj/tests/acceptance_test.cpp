// Acceptance suite: one test per criterion, one PASS/FAIL line each.

#include <gtest/gtest.h>

#include <chrono>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <iostream>
#include <memory>

#include "mcnn/benchmark.hpp"
#include "mcnn/checkpoint.hpp"
#include "mcnn/gradcheck.hpp"
#include "mcnn/loss.hpp"
#include "mcnn/metrics.hpp"
#include "mcnn/model.hpp"
#include "mcnn/serve.hpp"
#include "mcnn/session.hpp"
#include "mcnn/synthetic.hpp"
#include "mcnn/train.hpp"
#include "mcnn/tune.hpp"

using namespace mcnn;

namespace {

class Acceptance : public ::testing::Test {
protected:
    void report(const char* id, const std::string& detail) {
        std::cout << "[" << id << "] " << (HasFailure() ? "FAIL" : "PASS") << " - " << detail
                  << std::endl;
    }
};

std::vector<int> random_grid(int cells, int classes, Rng& rng) {
    std::vector<int> grid(static_cast<std::size_t>(cells));
    for (auto& c : grid) c = static_cast<int>(rng.below(classes));
    return grid;
}

QuantizedWindow random_window(int rows, int cols, int classes, std::uint64_t seed) {
    QuantizedWindow w;
    w.rows = rows;
    w.cols = cols;
    w.validity.assign(static_cast<std::size_t>(rows) * cols, 1);
    Rng rng(seed);
    w.classes = random_grid(rows * cols, classes, rng);
    return w;
}

SyntheticConfig benchmark_data_config() {
    SyntheticConfig cfg;
    cfg.segments = 20;
    cfg.trips_per_day = 40;
    cfg.days = 90;
    cfg.start_date = "2024-01-01";
    cfg.base_profile.clear();
    for (int k = 0; k < cfg.segments; ++k) {
        cfg.base_profile.push_back(90.0 + 10.0 * (k % 8));  // 90..160 s
    }
    cfg.rush_multiplier = SyntheticConfig::two_peak_rush(cfg.trips_per_day, 1.4);
    cfg.trip_persistence = 0.8;
    cfg.congestion_scale = 0.15;
    cfg.noise_sd = 5.0;
    cfg.missing_rate = 0.0;
    cfg.seed = 20240101;
    return cfg;
}

}  // namespace

TEST_F(Acceptance, A1_CausalitySuite) {
    const auto started = std::chrono::steady_clock::now();
    ModelConfig cfg;  // F=5, mask 2 defaults
    cfg.classes = 128;
    cfg.window = 10;
    cfg.segments = 20;
    const MaskCnn model(cfg, 7771);
    const int H = cfg.window, K = cfg.segments;
    Rng rng(4242);

    for (int trial = 0; trial < 100; ++trial) {
        Rng grid_rng(1000 + trial);
        const auto grid = random_grid(H * K, cfg.classes, grid_rng);
        const auto base = model.forward(model.scale_input(grid));
        const int pr = static_cast<int>(rng.below(H));
        const int pc = static_cast<int>(rng.below(K));
        const std::size_t p = static_cast<std::size_t>(pr) * K + pc;

        // perturb every cell at raster position >= p, including p itself
        // (mask-A self-exclusion)
        auto perturbed = grid;
        for (std::size_t cell = p; cell < perturbed.size(); ++cell) {
            perturbed[cell] = static_cast<int>(rng.below(cfg.classes));
        }
        const auto out = model.forward(model.scale_input(perturbed));
        bool identical = true;
        for (int ch = 0; ch < cfg.classes && identical; ++ch) {
            const std::size_t idx = static_cast<std::size_t>(ch) * H * K + p;
            identical = out.data[idx] == base.data[idx];
        }
        ASSERT_TRUE(identical) << "trial " << trial << " cell (" << pr << "," << pc << ")";
    }
    const double secs =
        std::chrono::duration<double>(std::chrono::steady_clock::now() - started).count();
    EXPECT_LT(secs, 60.0);
    report("A1", "causality over 100 random inputs, F=5/mask2/C=128, H=10, K=20 (" +
                     std::to_string(secs) + " s)");
}

TEST_F(Acceptance, A2_GradientCheck) {
    const auto started = std::chrono::steady_clock::now();
    ModelConfig cfg;
    cfg.first_filter = 3;
    cfg.inner_filter = 3;
    cfg.first_channels = 8;
    cfg.inner_channels = 8;
    cfg.inner_depth = 3;
    cfg.classes = 16;
    cfg.mask_variant = 2;
    cfg.window = 6;
    cfg.segments = 8;
    MaskCnn model(cfg, 555);
    // check at a generic parameter point: with freshly zeroed biases, cells
    // with empty receptive fields sit exactly on the ReLU kink, where central
    // differences are ill-posed
    Rng bias_rng(557);
    for (auto& layer : model.layers()) {
        for (double& b : layer.params.bias) b = bias_rng.normal(0.0, 0.1);
    }

    const auto window = random_window(6, 8, 16, 556);
    const FeatureMap input = model.scale_input(window.classes);

    auto loss_fn = [&]() {
        const auto logits = model.forward(input);
        return softmax_cross_entropy(logits, window.classes, window.validity).loss;
    };
    const auto trace = model.forward_trace(input);
    const auto ce = softmax_cross_entropy(trace.logits, window.classes, window.validity);
    const auto grads = model.backward(input, trace, ce.logit_grad);

    double max_err = 0.0;
    std::size_t sampled = 0;
    auto& layers = model.layers();
    for (std::size_t l = 0; l < layers.size(); ++l) {
        const std::size_t w_budget = 100;
        max_err = std::max(
            max_err, grad_check(loss_fn, layers[l].params.weights, grads[l].weights, 1e-5,
                                w_budget, 900 + l));
        sampled += std::min(w_budget, layers[l].params.weights.size());
        max_err = std::max(max_err, grad_check(loss_fn, layers[l].params.bias, grads[l].bias,
                                               1e-5, 100, 950 + l));
        sampled += std::min<std::size_t>(100, layers[l].params.bias.size());
    }
    EXPECT_GE(sampled, 500u);
    EXPECT_LE(max_err, 1e-4);
    const double secs =
        std::chrono::duration<double>(std::chrono::steady_clock::now() - started).count();
    EXPECT_LT(secs, 120.0);
    report("A2", "max relative gradient error " + std::to_string(max_err) + " over " +
                     std::to_string(sampled) + " parameters (" + std::to_string(secs) + " s)");
}

TEST_F(Acceptance, A3_QuantizerRoundTrip) {
    for (double level : {2.0, 4.0, 8.0}) {
        const auto q = Quantizer::from_level(1024.0, level);
        Rng rng(31337);
        for (int i = 0; i < 10000; ++i) {
            const double t = rng.uniform() * 1024.0;
            const double back = q.dequantize(q.quantize_clamp(t));
            ASSERT_LE(std::fabs(back - t), level / 2.0)
                << "t=" << t << " level=" << level;
        }
    }
    report("A3", "|dequantize(quantize(t)) - t| <= l/2 for 10^4 draws, l in {2,4,8}");
}

TEST_F(Acceptance, A4_OverfitSanity) {
    const auto started = std::chrono::steady_clock::now();
    ModelConfig cfg;
    cfg.first_filter = 3;
    cfg.inner_filter = 3;
    cfg.first_channels = 16;
    cfg.inner_channels = 16;
    cfg.inner_depth = 2;
    cfg.classes = 16;
    cfg.mask_variant = 1;
    cfg.window = 6;
    cfg.segments = 8;

    const auto window = random_window(6, 8, 16, 777);
    std::vector<QuantizedWindow> windows(10, window);

    TrainConfig tc;
    tc.batch_size = 10;       // one iteration per epoch
    tc.max_epochs = 500;      // 500 iterations
    tc.early_stop_patience = 500;
    tc.learning_rate = 0.01;
    tc.seed = 778;
    const auto result = train(windows, cfg, tc, Quantizer::from_classes(1024.0, 16));
    ASSERT_FALSE(result.diverged);

    double best_loss = std::numeric_limits<double>::infinity();
    int reached_at = -1;
    for (std::size_t e = 0; e < result.checkpoint.history.size(); ++e) {
        best_loss = std::min(best_loss, result.checkpoint.history[e].train_loss);
        if (reached_at < 0 && result.checkpoint.history[e].train_loss <= 0.1) {
            reached_at = static_cast<int>(e) + 1;
        }
    }
    EXPECT_LE(best_loss, 0.1);
    EXPECT_GT(reached_at, 0);

    const auto model = result.checkpoint.to_model();
    const auto filled = fill_with_medians(window, result.checkpoint.median_classes);
    const auto predicted = argmax_classes(model, filled);
    std::size_t hits = 0;
    for (std::size_t i = 0; i < predicted.size(); ++i) {
        hits += predicted[i] == window.classes[i] ? 1 : 0;
    }
    const double accuracy = static_cast<double>(hits) / static_cast<double>(predicted.size());
    EXPECT_GE(accuracy, 0.99);
    const double secs =
        std::chrono::duration<double>(std::chrono::steady_clock::now() - started).count();
    EXPECT_LT(secs, 300.0);
    report("A4", "loss " + std::to_string(best_loss) + " nats/cell by iteration " +
                     std::to_string(reached_at) + ", argmax reconstruction " +
                     std::to_string(100.0 * accuracy) + "% (" + std::to_string(secs) + " s)");
}

TEST_F(Acceptance, A5_MetricOracle) {
    {
        const auto report_1 = compute_metrics({110.0, 190.0}, {100.0, 200.0}, {1, 1}, 1, 2);
        EXPECT_DOUBLE_EQ(report_1.mae, 10.0);
        EXPECT_DOUBLE_EQ(report_1.mape, 7.5);
        EXPECT_DOUBLE_EQ(report_1.rmse, 10.0);
    }
    {
        // per-trip RMSE 10 and 20 -> paper form 15, pooled sqrt(250)
        const int K = 3;
        std::vector<double> pred(2 * K), actual(2 * K, 100.0);
        std::fill(pred.begin(), pred.begin() + K, 110.0);
        std::fill(pred.begin() + K, pred.end(), 120.0);
        const auto report_2 = compute_metrics(pred, actual, std::vector<std::uint8_t>(2 * K, 1),
                                              2, K);
        EXPECT_DOUBLE_EQ(report_2.rmse, 15.0);
        EXPECT_NEAR(report_2.rmse_pooled, std::sqrt(250.0), 1e-12);
    }
    report("A5", "hand-computed MAE/MAPE/RMSE reproduced; per-trip RMSE distinct from pooled");
}

TEST_F(Acceptance, A6_SyntheticBenchmark) {
    const auto started = std::chrono::steady_clock::now();
    const auto events = generate_synthetic(benchmark_data_config());
    auto days = ingest_events(events).days;
    auto split = split_train_test(std::move(days), "2024-03-01");  // 60 train / 30 test
    ASSERT_EQ(split.train.size(), 60u);
    ASSERT_EQ(split.test.size(), 30u);

    ModelConfig cfg;
    cfg.first_filter = 5;
    cfg.inner_filter = 5;
    cfg.first_channels = 16;
    cfg.inner_channels = 16;
    cfg.inner_depth = 3;
    cfg.classes = 128;
    cfg.mask_variant = 2;
    cfg.window = 10;
    cfg.segments = 20;

    const auto quantizer = Quantizer::from_classes(1024.0, 128);
    const auto windows = make_windows(split.train, cfg.window, quantizer);
    TrainConfig tc;
    tc.batch_size = 32;
    tc.learning_rate = 0.01;
    tc.max_epochs = 12;
    tc.early_stop_patience = 4;
    tc.seed = 99991;
    const auto trained = train(windows, cfg, tc, quantizer, &std::cout);
    ASSERT_FALSE(trained.diverged);

    const ModelBundle bundle(trained.checkpoint);
    BaselineSet baselines;
    baselines.historical.emplace(split.train);
    BenchmarkOptions options;
    options.trip_start = false;
    options.probes = {{11, 10}, {11, 0}};  // segment K/2+1 with and without half prefix
    const auto rows = run_benchmark(bundle, baselines, split.test, options);

    double cnn_one_step = -1.0, hist_one_step = -1.0;
    double probe_half = -1.0, probe_start = -1.0;
    std::size_t probe_cells = 0;
    for (const auto& row : rows) {
        if (row.predictor == "mask-cnn" && row.setting == "one_step") {
            cnn_one_step = row.report.mape;
        }
        if (row.predictor == "historical-mean" && row.setting == "one_step") {
            hist_one_step = row.report.mape;
        }
        if (row.predictor == "mask-cnn" && row.setting == "seg11_prefix10") {
            probe_half = row.report.mape;
            probe_cells = row.report.valid_cells;
        }
        if (row.predictor == "mask-cnn" && row.setting == "seg11_prefix0") {
            probe_start = row.report.mape;
        }
    }
    ASSERT_GE(cnn_one_step, 0.0);
    ASSERT_GE(hist_one_step, 0.0);
    ASSERT_GE(probe_half, 0.0);
    ASSERT_GE(probe_start, 0.0);
    EXPECT_GE(probe_cells, 500u);  // averaged over >= 500 predictions
    EXPECT_LE(cnn_one_step, hist_one_step);
    EXPECT_LE(probe_half, probe_start);
    const double secs =
        std::chrono::duration<double>(std::chrono::steady_clock::now() - started).count();
    EXPECT_LT(secs, 1800.0);
    report("A6", "one-step MAPE cnn " + std::to_string(cnn_one_step) + "% vs historical " +
                     std::to_string(hist_one_step) + "%; seg-11 MAPE half-prefix " +
                     std::to_string(probe_half) + "% vs trip-start " +
                     std::to_string(probe_start) + "% over " + std::to_string(probe_cells) +
                     " predictions (" + std::to_string(secs) + " s)");
}

TEST_F(Acceptance, A7_DeterminismAndPersistence) {
    const auto started = std::chrono::steady_clock::now();
    // train twice with one seed -> identical checkpoints
    std::vector<QuantizedWindow> windows;
    for (int i = 0; i < 8; ++i) windows.push_back(random_window(6, 8, 16, 600 + i));
    ModelConfig cfg;
    cfg.first_filter = 3;
    cfg.inner_filter = 3;
    cfg.first_channels = 8;
    cfg.inner_channels = 8;
    cfg.inner_depth = 2;
    cfg.classes = 16;
    cfg.mask_variant = 2;
    cfg.window = 6;
    cfg.segments = 8;
    TrainConfig tc;
    tc.batch_size = 4;
    tc.max_epochs = 4;
    tc.seed = 601;
    const auto a = train(windows, cfg, tc, Quantizer::from_classes(1024.0, 16));
    const auto b = train(windows, cfg, tc, Quantizer::from_classes(1024.0, 16));
    const auto bytes_a = serialize_checkpoint(a.checkpoint);
    EXPECT_EQ(bytes_a, serialize_checkpoint(b.checkpoint));

    // save / load / forward bitwise round trip
    const auto path = std::filesystem::temp_directory_path() / "mcnn_acceptance_a7.mcnn";
    save_checkpoint(a.checkpoint, path.string());
    const auto loaded = load_checkpoint(path.string());
    std::filesystem::remove(path);
    const auto model_before = a.checkpoint.to_model();
    const auto model_after = loaded.to_model();
    const auto probe = fill_with_medians(windows[0], a.checkpoint.median_classes);
    EXPECT_EQ(model_before.forward(model_before.scale_input(probe)).data,
              model_after.forward(model_after.scale_input(probe)).data);

    // serve replay reproducibility
    const auto bundle = std::make_shared<const ModelBundle>(a.checkpoint);
    const std::vector<std::string> log = {
        R"({"cmd":"start","trip":"T1"})",
        R"({"cmd":"obs","trip":"T1","segment":1,"seconds":120})",
        R"({"cmd":"obs","trip":"T1","segment":2,"seconds":95})",
        R"({"cmd":"start","trip":"T2"})",
        R"({"cmd":"end","trip":"T1"})",
        R"({"cmd":"obs","trip":"T2","segment":1,"seconds":200})",
    };
    auto replay = [&]() {
        SessionServer server(bundle);
        std::string out;
        for (const auto& line : log) out += server.handle_line(line) + "\n";
        return out;
    };
    EXPECT_EQ(replay(), replay());
    const double secs =
        std::chrono::duration<double>(std::chrono::steady_clock::now() - started).count();
    EXPECT_LT(secs, 300.0);
    report("A7", "checkpoint equality, bitwise save/load/forward, serve replay (" +
                     std::to_string(secs) + " s)");
}

TEST_F(Acceptance, A8_TunerContract) {
    const auto started = std::chrono::steady_clock::now();
    SyntheticConfig data_cfg;
    data_cfg.segments = 8;
    data_cfg.trips_per_day = 15;
    data_cfg.days = 12;
    data_cfg.start_date = "2024-05-01";
    data_cfg.base_profile = SyntheticConfig::flat_profile(8, 140.0);
    data_cfg.rush_multiplier = SyntheticConfig::two_peak_rush(15, 1.3);
    data_cfg.trip_persistence = 0.6;
    data_cfg.noise_sd = 6.0;
    data_cfg.seed = 808;
    auto days = ingest_events(generate_synthetic(data_cfg)).days;
    auto split = split_train_test(std::move(days), "2024-05-09");  // 8 train / 4 val

    TuneGrid grid;
    grid.filters = {3, 5};
    grid.mask_variants = {1, 2};
    grid.class_counts = {128, 256};

    ModelConfig base;
    base.first_channels = 8;
    base.inner_channels = 8;
    base.inner_depth = 2;
    base.window = 10;

    TrainConfig tc;
    tc.batch_size = 16;
    tc.max_epochs = 4;
    tc.early_stop_patience = 4;
    tc.seed = 809;

    const auto result = tune_grid(grid, split.train, split.test, base, tc, &std::cout);
    ASSERT_TRUE(result.has_best);
    ASSERT_EQ(result.table.size(), 8u);

    // argmin with documented tie-breaking: (MAPE, C, F, variant)
    const TuneEntry* expected = nullptr;
    for (const auto& e : result.table) {
        if (e.failed) continue;
        if (!expected ||
            std::tie(e.val_mape, e.classes, e.filter, e.mask_variant) <
                std::tie(expected->val_mape, expected->classes, expected->filter,
                         expected->mask_variant)) {
            expected = &e;
        }
    }
    ASSERT_NE(expected, nullptr);
    EXPECT_EQ(result.best.first_filter, expected->filter);
    EXPECT_EQ(result.best.mask_variant, expected->mask_variant);
    EXPECT_EQ(result.best.classes, expected->classes);

    // deterministic under a fixed seed
    const auto again = tune_grid(grid, split.train, split.test, base, tc);
    ASSERT_EQ(again.table.size(), result.table.size());
    for (std::size_t i = 0; i < result.table.size(); ++i) {
        EXPECT_EQ(again.table[i].val_mape, result.table[i].val_mape);
        EXPECT_EQ(again.table[i].failed, result.table[i].failed);
    }
    EXPECT_EQ(again.best.first_filter, result.best.first_filter);
    EXPECT_EQ(again.best.mask_variant, result.best.mask_variant);
    EXPECT_EQ(again.best.classes, result.best.classes);

    const double secs =
        std::chrono::duration<double>(std::chrono::steady_clock::now() - started).count();
    EXPECT_LT(secs, 1200.0);
    report("A8", "2x2x2 grid argmin with tie-breaking, deterministic (best: F" +
                     std::to_string(result.best.first_filter) + "/mask" +
                     std::to_string(result.best.mask_variant) + "/C" +
                     std::to_string(result.best.classes) + ", " + std::to_string(secs) + " s)");
}
