#include <gtest/gtest.h>

#include <cmath>

#include "mcnn/model.hpp"
#include "mcnn/rng.hpp"

using namespace mcnn;

namespace {

ModelConfig tiny_config() {
    ModelConfig cfg;
    cfg.first_filter = 3;
    cfg.inner_filter = 3;
    cfg.first_channels = 8;
    cfg.inner_channels = 8;
    cfg.inner_depth = 2;
    cfg.classes = 8;
    cfg.mask_variant = 2;
    cfg.window = 6;
    cfg.segments = 8;
    return cfg;
}

std::vector<int> random_grid(const ModelConfig& cfg, std::uint64_t seed) {
    Rng rng(seed);
    std::vector<int> grid(static_cast<std::size_t>(cfg.window) * cfg.segments);
    for (auto& c : grid) c = static_cast<int>(rng.below(cfg.classes));
    return grid;
}

}  // namespace

TEST(Model, PaperConfigLayerStack) {
    ModelConfig cfg;  // defaults follow the tuned configuration
    cfg.segments = 20;
    cfg.window = 10;
    MaskCnn model(cfg, 1);
    // 1 mask-A + 6 mask-B convolutions + the 1x1 output head
    ASSERT_EQ(model.layers().size(), 8u);
    EXPECT_EQ(model.layers()[0].params.mask.kind, MaskKind::A);
    EXPECT_EQ(model.layers()[0].params.filter_size(), 5);
    EXPECT_EQ(model.layers()[0].padding, 2);
    for (int i = 1; i <= 6; ++i) {
        EXPECT_EQ(model.layers()[i].params.mask.kind, MaskKind::B);
        EXPECT_EQ(model.layers()[i].params.filter_size(), 5);
    }
    EXPECT_EQ(model.layers().back().params.filter_size(), 1);
    EXPECT_EQ(model.layers().back().params.out_channels, 512);

    const auto logits = model.forward(model.scale_input(random_grid(cfg, 2)));
    EXPECT_EQ(logits.channels, 512);
    EXPECT_EQ(logits.rows, 10);
    EXPECT_EQ(logits.cols, 20);
}

TEST(Model, InitScaleMatchesFanIn) {
    auto cfg = tiny_config();
    cfg.first_filter = 3;
    cfg.mask_variant = 1;
    cfg.first_channels = 128;
    MaskCnn model(cfg, 3);
    // fan_in = 1 * 3 * 3 = 9 -> scale sqrt(2/9) ~ 0.4714; estimate over the
    // unmasked first-layer weights
    const auto& p = model.layers()[0].params;
    double sum = 0.0, sq = 0.0;
    std::size_t n = 0;
    for (int oc = 0; oc < p.out_channels; ++oc) {
        for (int fr = 0; fr < 3; ++fr) {
            for (int fc = 0; fc < 3; ++fc) {
                if (!p.mask.at(fr, fc)) continue;
                const double w = p.weights[p.weight_index(oc, 0, fr, fc)];
                sum += w;
                sq += w * w;
                ++n;
            }
        }
    }
    const double mean = sum / static_cast<double>(n);
    const double sd = std::sqrt(sq / static_cast<double>(n) - mean * mean);
    EXPECT_NEAR(sd, std::sqrt(2.0 / 9.0), 0.05);
    EXPECT_NEAR(mean, 0.0, 0.05);
}

TEST(Model, MaskedWeightsStartAtZero) {
    MaskCnn model(tiny_config(), 4);
    for (const auto& layer : model.layers()) {
        const auto& p = layer.params;
        const int F = p.filter_size();
        for (int oc = 0; oc < p.out_channels; ++oc) {
            for (int ic = 0; ic < p.in_channels; ++ic) {
                for (int fr = 0; fr < F; ++fr) {
                    for (int fc = 0; fc < F; ++fc) {
                        if (!p.mask.at(fr, fc)) {
                            EXPECT_EQ(p.weights[p.weight_index(oc, ic, fr, fc)], 0.0);
                        }
                    }
                }
            }
        }
    }
}

TEST(Model, BiasesStartAtZero) {
    MaskCnn model(tiny_config(), 4);
    for (const auto& layer : model.layers()) {
        for (double b : layer.params.bias) EXPECT_EQ(b, 0.0);
    }
}

TEST(Model, SameSeedSameParameters) {
    MaskCnn a(tiny_config(), 42);
    MaskCnn b(tiny_config(), 42);
    for (std::size_t l = 0; l < a.layers().size(); ++l) {
        EXPECT_EQ(a.layers()[l].params.weights, b.layers()[l].params.weights);
    }
    MaskCnn c(tiny_config(), 43);
    EXPECT_NE(a.layers()[0].params.weights, c.layers()[0].params.weights);
}

TEST(Model, ShapeContractAcrossConfigs) {
    for (int variant : {1, 2, 3}) {
        for (int F : {3, 5}) {
            auto cfg = tiny_config();
            cfg.first_filter = F;
            cfg.inner_filter = F;
            cfg.mask_variant = variant;
            MaskCnn model(cfg, 5);
            const auto logits = model.forward(model.scale_input(random_grid(cfg, 6)));
            EXPECT_EQ(logits.channels, cfg.classes);
            EXPECT_EQ(logits.rows, cfg.window);
            EXPECT_EQ(logits.cols, cfg.segments);
        }
    }
}

TEST(Model, CausalityEndToEnd) {
    // Logits at raster cell p must be bitwise invariant to any change at
    // raster positions >= p (mask A also hides p itself).
    const auto cfg = tiny_config();
    MaskCnn model(cfg, 7);
    Rng rng(8);
    const int H = cfg.window, K = cfg.segments;
    for (int trial = 0; trial < 12; ++trial) {
        auto grid = random_grid(cfg, 100 + trial);
        const auto base = model.forward(model.scale_input(grid));
        const int pr = static_cast<int>(rng.below(H));
        const int pc = static_cast<int>(rng.below(K));
        const std::size_t p = static_cast<std::size_t>(pr) * K + pc;
        auto perturbed = grid;
        for (std::size_t cell = p; cell < perturbed.size(); ++cell) {
            perturbed[cell] = static_cast<int>(rng.below(cfg.classes));
        }
        const auto out = model.forward(model.scale_input(perturbed));
        for (int ch = 0; ch < cfg.classes; ++ch) {
            const std::size_t idx = static_cast<std::size_t>(ch) * H * K + p;
            EXPECT_EQ(out.data[idx], base.data[idx])
                << "cell (" << pr << "," << pc << ") channel " << ch;
        }
    }
}

TEST(Model, StrictlyEarlierCellsDoInfluence) {
    const auto cfg = tiny_config();
    MaskCnn model(cfg, 9);
    auto grid = random_grid(cfg, 10);
    const auto base = model.forward(model.scale_input(grid));
    // flip an early cell and expect some later logit to move
    auto perturbed = grid;
    perturbed[0] = (perturbed[0] + cfg.classes / 2) % cfg.classes;
    const auto out = model.forward(model.scale_input(perturbed));
    EXPECT_NE(out.data, base.data);
}

TEST(Model, CustomMasksAccepted) {
    auto cfg = tiny_config();
    auto mask_a = build_mask(MaskKind::A, 1, 3);
    auto mask_b = build_mask(MaskKind::B, 1, 3);
    MaskCnn model(cfg, 11, std::make_pair(mask_a, mask_b));
    EXPECT_EQ(model.config().mask_variant, 0);
    EXPECT_EQ(model.layers()[0].params.mask.cells, mask_a.cells);
    EXPECT_EQ(model.layers()[1].params.mask.cells, mask_b.cells);
}

TEST(Model, RejectsBadConfigs) {
    auto cfg = tiny_config();
    cfg.first_filter = 4;
    EXPECT_THROW(MaskCnn(cfg, 1), ConfigError);
    cfg = tiny_config();
    cfg.inner_depth = 0;
    EXPECT_THROW(MaskCnn(cfg, 1), ConfigError);
    cfg = tiny_config();
    cfg.segments = 0;
    EXPECT_THROW(MaskCnn(cfg, 1), ConfigError);
    cfg = tiny_config();
    cfg.mask_variant = 5;
    EXPECT_THROW(MaskCnn(cfg, 1), ConfigError);
}
