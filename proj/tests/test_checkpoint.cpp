#include <gtest/gtest.h>

#include <cstdio>
#include <filesystem>

#include "mcnn/checkpoint.hpp"
#include "mcnn/rng.hpp"

using namespace mcnn;

namespace {

Checkpoint sample_checkpoint(std::uint64_t seed = 17) {
    ModelConfig cfg;
    cfg.first_filter = 3;
    cfg.inner_filter = 3;
    cfg.first_channels = 4;
    cfg.inner_channels = 4;
    cfg.inner_depth = 2;
    cfg.classes = 16;
    cfg.mask_variant = 2;
    cfg.window = 5;
    cfg.segments = 6;

    Checkpoint cp;
    cp.model_config = cfg;
    cp.quantizer = Quantizer::from_classes(1024.0, 16);
    cp.layers = MaskCnn(cfg, seed).layers();
    cp.median_classes = {3, 4, 5, 6, 7, 8};
    cp.history = {{2.5, 40.0}, {1.9, 31.5}};
    cp.seed = seed;
    return cp;
}

std::vector<int> some_grid(const ModelConfig& cfg) {
    Rng rng(5);
    std::vector<int> grid(static_cast<std::size_t>(cfg.window) * cfg.segments);
    for (auto& c : grid) c = static_cast<int>(rng.below(cfg.classes));
    return grid;
}

}  // namespace

TEST(Checkpoint, SerializeRoundTripIsBitwise) {
    const auto cp = sample_checkpoint();
    const auto bytes = serialize_checkpoint(cp);
    const auto back = deserialize_checkpoint(bytes);

    EXPECT_EQ(back.model_config.classes, cp.model_config.classes);
    EXPECT_EQ(back.quantizer.level, cp.quantizer.level);
    EXPECT_EQ(back.median_classes, cp.median_classes);
    EXPECT_EQ(back.seed, cp.seed);
    ASSERT_EQ(back.history.size(), 2u);
    EXPECT_EQ(back.history[1].train_loss, 1.9);

    const auto model_before = cp.to_model();
    const auto model_after = back.to_model();
    const auto grid = some_grid(cp.model_config);
    const auto a = model_before.forward(model_before.scale_input(grid));
    const auto b = model_after.forward(model_after.scale_input(grid));
    EXPECT_EQ(a.data, b.data);  // bitwise identical forward
}

TEST(Checkpoint, FileRoundTrip) {
    const auto cp = sample_checkpoint(23);
    const auto path = std::filesystem::temp_directory_path() / "mcnn_cp_test.mcnn";
    save_checkpoint(cp, path.string());
    const auto back = load_checkpoint(path.string());
    EXPECT_EQ(serialize_checkpoint(back), serialize_checkpoint(cp));
    std::filesystem::remove(path);
}

TEST(Checkpoint, EveryCorruptedByteIsDetected) {
    const auto bytes = serialize_checkpoint(sample_checkpoint());
    Rng rng(9);
    for (int trial = 0; trial < 50; ++trial) {
        auto corrupted = bytes;
        const std::size_t pos = rng.below(corrupted.size());
        corrupted[pos] ^= 0x40;
        EXPECT_THROW(deserialize_checkpoint(corrupted), IoError) << "byte " << pos;
    }
}

TEST(Checkpoint, TruncationDetected) {
    auto bytes = serialize_checkpoint(sample_checkpoint());
    bytes.resize(bytes.size() - 3);
    EXPECT_THROW(deserialize_checkpoint(bytes), IoError);
}

TEST(Checkpoint, UnknownVersionRejected) {
    auto bytes = serialize_checkpoint(sample_checkpoint());
    // rewrite the version field and fix the checksum so only the version trips
    bytes[4] = 99;
    bytes[5] = 0;
    const std::size_t body = bytes.size() - 8;
    const std::uint64_t sum = detail::fnv1a64(bytes.data(), body);
    for (int i = 0; i < 8; ++i) bytes[body + i] = static_cast<std::uint8_t>(sum >> (8 * i));
    try {
        deserialize_checkpoint(bytes);
        FAIL() << "expected version error";
    } catch (const IoError& e) {
        EXPECT_NE(std::string(e.what()).find("version"), std::string::npos);
    }
}

TEST(Checkpoint, BadMagicRejected) {
    auto bytes = serialize_checkpoint(sample_checkpoint());
    bytes[0] = 'X';
    EXPECT_THROW(deserialize_checkpoint(bytes), IoError);
}

TEST(Checkpoint, MissingFileRejected) {
    EXPECT_THROW(load_checkpoint("/nonexistent/path/model.mcnn"), IoError);
}
