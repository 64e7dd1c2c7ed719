#ifndef MCNN_CHECKPOINT_HPP
#define MCNN_CHECKPOINT_HPP

#include <bit>
#include <cstdint>
#include <cstring>
#include <fstream>
#include <string>
#include <utility>
#include <vector>

#include "mcnn/error.hpp"
#include "mcnn/mask.hpp"
#include "mcnn/model.hpp"
#include "mcnn/quantizer.hpp"

namespace mcnn {

struct TrainEpoch {
    double train_loss = 0.0;  // nats per valid cell
    double val_mape = 0.0;    // percent
};

/// Trained model bundle. Reload-then-forward is bitwise identical to the
/// pre-save forward: all parameters are stored as raw IEEE-754 doubles.
struct Checkpoint {
    ModelConfig model_config;
    Quantizer quantizer;
    std::vector<ConvLayer> layers;
    double learning_rate = 0.01;
    double rms_decay = 0.9;
    double rms_epsilon = 1e-8;
    std::uint8_t input_scaling = 0;  // 0 = affine map of classes onto [-1, 1]
    std::vector<int> median_classes;  // per-segment fill values
    std::vector<TrainEpoch> history;
    std::uint64_t seed = 0;

    MaskCnn to_model() const { return MaskCnn(model_config, layers); }
};

namespace detail {

inline constexpr std::uint16_t kCheckpointVersion = 1;

inline std::uint64_t fnv1a64(const std::uint8_t* data, std::size_t len) {
    std::uint64_t h = 14695981039346656037ull;
    for (std::size_t i = 0; i < len; ++i) {
        h ^= data[i];
        h *= 1099511628211ull;
    }
    return h;
}

class ByteWriter {
public:
    std::vector<std::uint8_t> bytes;

    void u8(std::uint8_t v) { bytes.push_back(v); }
    void u16(std::uint16_t v) {
        for (int i = 0; i < 2; ++i) bytes.push_back(static_cast<std::uint8_t>(v >> (8 * i)));
    }
    void u32(std::uint32_t v) {
        for (int i = 0; i < 4; ++i) bytes.push_back(static_cast<std::uint8_t>(v >> (8 * i)));
    }
    void u64(std::uint64_t v) {
        for (int i = 0; i < 8; ++i) bytes.push_back(static_cast<std::uint8_t>(v >> (8 * i)));
    }
    void i32(std::int32_t v) { u32(static_cast<std::uint32_t>(v)); }
    void f64(double v) { u64(std::bit_cast<std::uint64_t>(v)); }
    void raw(const void* data, std::size_t len) {
        const auto* p = static_cast<const std::uint8_t*>(data);
        bytes.insert(bytes.end(), p, p + len);
    }
};

class ByteReader {
public:
    ByteReader(const std::uint8_t* data, std::size_t len) : data_(data), len_(len) {}

    std::uint8_t u8() { return take(1)[0]; }
    std::uint16_t u16() { return gather<std::uint16_t>(2); }
    std::uint32_t u32() { return gather<std::uint32_t>(4); }
    std::uint64_t u64() { return gather<std::uint64_t>(8); }
    std::int32_t i32() { return static_cast<std::int32_t>(u32()); }
    double f64() { return std::bit_cast<double>(u64()); }
    const std::uint8_t* take(std::size_t n) {
        if (pos_ + n > len_) throw IoError("checkpoint: truncated section");
        const std::uint8_t* p = data_ + pos_;
        pos_ += n;
        return p;
    }
    bool done() const { return pos_ == len_; }

private:
    template <class T>
    T gather(int n) {
        const std::uint8_t* p = take(n);
        std::uint64_t v = 0;
        for (int i = 0; i < n; ++i) v |= static_cast<std::uint64_t>(p[i]) << (8 * i);
        return static_cast<T>(v);
    }

    const std::uint8_t* data_;
    std::size_t len_;
    std::size_t pos_ = 0;
};

inline void put_section(ByteWriter& out, const std::string& name,
                        const std::vector<std::uint8_t>& payload) {
    out.u16(static_cast<std::uint16_t>(name.size()));
    out.raw(name.data(), name.size());
    out.u64(payload.size());
    out.raw(payload.data(), payload.size());
}

}  // namespace detail

inline std::vector<std::uint8_t> serialize_checkpoint(const Checkpoint& cp) {
    using detail::ByteWriter;
    ByteWriter out;
    out.raw("MCNN", 4);
    out.u16(detail::kCheckpointVersion);

    std::vector<std::pair<std::string, std::vector<std::uint8_t>>> sections;
    {
        ByteWriter w;
        const auto& m = cp.model_config;
        w.i32(m.first_filter);
        w.i32(m.inner_filter);
        w.i32(m.first_channels);
        w.i32(m.inner_channels);
        w.i32(m.inner_depth);
        w.i32(m.classes);
        w.i32(m.mask_variant);
        w.i32(m.window);
        w.i32(m.segments);
        sections.emplace_back("model", std::move(w.bytes));
    }
    {
        ByteWriter w;
        w.f64(cp.quantizer.t_max);
        w.f64(cp.quantizer.level);
        w.i32(cp.quantizer.classes);
        sections.emplace_back("quantizer", std::move(w.bytes));
    }
    {
        ByteWriter w;
        w.f64(cp.learning_rate);
        w.f64(cp.rms_decay);
        w.f64(cp.rms_epsilon);
        sections.emplace_back("optimizer", std::move(w.bytes));
    }
    {
        ByteWriter w;
        w.u8(cp.input_scaling);
        sections.emplace_back("scaling", std::move(w.bytes));
    }
    {
        ByteWriter w;
        w.u32(static_cast<std::uint32_t>(cp.median_classes.size()));
        for (int v : cp.median_classes) w.i32(v);
        sections.emplace_back("medians", std::move(w.bytes));
    }
    {
        ByteWriter w;
        w.u64(cp.seed);
        sections.emplace_back("seed", std::move(w.bytes));
    }
    {
        ByteWriter w;
        w.u32(static_cast<std::uint32_t>(cp.history.size()));
        for (const auto& e : cp.history) {
            w.f64(e.train_loss);
            w.f64(e.val_mape);
        }
        sections.emplace_back("history", std::move(w.bytes));
    }
    for (std::size_t i = 0; i < cp.layers.size(); ++i) {
        const auto& p = cp.layers[i].params;
        const std::string prefix = "layer" + std::to_string(i);
        {
            ByteWriter w;
            w.u8(p.mask.kind == MaskKind::A ? 0 : 1);
            w.i32(p.mask.size);
            w.i32(p.mask.variant);
            w.raw(p.mask.cells.data(), p.mask.cells.size());
            sections.emplace_back(prefix + ".mask", std::move(w.bytes));
        }
        {
            ByteWriter w;
            w.u32(static_cast<std::uint32_t>(p.out_channels));
            w.u32(static_cast<std::uint32_t>(p.in_channels));
            w.u32(static_cast<std::uint32_t>(p.filter_size()));
            w.u32(static_cast<std::uint32_t>(p.filter_size()));
            for (double v : p.weights) w.f64(v);
            sections.emplace_back(prefix + ".weight", std::move(w.bytes));
        }
        {
            ByteWriter w;
            w.u32(static_cast<std::uint32_t>(p.bias.size()));
            for (double v : p.bias) w.f64(v);
            sections.emplace_back(prefix + ".bias", std::move(w.bytes));
        }
    }

    out.u32(static_cast<std::uint32_t>(sections.size()));
    for (const auto& [name, payload] : sections) detail::put_section(out, name, payload);
    out.u64(detail::fnv1a64(out.bytes.data(), out.bytes.size()));
    return std::move(out.bytes);
}

inline Checkpoint deserialize_checkpoint(const std::vector<std::uint8_t>& bytes) {
    using detail::ByteReader;
    if (bytes.size() < 4 + 2 + 4 + 8 || std::memcmp(bytes.data(), "MCNN", 4) != 0) {
        throw IoError("checkpoint: bad magic");
    }
    const std::size_t body = bytes.size() - 8;
    ByteReader tail(bytes.data() + body, 8);
    if (tail.u64() != detail::fnv1a64(bytes.data(), body)) {
        throw IoError("checkpoint: checksum mismatch");
    }
    ByteReader in(bytes.data() + 4, body - 4);
    const std::uint16_t version = in.u16();
    if (version != detail::kCheckpointVersion) {
        throw IoError("checkpoint: unsupported format version " + std::to_string(version));
    }

    Checkpoint cp;
    struct LayerParts {
        bool has_mask = false, has_weight = false, has_bias = false;
        MaskSpec mask;
        int out_ch = 0, in_ch = 0, fr = 0, fc = 0;
        std::vector<double> weights;
        std::vector<double> bias;
    };
    std::vector<LayerParts> layer_parts;
    auto layer_at = [&](std::size_t i) -> LayerParts& {
        if (layer_parts.size() <= i) layer_parts.resize(i + 1);
        return layer_parts[i];
    };

    const std::uint32_t section_count = in.u32();
    for (std::uint32_t s = 0; s < section_count; ++s) {
        const std::uint16_t name_len = in.u16();
        const std::uint8_t* name_ptr = in.take(name_len);
        const std::string name(reinterpret_cast<const char*>(name_ptr), name_len);
        const std::uint64_t payload_len = in.u64();
        ByteReader w(in.take(payload_len), payload_len);

        if (name == "model") {
            auto& m = cp.model_config;
            m.first_filter = w.i32();
            m.inner_filter = w.i32();
            m.first_channels = w.i32();
            m.inner_channels = w.i32();
            m.inner_depth = w.i32();
            m.classes = w.i32();
            m.mask_variant = w.i32();
            m.window = w.i32();
            m.segments = w.i32();
        } else if (name == "quantizer") {
            cp.quantizer.t_max = w.f64();
            cp.quantizer.level = w.f64();
            cp.quantizer.classes = w.i32();
        } else if (name == "optimizer") {
            cp.learning_rate = w.f64();
            cp.rms_decay = w.f64();
            cp.rms_epsilon = w.f64();
        } else if (name == "scaling") {
            cp.input_scaling = w.u8();
        } else if (name == "medians") {
            const std::uint32_t n = w.u32();
            cp.median_classes.resize(n);
            for (std::uint32_t i = 0; i < n; ++i) cp.median_classes[i] = w.i32();
        } else if (name == "seed") {
            cp.seed = w.u64();
        } else if (name == "history") {
            const std::uint32_t n = w.u32();
            cp.history.resize(n);
            for (std::uint32_t i = 0; i < n; ++i) {
                cp.history[i].train_loss = w.f64();
                cp.history[i].val_mape = w.f64();
            }
        } else if (name.rfind("layer", 0) == 0) {
            const std::size_t dot = name.find('.');
            if (dot == std::string::npos) throw IoError("checkpoint: bad section '" + name + "'");
            const std::size_t idx = std::stoul(name.substr(5, dot - 5));
            const std::string part = name.substr(dot + 1);
            auto& lp = layer_at(idx);
            if (part == "mask") {
                lp.mask.kind = w.u8() == 0 ? MaskKind::A : MaskKind::B;
                lp.mask.size = w.i32();
                lp.mask.variant = w.i32();
                const std::size_t n = static_cast<std::size_t>(lp.mask.size) * lp.mask.size;
                const std::uint8_t* cells = w.take(n);
                lp.mask.cells.assign(cells, cells + n);
                lp.has_mask = true;
            } else if (part == "weight") {
                lp.out_ch = static_cast<int>(w.u32());
                lp.in_ch = static_cast<int>(w.u32());
                lp.fr = static_cast<int>(w.u32());
                lp.fc = static_cast<int>(w.u32());
                const std::size_t n =
                    static_cast<std::size_t>(lp.out_ch) * lp.in_ch * lp.fr * lp.fc;
                lp.weights.resize(n);
                for (std::size_t i = 0; i < n; ++i) lp.weights[i] = w.f64();
                lp.has_weight = true;
            } else if (part == "bias") {
                const std::uint32_t n = w.u32();
                lp.bias.resize(n);
                for (std::uint32_t i = 0; i < n; ++i) lp.bias[i] = w.f64();
                lp.has_bias = true;
            } else {
                throw IoError("checkpoint: unknown layer section '" + name + "'");
            }
        } else {
            throw IoError("checkpoint: unknown section '" + name + "'");
        }
    }

    for (std::size_t i = 0; i < layer_parts.size(); ++i) {
        auto& lp = layer_parts[i];
        if (!lp.has_mask || !lp.has_weight || !lp.has_bias) {
            throw IoError("checkpoint: incomplete layer " + std::to_string(i));
        }
        if (lp.fr != lp.mask.size || lp.fc != lp.mask.size) {
            throw IoError("checkpoint: layer " + std::to_string(i) +
                          " filter/mask size mismatch");
        }
        ConvLayerParams params(lp.out_ch, lp.in_ch, lp.mask);
        params.weights = std::move(lp.weights);
        params.bias = std::move(lp.bias);
        const int padding = (lp.mask.size - 1) / 2;
        cp.layers.push_back(ConvLayer{std::move(params), padding});
    }
    if (cp.layers.empty()) throw IoError("checkpoint: no layers");
    if (cp.median_classes.size() != static_cast<std::size_t>(cp.model_config.segments)) {
        throw IoError("checkpoint: median table does not match segment count");
    }
    return cp;
}

inline void save_checkpoint(const Checkpoint& cp, const std::string& path) {
    const auto bytes = serialize_checkpoint(cp);
    std::ofstream out(path, std::ios::binary | std::ios::trunc);
    if (!out) throw IoError("cannot open checkpoint file for writing: " + path);
    out.write(reinterpret_cast<const char*>(bytes.data()),
              static_cast<std::streamsize>(bytes.size()));
    if (!out) throw IoError("failed writing checkpoint: " + path);
}

inline Checkpoint load_checkpoint(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw IoError("cannot open checkpoint file: " + path);
    std::vector<std::uint8_t> bytes((std::istreambuf_iterator<char>(in)),
                                    std::istreambuf_iterator<char>());
    return deserialize_checkpoint(bytes);
}

}  // namespace mcnn

#endif  // MCNN_CHECKPOINT_HPP
