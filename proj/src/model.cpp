#include "smcnn/model.hpp"

#include "smcnn/binio.hpp"

namespace smcnn {

std::string to_string(const Shape3& s) {
    return "(" + std::to_string(s.t) + "," + std::to_string(s.c) + "," + std::to_string(s.f) + ")";
}

ArchDescriptor build_sm_cnn() {
    ArchDescriptor arch;
    arch.input = {300, 16, 1};
    auto& L = arch.layers;
    L.push_back(nn::CircularPadChannels{1});
    const int filters[5] = {16, 32, 64, 128, 256};
    int c_in = 1;
    for (int stage = 0; stage < 5; ++stage) {
        L.push_back(nn::Conv2D{2, 2, c_in, filters[stage]});
        L.push_back(nn::ReLU{});
        L.push_back(stage < 4 ? nn::MaxPool{2, 1} : nn::MaxPool{2, 2});
        c_in = filters[stage];
    }
    L.push_back(nn::Flatten{});
    L.push_back(nn::Dense{12288, 128});
    L.push_back(nn::ReLU{});
    L.push_back(nn::Dense{128, 2});
    L.push_back(nn::Softmax{});
    return arch;
}

Shape3 layer_output_shape(const nn::LayerSpec& layer, const Shape3& in) {
    return std::visit(
        [&](const auto& l) -> Shape3 {
            using L = std::decay_t<decltype(l)>;
            if constexpr (std::is_same_v<L, nn::CircularPadChannels>) {
                if (l.width != 1)
                    throw UsageError("shape chain: circular pad supports width 1 only");
                if (in.c < 2) throw UsageError("shape chain: circular pad needs >= 2 channels");
                return {in.t, in.c + 2 * l.width, in.f};
            } else if constexpr (std::is_same_v<L, nn::Conv2D>) {
                if (in.f != l.c_in) throw UsageError("shape chain: conv feature mismatch at " +
                                                     to_string(in));
                if (in.t < l.kh || in.c < l.kw)
                    throw UsageError("shape chain: conv kernel larger than input");
                return {in.t - l.kh + 1, in.c - l.kw + 1, l.c_out};
            } else if constexpr (std::is_same_v<L, nn::MaxPool>) {
                if (in.t < l.ph || in.c < l.pw)
                    throw UsageError("shape chain: pool larger than input");
                return {in.t / l.ph, in.c / l.pw, in.f};
            } else if constexpr (std::is_same_v<L, nn::Flatten>) {
                return {in.t * in.c * in.f, 1, 1};
            } else if constexpr (std::is_same_v<L, nn::Dense>) {
                if (in.t * in.c * in.f != l.d_in)
                    throw UsageError("shape chain: dense input mismatch at " + to_string(in));
                return {l.d_out, 1, 1};
            } else {
                return in;  // ReLU, Softmax
            }
        },
        layer);
}

std::vector<Shape3> shape_chain(const ArchDescriptor& arch) {
    std::vector<Shape3> chain;
    chain.reserve(arch.layers.size() + 1);
    chain.push_back(arch.input);
    for (const auto& layer : arch.layers) chain.push_back(layer_output_shape(layer, chain.back()));
    return chain;
}

std::vector<std::pair<std::int64_t, std::int64_t>> param_block_shapes(const ArchDescriptor& arch) {
    std::vector<std::pair<std::int64_t, std::int64_t>> shapes;
    for (const auto& layer : arch.layers) {
        if (const auto* conv = std::get_if<nn::Conv2D>(&layer))
            shapes.emplace_back(std::int64_t(conv->kh) * conv->kw * conv->c_in * conv->c_out,
                                conv->c_out);
        else if (const auto* dense = std::get_if<nn::Dense>(&layer))
            shapes.emplace_back(std::int64_t(dense->d_in) * dense->d_out, dense->d_out);
    }
    return shapes;
}

std::int64_t param_count(const ArchDescriptor& arch) {
    std::int64_t total = 0;
    for (auto [w, b] : param_block_shapes(arch)) total += w + b;
    return total;
}

FlopCount flop_count(const ArchDescriptor& arch) {
    FlopCount fc;
    Shape3 shape = arch.input;
    for (const auto& layer : arch.layers) {
        const Shape3 out = layer_output_shape(layer, shape);
        if (const auto* conv = std::get_if<nn::Conv2D>(&layer)) {
            fc.macs += std::int64_t(conv->kh) * conv->kw * conv->c_in * conv->c_out * out.t * out.c;
        } else if (const auto* dense = std::get_if<nn::Dense>(&layer)) {
            fc.macs += std::int64_t(dense->d_in) * dense->d_out;
        } else if (const auto* pool = std::get_if<nn::MaxPool>(&layer)) {
            fc.comparisons += (std::int64_t(pool->ph) * pool->pw - 1) * out.t * out.c * out.f;
        } else if (std::holds_alternative<nn::ReLU>(layer)) {
            fc.comparisons += std::int64_t(shape.t) * shape.c * shape.f;
        }
        shape = out;
    }
    fc.flops = 2 * fc.macs;
    return fc;
}

namespace detail {

std::vector<int> param_index_per_layer(const ArchDescriptor& arch) {
    std::vector<int> idx(arch.layers.size(), -1);
    int next = 0;
    for (std::size_t i = 0; i < arch.layers.size(); ++i) {
        if (std::holds_alternative<nn::Conv2D>(arch.layers[i]) ||
            std::holds_alternative<nn::Dense>(arch.layers[i]))
            idx[i] = next++;
    }
    return idx;
}

}  // namespace detail

std::pair<float, float> classify(const ArchDescriptor& arch, const nn::Parameters<float>& params,
                                 const WindowSample& sample) {
    if (Shape3{sample.values.t, sample.values.c, sample.values.f} != arch.input)
        throw UsageError("classify: window shape " +
                         to_string({sample.values.t, sample.values.c, sample.values.f}) +
                         " does not match model input " + to_string(arch.input));
    const auto probs = forward(arch, params, sample.values);
    return {probs[1], probs[0]};
}

// ---- checkpoint ------------------------------------------------------------

namespace {

constexpr char kCheckpointMagic[5] = {'S', 'M', 'C', 'K', '1'};
constexpr std::uint16_t kCheckpointVersion = 1;

enum class LayerTag : std::uint8_t {
    Pad = 0,
    Conv = 1,
    Pool = 2,
    Relu = 3,
    Flatten = 4,
    Dense = 5,
    Softmax = 6,
};

void encode_layer(io::ByteWriter& w, const nn::LayerSpec& layer) {
    std::int32_t a = 0, b = 0, c = 0, d = 0;
    LayerTag tag = LayerTag::Relu;
    std::visit(
        [&](const auto& l) {
            using L = std::decay_t<decltype(l)>;
            if constexpr (std::is_same_v<L, nn::CircularPadChannels>) {
                tag = LayerTag::Pad;
                a = l.width;
            } else if constexpr (std::is_same_v<L, nn::Conv2D>) {
                tag = LayerTag::Conv;
                a = l.kh;
                b = l.kw;
                c = l.c_in;
                d = l.c_out;
            } else if constexpr (std::is_same_v<L, nn::MaxPool>) {
                tag = LayerTag::Pool;
                a = l.ph;
                b = l.pw;
            } else if constexpr (std::is_same_v<L, nn::ReLU>) {
                tag = LayerTag::Relu;
            } else if constexpr (std::is_same_v<L, nn::Flatten>) {
                tag = LayerTag::Flatten;
            } else if constexpr (std::is_same_v<L, nn::Dense>) {
                tag = LayerTag::Dense;
                a = l.d_in;
                b = l.d_out;
            } else {
                tag = LayerTag::Softmax;
            }
        },
        layer);
    w.u8(std::uint8_t(tag));
    w.i32(a);
    w.i32(b);
    w.i32(c);
    w.i32(d);
}

nn::LayerSpec decode_layer(io::ByteReader& r) {
    const auto tag = LayerTag(r.u8());
    const std::int32_t a = r.i32(), b = r.i32(), c = r.i32(), d = r.i32();
    switch (tag) {
        case LayerTag::Pad: return nn::CircularPadChannels{a};
        case LayerTag::Conv: return nn::Conv2D{a, b, c, d};
        case LayerTag::Pool: return nn::MaxPool{a, b};
        case LayerTag::Relu: return nn::ReLU{};
        case LayerTag::Flatten: return nn::Flatten{};
        case LayerTag::Dense: return nn::Dense{a, b};
        case LayerTag::Softmax: return nn::Softmax{};
    }
    throw FormatError("checkpoint: unknown layer tag");
}

}  // namespace

void save_checkpoint(const ArchDescriptor& arch, const nn::Parameters<float>& params,
                     const std::string& path) {
    const auto shapes = param_block_shapes(arch);
    if (shapes.size() != params.blocks.size())
        throw UsageError("save_checkpoint: parameters do not match architecture");
    io::ByteWriter w;
    w.bytes(kCheckpointMagic, sizeof kCheckpointMagic);
    w.u16(kCheckpointVersion);
    w.u32(std::uint32_t(arch.layers.size()));
    for (const auto& layer : arch.layers) encode_layer(w, layer);
    w.i32(arch.input.t);
    w.i32(arch.input.c);
    w.i32(arch.input.f);
    w.u64(std::uint64_t(params.count()));
    for (std::size_t i = 0; i < params.blocks.size(); ++i) {
        if (std::int64_t(params.blocks[i].w.size()) != shapes[i].first ||
            std::int64_t(params.blocks[i].b.size()) != shapes[i].second)
            throw UsageError("save_checkpoint: block shape mismatch");
        w.f32_array(params.blocks[i].w.data(), params.blocks[i].w.size());
        w.f32_array(params.blocks[i].b.data(), params.blocks[i].b.size());
    }
    w.u32(w.checksum());
    io::write_file(path, w);
}

std::pair<ArchDescriptor, nn::Parameters<float>> load_checkpoint(const std::string& path) {
    const auto buf = io::read_file(path);
    if (buf.size() < sizeof kCheckpointMagic + sizeof(std::uint16_t) + sizeof(std::uint32_t))
        throw TruncatedError("checkpoint: file too small (" + std::to_string(buf.size()) +
                             " bytes)");
    io::ByteReader r(buf.data(), buf.size());
    r.expect_bytes(kCheckpointMagic, sizeof kCheckpointMagic, "checkpoint magic");
    const std::uint16_t version = r.u16();
    if (version != kCheckpointVersion)
        throw VersionError("checkpoint: unsupported version " + std::to_string(version));

    ArchDescriptor arch;
    const std::uint32_t layer_count = r.u32();
    arch.layers.reserve(layer_count);
    for (std::uint32_t i = 0; i < layer_count; ++i) arch.layers.push_back(decode_layer(r));
    arch.input = {r.i32(), r.i32(), r.i32()};
    const std::uint64_t declared = r.u64();

    const auto shapes = param_block_shapes(arch);
    std::uint64_t expected_floats = 0;
    for (auto [w, b] : shapes) expected_floats += std::uint64_t(w + b);
    if (declared != expected_floats)
        throw FormatError("checkpoint: declared parameter count does not match architecture");
    const std::size_t expected_size =
        r.position() + std::size_t(expected_floats) * sizeof(float) + sizeof(std::uint32_t);
    if (buf.size() < expected_size) throw TruncatedError("checkpoint: payload truncated");
    if (buf.size() > expected_size) throw FormatError("checkpoint: trailing bytes");

    const std::uint32_t stored_crc =
        std::uint32_t(buf[buf.size() - 4]) | std::uint32_t(buf[buf.size() - 3]) << 8 |
        std::uint32_t(buf[buf.size() - 2]) << 16 | std::uint32_t(buf[buf.size() - 1]) << 24;
    if (io::crc32(buf.data(), buf.size() - 4) != stored_crc)
        throw ChecksumError("checkpoint: checksum mismatch");

    nn::Parameters<float> params;
    for (auto [wn, bn] : shapes) {
        nn::ParamBlock<float> blk;
        blk.w.resize(std::size_t(wn));
        blk.b.resize(std::size_t(bn));
        r.f32_array(blk.w.data(), blk.w.size());
        r.f32_array(blk.b.data(), blk.b.size());
        params.blocks.push_back(std::move(blk));
    }
    return {std::move(arch), std::move(params)};
}

}  // namespace smcnn
