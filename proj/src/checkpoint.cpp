#include "burncnn/checkpoint.hpp"

#include <bit>
#include <fstream>
#include <iterator>
#include <limits>

#include "burncnn/errors.hpp"

namespace burncnn {

using nlohmann::json;

namespace {

constexpr std::uint32_t kMaxRank = 8;

// ---- spec <-> json ------------------------------------------------------------

json layer_to_json(const LayerSpec& layer) {
    json j;
    j["name"] = layer.name;
    j["kind"] = to_string(layer.kind());
    if (const auto* p = std::get_if<ConvParams>(&layer.params)) {
        j["kernel"] = {p->kernel_height, p->kernel_width};
        j["stride"] = p->stride;
        j["padding"] = p->padding;
        j["in_channels"] = p->input_channels;
        j["out_channels"] = p->output_channels;
        j["groups"] = p->groups;
    } else if (const auto* p = std::get_if<LrnParams>(&layer.params)) {
        j["local_size"] = p->local_size;
        j["bias"] = p->bias;
        j["alpha"] = p->alpha;
        j["beta"] = p->beta;
    } else if (const auto* p = std::get_if<PoolParams>(&layer.params)) {
        j["window"] = p->window;
        j["stride"] = p->stride;
    } else if (const auto* p = std::get_if<LinearLayer>(&layer.params)) {
        j["in_features"] = p->in_features;
        j["out_features"] = p->out_features;
    } else if (const auto* p = std::get_if<DropoutLayer>(&layer.params)) {
        j["rate"] = p->rate;
    }
    if (layer.has_parameters()) j["trainable"] = layer.trainable;
    return j;
}

LayerSpec layer_from_json(const json& j) {
    LayerSpec layer;
    layer.name = j.at("name").get<std::string>();
    const auto kind = j.at("kind").get<std::string>();
    if (kind == "conv") {
        ConvParams p;
        p.kernel_height = j.at("kernel").at(0).get<std::size_t>();
        p.kernel_width = j.at("kernel").at(1).get<std::size_t>();
        p.stride = j.at("stride").get<std::size_t>();
        p.padding = j.at("padding").get<std::size_t>();
        p.input_channels = j.at("in_channels").get<std::size_t>();
        p.output_channels = j.at("out_channels").get<std::size_t>();
        p.groups = j.at("groups").get<std::size_t>();
        layer.params = p;
    } else if (kind == "relu") {
        layer.params = ReluLayer{};
    } else if (kind == "lrn") {
        LrnParams p;
        p.local_size = j.at("local_size").get<std::size_t>();
        p.bias = j.at("bias").get<double>();
        p.alpha = j.at("alpha").get<double>();
        p.beta = j.at("beta").get<double>();
        layer.params = p;
    } else if (kind == "maxpool") {
        layer.params = PoolParams{j.at("window").get<std::size_t>(), j.at("stride").get<std::size_t>()};
    } else if (kind == "linear") {
        layer.params = LinearLayer{j.at("in_features").get<std::size_t>(), j.at("out_features").get<std::size_t>()};
    } else if (kind == "dropout") {
        layer.params = DropoutLayer{j.at("rate").get<double>()};
    } else if (kind == "softmax-output") {
        layer.params = SoftmaxOutputLayer{};
    } else {
        throw ContractViolation("unknown layer kind '" + kind + "'");
    }
    layer.trainable = j.value("trainable", true);
    return layer;
}

// ---- byte encoding ------------------------------------------------------------

void put_u32(std::vector<std::uint8_t>& out, std::uint32_t v) {
    for (int i = 0; i < 4; ++i) out.push_back(static_cast<std::uint8_t>(v >> (8 * i)));
}

void put_bytes(std::vector<std::uint8_t>& out, const std::string& s) { out.insert(out.end(), s.begin(), s.end()); }

std::uint32_t checked_u32(std::size_t v, const char* what) {
    if (v > std::numeric_limits<std::uint32_t>::max()) {
        throw ContractViolation(std::string(what) + " does not fit in 32 bits");
    }
    return static_cast<std::uint32_t>(v);
}

void put_tensor(std::vector<std::uint8_t>& out, const std::string& name, const Tensor& t) {
    put_u32(out, checked_u32(name.size(), "entry name length"));
    put_bytes(out, name);
    put_u32(out, checked_u32(t.rank(), "tensor rank"));
    for (auto d : t.shape()) put_u32(out, checked_u32(d, "tensor dimension"));
    out.reserve(out.size() + 4 * t.size());
    for (float v : t.data()) put_u32(out, std::bit_cast<std::uint32_t>(v));
}

class Reader {
public:
    explicit Reader(std::span<const std::uint8_t> bytes) : bytes_(bytes) {}

    std::uint64_t offset() const { return pos_; }
    std::size_t remaining() const { return bytes_.size() - pos_; }

    void need(std::size_t n, const char* what) const {
        if (remaining() < n) {
            throw FormatError("truncated checkpoint: " + std::string(what) + " needs " + std::to_string(n) +
                                  " bytes, " + std::to_string(remaining()) + " left",
                              pos_);
        }
    }

    std::uint32_t u32(const char* what) {
        need(4, what);
        std::uint32_t v = 0;
        for (int i = 0; i < 4; ++i) v |= static_cast<std::uint32_t>(bytes_[pos_ + i]) << (8 * i);
        pos_ += 4;
        return v;
    }

    std::string text(std::size_t n, const char* what) {
        need(n, what);
        std::string s(reinterpret_cast<const char*>(bytes_.data() + pos_), n);
        pos_ += n;
        return s;
    }

    void floats(std::span<float> dst, const char* what) {
        if (dst.size() > remaining() / 4) need(dst.size() * 4, what);
        for (auto& v : dst) {
            std::uint32_t bits = 0;
            for (int i = 0; i < 4; ++i) bits |= static_cast<std::uint32_t>(bytes_[pos_ + i]) << (8 * i);
            v = std::bit_cast<float>(bits);
            pos_ += 4;
        }
    }

private:
    std::span<const std::uint8_t> bytes_;
    std::size_t pos_ = 0;
};

struct RawEntry {
    std::string name;
    Tensor tensor;
    std::uint64_t offset;
};

}  // namespace

json spec_to_json(const NetworkSpec& spec) {
    json layers = json::array();
    for (const auto& l : spec.layers) layers.push_back(layer_to_json(l));
    return json{{"input", {spec.input.channels, spec.input.height, spec.input.width}},
                {"num_classes", spec.num_classes},
                {"layers", std::move(layers)}};
}

NetworkSpec spec_from_json(const json& j) {
    NetworkSpec spec;
    const auto& in = j.at("input");
    spec.input = {in.at(0).get<std::size_t>(), in.at(1).get<std::size_t>(), in.at(2).get<std::size_t>()};
    spec.num_classes = j.at("num_classes").get<std::size_t>();
    for (const auto& l : j.at("layers")) spec.layers.push_back(layer_from_json(l));
    spec.validate();
    return spec;
}

std::vector<std::uint8_t> encode_checkpoint(const Checkpoint& chk) {
    chk.params.validate_against(chk.spec);
    std::vector<std::uint8_t> out(std::begin(kCheckpointMagic), std::end(kCheckpointMagic));
    put_u32(out, chk.version);
    put_u32(out, checked_u32(chk.params.entries().size() * 2, "entry count"));
    for (const auto& e : chk.params.entries()) {
        put_tensor(out, e.name + ".weight", e.weights);
        put_tensor(out, e.name + ".bias", e.bias);
    }
    const json meta{{"network", spec_to_json(chk.spec)},
                    {"training",
                     {{"epochs_completed", chk.meta.epochs_completed},
                      {"seed", chk.meta.seed},
                      {"config_digest", chk.meta.config_digest}}},
                    {"class_order", chk.meta.class_order}};
    const std::string text = meta.dump();
    put_u32(out, checked_u32(text.size(), "metadata length"));
    put_bytes(out, text);
    return out;
}

Checkpoint decode_checkpoint(std::span<const std::uint8_t> bytes) {
    Reader in(bytes);
    const std::string magic = in.text(4, "magic");
    if (magic != std::string(kCheckpointMagic, 4)) throw FormatError("bad magic bytes, not a BWCK checkpoint", 0);

    Checkpoint chk;
    const std::uint64_t version_offset = in.offset();
    chk.version = in.u32("format version");
    if (chk.version == 0) throw FormatError("format version 0 is invalid", version_offset);
    if (chk.version > kCheckpointVersion) throw UnsupportedVersion(chk.version, kCheckpointVersion, version_offset);

    const std::uint32_t count = in.u32("entry count");
    std::vector<RawEntry> raw;
    for (std::uint32_t i = 0; i < count; ++i) {
        const std::uint64_t entry_offset = in.offset();
        const std::uint32_t name_len = in.u32("entry name length");
        std::string name = in.text(name_len, "entry name");
        const std::uint64_t rank_offset = in.offset();
        const std::uint32_t rank = in.u32("tensor rank");
        if (rank == 0 || rank > kMaxRank) {
            throw FormatError("entry '" + name + "' has invalid rank " + std::to_string(rank), rank_offset);
        }
        Shape shape;
        std::uint64_t elems = 1;
        for (std::uint32_t a = 0; a < rank; ++a) {
            const std::uint64_t dim_offset = in.offset();
            const std::uint32_t d = in.u32("tensor dimension");
            if (d == 0) throw FormatError("entry '" + name + "' has a zero dimension", dim_offset);
            elems *= d;
            if (elems > in.remaining() / 4) {
                throw FormatError("truncated checkpoint: entry '" + name + "' declares more values than remain",
                                  dim_offset);
            }
            shape.push_back(d);
        }
        Tensor t(shape);
        in.floats(t.data(), "tensor values");
        raw.push_back({std::move(name), std::move(t), entry_offset});
    }

    const std::uint64_t meta_offset = in.offset();
    const std::uint32_t meta_len = in.u32("metadata length");
    const std::string text = in.text(meta_len, "metadata");
    if (in.remaining() != 0) {
        throw FormatError(std::to_string(in.remaining()) + " trailing bytes after metadata", in.offset());
    }
    json meta;
    try {
        meta = json::parse(text);
    } catch (const json::exception& e) {
        throw FormatError(std::string("metadata is not valid JSON: ") + e.what(), meta_offset + 4);
    }

    try {
        if (meta.contains("network")) {
            chk.spec = spec_from_json(meta.at("network"));
        } else {
            // Foreign exporters may omit the network: assume canonical AlexNet.
            std::size_t classes = 0;
            for (const auto& e : raw) {
                if (e.name == "fc8.bias") classes = e.tensor.dim(0);
            }
            if (classes == 0) throw FormatError("metadata has no network and no fc8.bias entry", meta_offset);
            chk.spec = alexnet_spec(classes);
        }
        if (meta.contains("training")) {
            const auto& t = meta.at("training");
            chk.meta.epochs_completed = t.value("epochs_completed", std::size_t{0});
            chk.meta.seed = t.value("seed", std::uint64_t{0});
            chk.meta.config_digest = t.value("config_digest", std::string{});
        }
        if (meta.contains("class_order")) chk.meta.class_order = meta.at("class_order").get<std::vector<std::string>>();
    } catch (const FormatError&) {
        throw;
    } catch (const std::exception& e) {
        throw FormatError(std::string("invalid metadata: ") + e.what(), meta_offset + 4);
    }

    std::vector<LayerParameters<float>> entries;
    std::size_t next = 0;
    for (const auto& layer : chk.spec.layers) {
        if (!layer.has_parameters()) continue;
        if (next + 2 > raw.size()) {
            throw FormatError("missing tensors for layer '" + layer.name + "'", meta_offset);
        }
        RawEntry& w = raw[next];
        RawEntry& b = raw[next + 1];
        if (w.name != layer.name + ".weight") {
            throw FormatError("expected entry '" + layer.name + ".weight', found '" + w.name + "'", w.offset);
        }
        if (b.name != layer.name + ".bias") {
            throw FormatError("expected entry '" + layer.name + ".bias', found '" + b.name + "'", b.offset);
        }
        if (w.tensor.shape() != weight_shape(layer)) {
            throw FormatError("entry '" + w.name + "' has shape " + shape_string(w.tensor.shape()) + ", expected " +
                                  shape_string(weight_shape(layer)),
                              w.offset);
        }
        if (b.tensor.shape() != bias_shape(layer)) {
            throw FormatError("entry '" + b.name + "' has shape " + shape_string(b.tensor.shape()) + ", expected " +
                                  shape_string(bias_shape(layer)),
                              b.offset);
        }
        entries.push_back({layer.name, std::move(w.tensor), std::move(b.tensor)});
        next += 2;
    }
    if (next != raw.size()) throw FormatError("unexpected entry '" + raw[next].name + "'", raw[next].offset);
    chk.params = ParameterSet(std::move(entries));
    return chk;
}

void save_checkpoint(const Checkpoint& chk, const std::filesystem::path& path) {
    const auto bytes = encode_checkpoint(chk);
    std::ofstream out(path, std::ios::binary | std::ios::trunc);
    if (!out) throw IoError("cannot open '" + path.string() + "' for writing");
    out.write(reinterpret_cast<const char*>(bytes.data()), static_cast<std::streamsize>(bytes.size()));
    if (!out) throw IoError("failed writing '" + path.string() + "'");
}

Checkpoint load_checkpoint(const std::filesystem::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw IoError("cannot open checkpoint '" + path.string() + "'");
    std::vector<std::uint8_t> bytes((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());
    return decode_checkpoint(bytes);
}

}  // namespace burncnn
