#include "burncnn/network.hpp"

#include <cmath>
#include <random>
#include <sstream>

#include "burncnn/checkpoint.hpp"
#include "burncnn/errors.hpp"

namespace burncnn {

namespace {

template <class... Ts>
struct overloaded : Ts... {
    using Ts::operator()...;
};
template <class... Ts>
overloaded(Ts...) -> overloaded<Ts...>;

[[noreturn]] void fail(const std::string& what) { throw ContractViolation(what); }

std::uint64_t splitmix64(std::uint64_t x) {
    x += 0x9e3779b97f4a7c15ULL;
    x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
    x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
    return x ^ (x >> 31);
}

std::string describe(const LayerSpec& layer) {
    std::ostringstream os;
    os << layer.name << " (" << to_string(layer.kind());
    std::visit(overloaded{
                   [&](const ConvParams& p) {
                       os << ' ' << p.input_channels << "->" << p.output_channels << ' ' << p.kernel_height
                          << 'x' << p.kernel_width << " s" << p.stride << " p" << p.padding << " g" << p.groups;
                   },
                   [&](const LrnParams& p) {
                       os << " size " << p.local_size << " k " << p.bias << " alpha " << p.alpha << " beta "
                          << p.beta;
                   },
                   [&](const PoolParams& p) { os << ' ' << p.window << " s" << p.stride; },
                   [&](const LinearLayer& p) { os << ' ' << p.in_features << "->" << p.out_features; },
                   [&](const DropoutLayer& p) { os << " rate " << p.rate; },
                   [](const auto&) {},
               },
               layer.params);
    os << ')';
    return os.str();
}

bool same_structure(const LayerSpec& a, const LayerSpec& b) { return a.name == b.name && a.params == b.params; }

}  // namespace

const char* to_string(LayerKind kind) {
    switch (kind) {
        case LayerKind::conv: return "conv";
        case LayerKind::relu: return "relu";
        case LayerKind::lrn: return "lrn";
        case LayerKind::maxpool: return "maxpool";
        case LayerKind::linear: return "linear";
        case LayerKind::dropout: return "dropout";
        case LayerKind::softmax_output: return "softmax-output";
    }
    return "unknown";
}

// ---- NetworkSpec ----------------------------------------------------------

std::vector<Shape> NetworkSpec::layer_output_shapes() const {
    if (num_classes < 2) fail("num_classes must be >= 2, got " + std::to_string(num_classes));
    if (input.channels == 0 || input.height == 0 || input.width == 0) fail("input size must be positive");
    if (layers.empty()) fail("network has no layers");

    std::vector<Shape> shapes;
    shapes.reserve(layers.size());
    Shape cur{input.channels, input.height, input.width};
    for (std::size_t i = 0; i < layers.size(); ++i) {
        const LayerSpec& layer = layers[i];
        auto bad = [&](const std::string& why) -> void {
            fail("layer " + std::to_string(i) + " '" + layer.name + "' does not chain from " +
                 shape_string(cur) + ": " + why);
        };
        std::visit(overloaded{
                       [&](const ConvParams& p) {
                           p.validate();
                           if (cur.size() != 3) bad("conv needs a [C,H,W] input");
                           if (cur[0] != p.input_channels) {
                               bad("expected " + std::to_string(p.input_channels) + " channels");
                           }
                           cur = {p.output_channels, p.output_extent(cur[1], p.kernel_height),
                                  p.output_extent(cur[2], p.kernel_width)};
                       },
                       [&](const ReluLayer&) {},
                       [&](const LrnParams& p) {
                           p.validate();
                           if (cur.size() != 3) bad("lrn needs a [C,H,W] input");
                       },
                       [&](const PoolParams& p) {
                           if (cur.size() != 3) bad("maxpool needs a [C,H,W] input");
                           if (p.window == 0 || p.stride == 0) bad("window and stride must be positive");
                           if (p.window > cur[1] || p.window > cur[2]) bad("window larger than input");
                           cur = {cur[0], (cur[1] - p.window) / p.stride + 1, (cur[2] - p.window) / p.stride + 1};
                       },
                       [&](const LinearLayer& p) {
                           if (shape_size(cur) != p.in_features) {
                               bad("expected " + std::to_string(p.in_features) + " input features");
                           }
                           if (p.out_features == 0) bad("zero output features");
                           cur = {p.out_features};
                       },
                       [&](const DropoutLayer& p) {
                           if (!(p.rate >= 0.0) || p.rate >= 1.0) bad("dropout rate outside [0, 1)");
                       },
                       [&](const SoftmaxOutputLayer&) {
                           if (i + 1 != layers.size()) bad("softmax-output must be the last layer");
                       },
                   },
                   layer.params);
        shapes.push_back(cur);
    }
    if (cur != Shape{num_classes}) {
        fail("network output shape " + shape_string(cur) + " is not [" + std::to_string(num_classes) + "]");
    }
    return shapes;
}

std::size_t NetworkSpec::head_index() const {
    for (std::size_t i = layers.size(); i-- > 0;) {
        if (layers[i].kind() == LayerKind::linear) return i;
    }
    fail("network has no linear head");
}

const LayerSpec* NetworkSpec::find(const std::string& name) const {
    for (const auto& l : layers) {
        if (l.name == name) return &l;
    }
    return nullptr;
}

Shape weight_shape(const LayerSpec& layer) {
    if (const auto* c = std::get_if<ConvParams>(&layer.params)) return c->weight_shape();
    if (const auto* l = std::get_if<LinearLayer>(&layer.params)) return {l->in_features, l->out_features};
    fail("layer '" + layer.name + "' has no parameters");
}

Shape bias_shape(const LayerSpec& layer) {
    if (const auto* c = std::get_if<ConvParams>(&layer.params)) return {c->output_channels};
    if (const auto* l = std::get_if<LinearLayer>(&layer.params)) return {l->out_features};
    fail("layer '" + layer.name + "' has no parameters");
}

// ---- ParameterSet -----------------------------------------------------------

template <typename T>
const LayerParameters<T>& BasicParameterSet<T>::at(const std::string& name) const {
    for (const auto& e : entries_) {
        if (e.name == name) return e;
    }
    fail("no parameters for layer '" + name + "'");
}

template <typename T>
LayerParameters<T>& BasicParameterSet<T>::at(const std::string& name) {
    for (auto& e : entries_) {
        if (e.name == name) return e;
    }
    fail("no parameters for layer '" + name + "'");
}

template <typename T>
bool BasicParameterSet<T>::contains(const std::string& name) const {
    for (const auto& e : entries_) {
        if (e.name == name) return true;
    }
    return false;
}

template <typename T>
std::size_t BasicParameterSet<T>::scalar_count() const {
    std::size_t n = 0;
    for (const auto& e : entries_) n += e.weights.size() + e.bias.size();
    return n;
}

template <typename T>
void BasicParameterSet<T>::validate_against(const NetworkSpec& spec) const {
    std::size_t expected = 0;
    for (const auto& layer : spec.layers) {
        if (!layer.has_parameters()) continue;
        if (expected >= entries_.size() || entries_[expected].name != layer.name) {
            fail("parameter entry " + std::to_string(expected) + " should belong to layer '" + layer.name + "'");
        }
        const auto& e = entries_[expected];
        if (e.weights.shape() != weight_shape(layer)) {
            fail("layer '" + layer.name + "' weights have shape " + shape_string(e.weights.shape()) +
                 ", expected " + shape_string(weight_shape(layer)));
        }
        if (e.bias.shape() != bias_shape(layer)) {
            fail("layer '" + layer.name + "' bias has shape " + shape_string(e.bias.shape()) + ", expected " +
                 shape_string(bias_shape(layer)));
        }
        ++expected;
    }
    if (expected != entries_.size()) {
        fail("parameter set has " + std::to_string(entries_.size()) + " entries, network needs " +
             std::to_string(expected));
    }
}

template <typename T>
bool bit_equal(const BasicParameterSet<T>& a, const BasicParameterSet<T>& b) {
    if (a.entries().size() != b.entries().size()) return false;
    for (std::size_t i = 0; i < a.entries().size(); ++i) {
        const auto &x = a.entries()[i], &y = b.entries()[i];
        if (x.name != y.name || !bit_equal(x.weights, y.weights) || !bit_equal(x.bias, y.bias)) return false;
    }
    return true;
}

template <typename T>
const LayerGradients<T>& GradientSet<T>::at(const std::string& name) const {
    for (const auto& e : entries) {
        if (e.name == name) return e;
    }
    fail("no gradients for layer '" + name + "'");
}

template class BasicParameterSet<float>;
template class BasicParameterSet<double>;
template struct GradientSet<float>;
template struct GradientSet<double>;
template bool bit_equal(const BasicParameterSet<float>&, const BasicParameterSet<float>&);
template bool bit_equal(const BasicParameterSet<double>&, const BasicParameterSet<double>&);

// ---- AlexNet ----------------------------------------------------------------

AlexNetOptions reduced_alexnet_options() {
    AlexNetOptions o;
    o.channel_divisor = 16;
    o.fc_width = 128;
    return o;
}

NetworkSpec alexnet_spec(std::size_t num_classes, const AlexNetOptions& o) {
    if (num_classes < 2) fail("num_classes must be >= 2, got " + std::to_string(num_classes));
    if (o.channel_divisor == 0 || 96 % o.channel_divisor != 0) {
        fail("channel divisor " + std::to_string(o.channel_divisor) + " must divide 96");
    }
    const std::size_t d = o.channel_divisor;
    auto conv = [](std::size_t in, std::size_t out, std::size_t k, std::size_t s, std::size_t pad, std::size_t g) {
        return ConvParams{k, k, s, pad, in, out, g};
    };
    const PoolParams pool{3, 2};

    NetworkSpec spec;
    spec.input = {3, o.input_size, o.input_size};
    spec.num_classes = num_classes;
    auto& L = spec.layers;
    L.push_back({"conv1", conv(3, 96 / d, 11, 4, 0, 1)});
    L.push_back({"relu1", ReluLayer{}});
    L.push_back({"norm1", o.lrn});
    L.push_back({"pool1", pool});
    L.push_back({"conv2", conv(96 / d, 256 / d, 5, 1, 2, 2)});
    L.push_back({"relu2", ReluLayer{}});
    L.push_back({"norm2", o.lrn});
    L.push_back({"pool2", pool});
    L.push_back({"conv3", conv(256 / d, 384 / d, 3, 1, 1, 1)});
    L.push_back({"relu3", ReluLayer{}});
    L.push_back({"conv4", conv(384 / d, 384 / d, 3, 1, 1, 2)});
    L.push_back({"relu4", ReluLayer{}});
    L.push_back({"conv5", conv(384 / d, 256 / d, 3, 1, 1, 2)});
    L.push_back({"relu5", ReluLayer{}});
    L.push_back({"pool5", pool});

    // Flattened pool5 size depends on the input extent.
    std::size_t flat = 0;
    {
        Shape cur{3, o.input_size, o.input_size};
        for (const auto& layer : spec.layers) {
            if (const auto* c = std::get_if<ConvParams>(&layer.params)) {
                cur = {c->output_channels, c->output_extent(cur[1], c->kernel_height),
                       c->output_extent(cur[2], c->kernel_width)};
            } else if (const auto* p = std::get_if<PoolParams>(&layer.params)) {
                if (p->window > cur[1] || p->window > cur[2]) {
                    fail("input size " + std::to_string(o.input_size) + " too small for layer " + layer.name);
                }
                cur = {cur[0], (cur[1] - p->window) / p->stride + 1, (cur[2] - p->window) / p->stride + 1};
            }
        }
        flat = shape_size(cur);
    }

    L.push_back({"fc6", LinearLayer{flat, o.fc_width}});
    L.push_back({"relu6", ReluLayer{}});
    L.push_back({"drop6", DropoutLayer{o.dropout_rate}});
    L.push_back({"fc7", LinearLayer{o.fc_width, o.fc_width}});
    L.push_back({"relu7", ReluLayer{}});
    L.push_back({"drop7", DropoutLayer{o.dropout_rate}});
    L.push_back({"fc8", LinearLayer{o.fc_width, num_classes}});
    L.push_back({"prob", SoftmaxOutputLayer{}});
    spec.validate();
    return spec;
}

ParameterSet init_parameters(const NetworkSpec& spec, std::uint64_t seed) {
    std::mt19937_64 gen(seed);
    std::vector<LayerParameters<float>> entries;
    for (const auto& layer : spec.layers) {
        if (!layer.has_parameters()) continue;
        Tensor w(weight_shape(layer));
        const std::size_t fan_in = w.size() / w.dim(w.rank() == 4 ? 0 : 1);
        std::normal_distribution<float> dist(0.0f, static_cast<float>(std::sqrt(2.0 / static_cast<double>(fan_in))));
        for (auto& v : w.data()) v = dist(gen);
        entries.push_back({layer.name, std::move(w), Tensor(bias_shape(layer))});
    }
    return ParameterSet(std::move(entries));
}

Network build_alexnet(std::size_t num_classes, std::uint64_t seed, const AlexNetOptions& options) {
    NetworkSpec spec = alexnet_spec(num_classes, options);
    ParameterSet params = init_parameters(spec, seed);
    return {std::move(spec), std::move(params)};
}

// ---- forward / backward -------------------------------------------------------

std::uint64_t fingerprint(const NetworkSpec& spec) {
    const std::string text = spec_to_json(spec).dump();
    std::uint64_t h = 0xcbf29ce484222325ULL;
    for (unsigned char ch : text) {
        h ^= ch;
        h *= 0x100000001b3ULL;
    }
    return h;
}

template <typename T>
ForwardResult<T> forward(const NetworkSpec& spec, const BasicParameterSet<T>& params, const BasicTensor<T>& batch,
                         Mode mode, std::uint64_t dropout_seed) {
    if (batch.rank() != 4) fail("batch must be [N,C,H,W], got " + shape_string(batch.shape()));
    const Shape want{spec.input.channels, spec.input.height, spec.input.width};
    for (std::size_t a = 0; a < 3; ++a) {
        if (batch.dim(a + 1) != want[a]) {
            fail("batch dimension " + std::to_string(a + 1) + " is " + std::to_string(batch.dim(a + 1)) +
                 ", network expects " + std::to_string(want[a]));
        }
    }

    ForwardResult<T> res;
    res.cache.spec_fingerprint = fingerprint(spec);
    res.cache.layers.resize(spec.layers.size());
    const bool training = mode == Mode::train;
    const std::size_t n = batch.dim(0);

    BasicTensor<T> x = batch;
    for (std::size_t i = 0; i < spec.layers.size(); ++i) {
        const LayerSpec& layer = spec.layers[i];
        LayerCache<T>& cache = res.cache.layers[i];
        BasicTensor<T> y;
        std::visit(overloaded{
                       [&](const ConvParams& p) {
                           const auto& pr = params.at(layer.name);
                           y = conv2d_forward(x, pr.weights, pr.bias, p);
                       },
                       [&](const ReluLayer&) { y = relu_forward(x); },
                       [&](const LrnParams& p) { y = lrn_forward(x, p); },
                       [&](const PoolParams& p) {
                           auto r = maxpool_forward(x, p);
                           y = std::move(r.output);
                           cache.argmax = std::move(r.argmax);
                       },
                       [&](const LinearLayer&) {
                           const auto& pr = params.at(layer.name);
                           y = linear_forward(x.rank() == 2 ? x : x.reshaped({n, x.size() / n}), pr.weights, pr.bias);
                       },
                       [&](const DropoutLayer& p) {
                           auto r = dropout_forward(x, p.rate, splitmix64(dropout_seed ^ splitmix64(i)), training);
                           y = std::move(r.output);
                           cache.mask = std::move(r.mask);
                       },
                       [&](const SoftmaxOutputLayer&) { y = x; },
                   },
                   layer.params);
        cache.input = std::move(x);
        x = std::move(y);
    }
    res.cache.logits_shape = x.shape();
    res.logits = std::move(x);
    return res;
}

template <typename T>
GradientSet<T> backward(const NetworkSpec& spec, const BasicParameterSet<T>& params, const ActivationCache<T>& cache,
                        const BasicTensor<T>& grad_logits) {
    if (cache.layers.size() != spec.layers.size() || cache.spec_fingerprint != fingerprint(spec)) {
        fail("activation cache was produced by a different network");
    }
    if (grad_logits.shape() != cache.logits_shape) {
        fail("grad_logits shape " + shape_string(grad_logits.shape()) + " does not match cached logits " +
             shape_string(cache.logits_shape));
    }

    std::size_t first_trainable = spec.layers.size();
    for (std::size_t i = 0; i < spec.layers.size(); ++i) {
        if (spec.layers[i].has_parameters() && spec.layers[i].trainable) {
            first_trainable = i;
            break;
        }
    }

    GradientSet<T> grads;
    for (const auto& layer : spec.layers) {
        if (!layer.has_parameters()) continue;
        grads.entries.push_back({layer.name, BasicTensor<T>(weight_shape(layer)), BasicTensor<T>(bias_shape(layer)),
                                 !layer.trainable});
    }
    std::size_t slot = grads.entries.size();

    BasicTensor<T> g = grad_logits;
    for (std::size_t i = spec.layers.size(); i-- > 0;) {
        const LayerSpec& layer = spec.layers[i];
        const LayerCache<T>& lc = cache.layers[i];
        if (layer.has_parameters()) --slot;
        if (i < first_trainable) break;  // nothing upstream needs a gradient
        std::visit(overloaded{
                       [&](const ConvParams& p) {
                           auto r = conv2d_backward(g, lc.input, params.at(layer.name).weights, p);
                           if (layer.trainable) {
                               grads.entries[slot].weights = std::move(r.grad_weights);
                               grads.entries[slot].bias = std::move(r.grad_bias);
                           }
                           g = std::move(r.grad_input);
                       },
                       [&](const ReluLayer&) { g = relu_backward(g, lc.input); },
                       [&](const LrnParams& p) { g = lrn_backward(g, lc.input, p); },
                       [&](const PoolParams&) { g = maxpool_backward(g, lc.argmax, lc.input.shape()); },
                       [&](const LinearLayer&) {
                           const std::size_t n = lc.input.dim(0);
                           const BasicTensor<T> flat =
                               lc.input.rank() == 2 ? lc.input : lc.input.reshaped({n, lc.input.size() / n});
                           auto r = linear_backward(g, flat, params.at(layer.name).weights);
                           if (layer.trainable) {
                               grads.entries[slot].weights = std::move(r.grad_weights);
                               grads.entries[slot].bias = std::move(r.grad_bias);
                           }
                           g = std::move(r.grad_input).reshaped(lc.input.shape());
                       },
                       [&](const DropoutLayer&) { g = dropout_backward(g, lc.mask); },
                       [&](const SoftmaxOutputLayer&) {},
                   },
                   layer.params);
    }
    return grads;
}

template ForwardResult<float> forward(const NetworkSpec&, const BasicParameterSet<float>&, const BasicTensor<float>&,
                                      Mode, std::uint64_t);
template ForwardResult<double> forward(const NetworkSpec&, const BasicParameterSet<double>&,
                                       const BasicTensor<double>&, Mode, std::uint64_t);
template GradientSet<float> backward(const NetworkSpec&, const BasicParameterSet<float>&,
                                     const ActivationCache<float>&, const BasicTensor<float>&);
template GradientSet<double> backward(const NetworkSpec&, const BasicParameterSet<double>&,
                                      const ActivationCache<double>&, const BasicTensor<double>&);

Tensor predict_probabilities(const NetworkSpec& spec, const ParameterSet& params, const Tensor& batch) {
    return softmax(forward(spec, params, batch, Mode::infer).logits);
}

// ---- transfer learning ------------------------------------------------------

std::string to_string(const FreezeSpec& freeze) {
    switch (freeze.policy) {
        case FreezePolicy::none: return "none";
        case FreezePolicy::all_but_head: return "all-but-head";
        case FreezePolicy::first_k_layers: return "first-" + std::to_string(freeze.k) + "-layers";
    }
    return "none";
}

std::optional<FreezeSpec> parse_freeze_spec(const std::string& text) {
    if (text == "none") return FreezeSpec{FreezePolicy::none, 0};
    if (text == "all-but-head") return FreezeSpec{FreezePolicy::all_but_head, 0};
    const std::string prefix = "first-", suffix = "-layers";
    if (text.size() > prefix.size() + suffix.size() && text.starts_with(prefix) && text.ends_with(suffix)) {
        const std::string digits = text.substr(prefix.size(), text.size() - prefix.size() - suffix.size());
        if (digits.empty() || digits.find_first_not_of("0123456789") != std::string::npos) return std::nullopt;
        return FreezeSpec{FreezePolicy::first_k_layers, static_cast<std::size_t>(std::stoul(digits))};
    }
    return std::nullopt;
}

NetworkSpec apply_freeze(NetworkSpec spec, const FreezeSpec& freeze) {
    const std::size_t head = spec.head_index();
    std::size_t seen = 0;
    for (std::size_t i = 0; i < spec.layers.size(); ++i) {
        auto& layer = spec.layers[i];
        if (!layer.has_parameters()) {
            layer.trainable = true;
            continue;
        }
        switch (freeze.policy) {
            case FreezePolicy::none: layer.trainable = true; break;
            case FreezePolicy::all_but_head: layer.trainable = i == head; break;
            case FreezePolicy::first_k_layers: layer.trainable = seen >= freeze.k; break;
        }
        ++seen;
    }
    return spec;
}

Network transfer_surgery(const Checkpoint& pretrained, std::size_t num_classes, const FreezeSpec& freeze,
                         std::uint64_t seed, const AlexNetOptions& expected) {
    if (num_classes < 2) fail("num_classes must be >= 2, got " + std::to_string(num_classes));
    const NetworkSpec& src = pretrained.spec;
    std::size_t src_classes = src.num_classes;
    if (src_classes < 2) throw IncompatibleCheckpoint("pretrained checkpoint declares fewer than 2 classes");

    const NetworkSpec reference = alexnet_spec(src_classes, expected);
    if (src.input != reference.input) {
        throw IncompatibleCheckpoint("pretrained input size " +
                                     shape_string({src.input.channels, src.input.height, src.input.width}) +
                                     " differs from expected " +
                                     shape_string({reference.input.channels, reference.input.height,
                                                   reference.input.width}));
    }
    const std::size_t common = std::min(src.layers.size(), reference.layers.size());
    for (std::size_t i = 0; i < common; ++i) {
        if (!same_structure(src.layers[i], reference.layers[i])) {
            throw IncompatibleCheckpoint("first differing layer " + std::to_string(i) + ": checkpoint has " +
                                         describe(src.layers[i]) + ", expected " + describe(reference.layers[i]));
        }
    }
    if (src.layers.size() != reference.layers.size()) {
        const auto& extra = src.layers.size() > common ? src.layers[common] : reference.layers[common];
        throw IncompatibleCheckpoint("first differing layer " + std::to_string(common) + ": " + describe(extra) +
                                     (src.layers.size() > common ? " is unexpected" : " is missing"));
    }
    try {
        pretrained.params.validate_against(src);
    } catch (const ContractViolation& e) {
        throw IncompatibleCheckpoint(std::string("pretrained parameters: ") + e.what());
    }

    NetworkSpec spec = apply_freeze(alexnet_spec(num_classes, expected), freeze);
    const std::size_t head = spec.head_index();
    const std::string& head_name = spec.layers[head].name;

    std::vector<LayerParameters<float>> entries;
    for (const auto& e : pretrained.params.entries()) {
        if (e.name == head_name) continue;
        entries.push_back(e);
    }
    std::mt19937_64 gen(seed);
    std::normal_distribution<float> dist(0.0f, 0.01f);
    Tensor w(weight_shape(spec.layers[head]));
    for (auto& v : w.data()) v = dist(gen);
    entries.push_back({head_name, std::move(w), Tensor(bias_shape(spec.layers[head]))});

    ParameterSet params(std::move(entries));
    params.validate_against(spec);
    return {std::move(spec), std::move(params)};
}

}  // namespace burncnn
