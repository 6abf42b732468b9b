#pragma once

#include <cstddef>
#include <cstdint>
#include <optional>
#include <string>
#include <variant>
#include <vector>

#include "burncnn/ops.hpp"
#include "burncnn/tensor.hpp"

namespace burncnn {

// ---- layer description --------------------------------------------------

struct ReluLayer {
    friend bool operator==(const ReluLayer&, const ReluLayer&) = default;
};
struct LinearLayer {
    std::size_t in_features = 0;
    std::size_t out_features = 0;
    friend bool operator==(const LinearLayer&, const LinearLayer&) = default;
};
struct DropoutLayer {
    double rate = 0.5;
    friend bool operator==(const DropoutLayer&, const DropoutLayer&) = default;
};
/// Marks the end of the stack; forward returns the logits feeding it.
struct SoftmaxOutputLayer {
    friend bool operator==(const SoftmaxOutputLayer&, const SoftmaxOutputLayer&) = default;
};

using LayerParams =
    std::variant<ConvParams, ReluLayer, LrnParams, PoolParams, LinearLayer, DropoutLayer, SoftmaxOutputLayer>;

enum class LayerKind { conv, relu, lrn, maxpool, linear, dropout, softmax_output };

const char* to_string(LayerKind kind);

struct LayerSpec {
    std::string name;
    LayerParams params;
    /// Only meaningful for conv and linear layers.
    bool trainable = true;

    LayerKind kind() const { return static_cast<LayerKind>(params.index()); }
    bool has_parameters() const { return kind() == LayerKind::conv || kind() == LayerKind::linear; }

    friend bool operator==(const LayerSpec&, const LayerSpec&) = default;
};

struct InputSize {
    std::size_t channels = 3;
    std::size_t height = 227;
    std::size_t width = 227;
    friend bool operator==(const InputSize&, const InputSize&) = default;
};

struct NetworkSpec {
    InputSize input;
    std::vector<LayerSpec> layers;
    std::size_t num_classes = 0;

    /// Per-sample output shape of every layer (without the batch axis).
    /// Throws ContractViolation naming the first layer that does not chain.
    std::vector<Shape> layer_output_shapes() const;
    void validate() const { (void)layer_output_shapes(); }

    /// Index of the final linear layer.
    std::size_t head_index() const;
    const LayerSpec* find(const std::string& name) const;

    friend bool operator==(const NetworkSpec&, const NetworkSpec&) = default;
};

// ---- parameters ---------------------------------------------------------

template <typename T>
struct LayerParameters {
    std::string name;
    BasicTensor<T> weights;
    BasicTensor<T> bias;
};

/// Weights and bias per trainable layer, stored in layer order.
template <typename T>
class BasicParameterSet {
public:
    BasicParameterSet() = default;
    explicit BasicParameterSet(std::vector<LayerParameters<T>> entries) : entries_(std::move(entries)) {}

    std::vector<LayerParameters<T>>& entries() noexcept { return entries_; }
    const std::vector<LayerParameters<T>>& entries() const noexcept { return entries_; }

    const LayerParameters<T>& at(const std::string& name) const;
    LayerParameters<T>& at(const std::string& name);
    bool contains(const std::string& name) const;

    std::size_t scalar_count() const;

    template <typename U>
    BasicParameterSet<U> cast() const {
        std::vector<LayerParameters<U>> out;
        out.reserve(entries_.size());
        for (const auto& e : entries_) out.push_back({e.name, e.weights.template cast<U>(), e.bias.template cast<U>()});
        return BasicParameterSet<U>(std::move(out));
    }

    /// Checks one entry per parameterized layer with matching shapes.
    void validate_against(const NetworkSpec& spec) const;

private:
    std::vector<LayerParameters<T>> entries_;
};

using ParameterSet = BasicParameterSet<float>;

template <typename T>
bool bit_equal(const BasicParameterSet<T>& a, const BasicParameterSet<T>& b);

template <typename T>
struct LayerGradients {
    std::string name;
    BasicTensor<T> weights;
    BasicTensor<T> bias;
    bool frozen = false;
};

template <typename T>
struct GradientSet {
    std::vector<LayerGradients<T>> entries;
    const LayerGradients<T>& at(const std::string& name) const;
};

/// Expected weight and bias shapes for a parameterized layer.
Shape weight_shape(const LayerSpec& layer);
Shape bias_shape(const LayerSpec& layer);

// ---- AlexNet ------------------------------------------------------------

/// Width knobs for the AlexNet family. Defaults give the canonical network.
struct AlexNetOptions {
    std::size_t channel_divisor = 1;
    std::size_t fc_width = 4096;
    std::size_t input_size = 227;
    double dropout_rate = 0.5;
    LrnParams lrn{};
};

/// Canonical layer stack with convolution widths divided by 16 and 128-wide
/// fully connected layers; cheap enough for whole-network numerical tests.
AlexNetOptions reduced_alexnet_options();

NetworkSpec alexnet_spec(std::size_t num_classes, const AlexNetOptions& options = {});

/// He-normal weights (std sqrt(2/fan_in)) and zero biases for every layer.
ParameterSet init_parameters(const NetworkSpec& spec, std::uint64_t seed);

struct Network {
    NetworkSpec spec;
    ParameterSet params;
};

Network build_alexnet(std::size_t num_classes, std::uint64_t seed = 0, const AlexNetOptions& options = {});

// ---- forward / backward -------------------------------------------------

enum class Mode { train, infer };

template <typename T>
struct LayerCache {
    BasicTensor<T> input;
    std::vector<std::size_t> argmax;
    DropoutMask mask;
};

template <typename T>
struct ActivationCache {
    std::uint64_t spec_fingerprint = 0;
    std::vector<LayerCache<T>> layers;
    Shape logits_shape;
};

template <typename T>
struct ForwardResult {
    BasicTensor<T> logits;
    ActivationCache<T> cache;
};

std::uint64_t fingerprint(const NetworkSpec& spec);

/// Runs the stack on an [N,C,H,W] batch. `dropout_seed` drives every dropout
/// layer in train mode (each layer derives its own stream from it).
template <typename T>
ForwardResult<T> forward(const NetworkSpec& spec, const BasicParameterSet<T>& params,
                         const BasicTensor<T>& batch, Mode mode, std::uint64_t dropout_seed = 0);

/// Gradients for every parameterized layer; frozen layers get zero tensors
/// with `frozen` set.
template <typename T>
GradientSet<T> backward(const NetworkSpec& spec, const BasicParameterSet<T>& params,
                        const ActivationCache<T>& cache, const BasicTensor<T>& grad_logits);

/// Softmax probabilities in inference mode.
Tensor predict_probabilities(const NetworkSpec& spec, const ParameterSet& params, const Tensor& batch);

// ---- transfer learning --------------------------------------------------

enum class FreezePolicy { none, all_but_head, first_k_layers };

struct FreezeSpec {
    FreezePolicy policy = FreezePolicy::none;
    /// Number of leading parameterized layers frozen under first_k_layers.
    std::size_t k = 0;
};

std::string to_string(const FreezeSpec& freeze);
/// Accepts "none", "all-but-head", "first-<k>-layers".
std::optional<FreezeSpec> parse_freeze_spec(const std::string& text);

/// Copy of `spec` with trainable flags set per policy.
NetworkSpec apply_freeze(NetworkSpec spec, const FreezeSpec& freeze);

struct Checkpoint;

/// Copies every pretrained layer except the final linear one, which is
/// re-initialized N(0, 0.01^2) with zero bias at width `num_classes`.
/// `expected` describes the architecture the checkpoint must match.
Network transfer_surgery(const Checkpoint& pretrained, std::size_t num_classes, const FreezeSpec& freeze,
                         std::uint64_t seed, const AlexNetOptions& expected = {});

}  // namespace burncnn
