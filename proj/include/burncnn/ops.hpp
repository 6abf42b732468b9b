#pragma once

// Differentiable primitives for the fixed AlexNet stack. All functions are
// pure: outputs depend only on the arguments, and bit-identical inputs give
// bit-identical outputs regardless of the worker count.

#include <cstddef>
#include <cstdint>
#include <span>
#include <vector>

#include "burncnn/tensor.hpp"

namespace burncnn {

struct ConvParams {
    std::size_t kernel_height = 1;
    std::size_t kernel_width = 1;
    std::size_t stride = 1;
    std::size_t padding = 0;
    std::size_t input_channels = 1;
    std::size_t output_channels = 1;
    std::size_t groups = 1;

    /// Throws ContractViolation on zero fields or channels not divisible by groups.
    void validate() const;
    /// Spatial output extent along one axis; throws if it would be < 1.
    std::size_t output_extent(std::size_t input_extent, std::size_t kernel) const;
    Shape weight_shape() const;

    friend bool operator==(const ConvParams&, const ConvParams&) = default;
};

/// Cross-channel local response normalization,
/// b[c] = a[c] / (bias + alpha / local_size * sum a[c']^2)^beta
/// where c' runs over `local_size` channels centred on c, clipped at the edges.
struct LrnParams {
    std::size_t local_size = 5;
    double bias = 2.0;
    double alpha = 1e-4;
    double beta = 0.75;

    void validate() const;

    friend bool operator==(const LrnParams&, const LrnParams&) = default;
};

struct PoolParams {
    std::size_t window = 3;
    std::size_t stride = 2;

    friend bool operator==(const PoolParams&, const PoolParams&) = default;
};

// ---- convolution --------------------------------------------------------

template <typename T>
struct ConvGrads {
    BasicTensor<T> grad_input;
    BasicTensor<T> grad_weights;
    BasicTensor<T> grad_bias;
};

/// input [N,C,H,W], weights [K,C/groups,kh,kw], bias [K] -> [N,K,H',W'].
template <typename T>
BasicTensor<T> conv2d_forward(const BasicTensor<T>& input, const BasicTensor<T>& weights,
                              const BasicTensor<T>& bias, const ConvParams& p);

template <typename T>
ConvGrads<T> conv2d_backward(const BasicTensor<T>& grad_out, const BasicTensor<T>& input,
                             const BasicTensor<T>& weights, const ConvParams& p);

// ---- max pooling --------------------------------------------------------

template <typename T>
struct MaxPoolResult {
    BasicTensor<T> output;
    /// Flat input index of each output's winner. Ties go to the first
    /// element in row-major window order.
    std::vector<std::size_t> argmax;
};

template <typename T>
MaxPoolResult<T> maxpool_forward(const BasicTensor<T>& input, const PoolParams& p);

template <typename T>
BasicTensor<T> maxpool_backward(const BasicTensor<T>& grad_out, std::span<const std::size_t> argmax,
                                const Shape& input_shape);

// ---- elementwise --------------------------------------------------------

template <typename T>
BasicTensor<T> relu_forward(const BasicTensor<T>& input);

/// Passes gradient where input > 0; ReLU'(0) is taken as 0.
template <typename T>
BasicTensor<T> relu_backward(const BasicTensor<T>& grad_out, const BasicTensor<T>& input);

// ---- local response normalization ---------------------------------------

template <typename T>
BasicTensor<T> lrn_forward(const BasicTensor<T>& input, const LrnParams& p);

template <typename T>
BasicTensor<T> lrn_backward(const BasicTensor<T>& grad_out, const BasicTensor<T>& input,
                            const LrnParams& p);

// ---- fully connected ----------------------------------------------------

template <typename T>
struct LinearGrads {
    BasicTensor<T> grad_input;
    BasicTensor<T> grad_weights;
    BasicTensor<T> grad_bias;
};

/// input [N,D], weights [D,M], bias [M] -> input * weights + bias.
template <typename T>
BasicTensor<T> linear_forward(const BasicTensor<T>& input, const BasicTensor<T>& weights,
                              const BasicTensor<T>& bias);

template <typename T>
LinearGrads<T> linear_backward(const BasicTensor<T>& grad_out, const BasicTensor<T>& input,
                               const BasicTensor<T>& weights);

// ---- dropout ------------------------------------------------------------

struct DropoutMask {
    Shape shape;
    std::vector<std::uint8_t> keep;
    double scale = 1.0;
};

template <typename T>
struct DropoutResult {
    BasicTensor<T> output;
    DropoutMask mask;
};

/// Inverted dropout. In training mode each element is dropped with
/// probability `rate` and survivors are scaled by 1/(1-rate); the mask is a
/// function of `seed` alone. Inference mode is the identity.
template <typename T>
DropoutResult<T> dropout_forward(const BasicTensor<T>& input, double rate, std::uint64_t seed,
                                 bool training);

template <typename T>
BasicTensor<T> dropout_backward(const BasicTensor<T>& grad_out, const DropoutMask& mask);

// ---- classifier head ----------------------------------------------------

template <typename T>
struct SoftmaxCrossEntropy {
    T loss{};
    BasicTensor<T> probabilities;
    BasicTensor<T> grad_logits;
};

/// Row-wise max-shifted softmax of [N,C] logits.
template <typename T>
BasicTensor<T> softmax(const BasicTensor<T>& logits);

/// Mean negative log-likelihood of `labels`; grad_logits = (p - onehot)/N.
template <typename T>
SoftmaxCrossEntropy<T> softmax_cross_entropy(const BasicTensor<T>& logits,
                                             std::span<const int> labels);

}  // namespace burncnn
