#include "burncnn/ops.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <random>
#include <string>

#include "burncnn/errors.hpp"
#include "burncnn/parallel.hpp"

namespace burncnn {

namespace {

[[noreturn]] void fail(const std::string& what) { throw ContractViolation(what); }

void expect_rank(const Shape& s, std::size_t rank, const char* what) {
    if (s.size() != rank) {
        fail(std::string(what) + " must have rank " + std::to_string(rank) + ", got shape " +
             shape_string(s));
    }
}

void expect_dim(const char* tensor, std::size_t axis, std::size_t got, std::size_t want) {
    if (got != want) {
        fail(std::string(tensor) + " dimension " + std::to_string(axis) + " is " +
             std::to_string(got) + ", expected " + std::to_string(want));
    }
}

// Conv geometry shared by forward and backward.
struct ConvGeometry {
    std::size_t n, c, h, w;        // input
    std::size_t k, ho, wo;         // output
    std::size_t cg, kg;            // channels per group
    std::size_t kh, kw, stride, pad;
    std::size_t rows() const { return cg * kh * kw; }
    std::size_t cols() const { return ho * wo; }
};

template <typename T>
ConvGeometry conv_geometry(const BasicTensor<T>& input, const BasicTensor<T>& weights,
                           const ConvParams& p) {
    p.validate();
    expect_rank(input.shape(), 4, "conv input");
    expect_rank(weights.shape(), 4, "conv weights");
    expect_dim("conv input", 1, input.dim(1), p.input_channels);
    expect_dim("conv weights", 0, weights.dim(0), p.output_channels);
    expect_dim("conv weights", 1, weights.dim(1), p.input_channels / p.groups);
    expect_dim("conv weights", 2, weights.dim(2), p.kernel_height);
    expect_dim("conv weights", 3, weights.dim(3), p.kernel_width);
    ConvGeometry g{};
    g.n = input.dim(0);
    g.c = input.dim(1);
    g.h = input.dim(2);
    g.w = input.dim(3);
    g.k = p.output_channels;
    g.ho = p.output_extent(g.h, p.kernel_height);
    g.wo = p.output_extent(g.w, p.kernel_width);
    g.cg = p.input_channels / p.groups;
    g.kg = p.output_channels / p.groups;
    g.kh = p.kernel_height;
    g.kw = p.kernel_width;
    g.stride = p.stride;
    g.pad = p.padding;
    return g;
}

// Unfolds one group of one image into a [cg*kh*kw, ho*wo] patch matrix.
template <typename T>
void im2col(const T* image, const ConvGeometry& g, std::size_t group, std::vector<T>& col) {
    col.assign(g.rows() * g.cols(), T{0});
    parallel_for(g.cg, [&](std::size_t ci) {
        const T* plane = image + (group * g.cg + ci) * g.h * g.w;
        for (std::size_t i = 0; i < g.kh; ++i) {
            for (std::size_t j = 0; j < g.kw; ++j) {
                T* row = col.data() + ((ci * g.kh + i) * g.kw + j) * g.cols();
                for (std::size_t oh = 0; oh < g.ho; ++oh) {
                    const std::ptrdiff_t ih = static_cast<std::ptrdiff_t>(oh * g.stride + i) -
                                              static_cast<std::ptrdiff_t>(g.pad);
                    if (ih < 0 || ih >= static_cast<std::ptrdiff_t>(g.h)) continue;
                    for (std::size_t ow = 0; ow < g.wo; ++ow) {
                        const std::ptrdiff_t iw = static_cast<std::ptrdiff_t>(ow * g.stride + j) -
                                                  static_cast<std::ptrdiff_t>(g.pad);
                        if (iw < 0 || iw >= static_cast<std::ptrdiff_t>(g.w)) continue;
                        row[oh * g.wo + ow] = plane[ih * g.w + iw];
                    }
                }
            }
        }
    });
}

// Adds a [cg*kh*kw, ho*wo] patch-gradient matrix back onto one group's input planes.
template <typename T>
void col2im(const std::vector<T>& col, const ConvGeometry& g, std::size_t group, T* image) {
    parallel_for(g.cg, [&](std::size_t ci) {
        T* plane = image + (group * g.cg + ci) * g.h * g.w;
        for (std::size_t i = 0; i < g.kh; ++i) {
            for (std::size_t j = 0; j < g.kw; ++j) {
                const T* row = col.data() + ((ci * g.kh + i) * g.kw + j) * g.cols();
                for (std::size_t oh = 0; oh < g.ho; ++oh) {
                    const std::ptrdiff_t ih = static_cast<std::ptrdiff_t>(oh * g.stride + i) -
                                              static_cast<std::ptrdiff_t>(g.pad);
                    if (ih < 0 || ih >= static_cast<std::ptrdiff_t>(g.h)) continue;
                    for (std::size_t ow = 0; ow < g.wo; ++ow) {
                        const std::ptrdiff_t iw = static_cast<std::ptrdiff_t>(ow * g.stride + j) -
                                                  static_cast<std::ptrdiff_t>(g.pad);
                        if (iw < 0 || iw >= static_cast<std::ptrdiff_t>(g.w)) continue;
                        plane[ih * g.w + iw] += row[oh * g.wo + ow];
                    }
                }
            }
        }
    });
}

constexpr std::size_t kLinearBlock = 256;

}  // namespace

// ---- parameter validation ------------------------------------------------

void ConvParams::validate() const {
    if (kernel_height == 0 || kernel_width == 0 || stride == 0 || input_channels == 0 ||
        output_channels == 0 || groups == 0) {
        fail("conv params must be positive (kernel, stride, channels, groups)");
    }
    if (input_channels % groups != 0) {
        fail("conv input_channels " + std::to_string(input_channels) + " not divisible by groups " +
             std::to_string(groups));
    }
    if (output_channels % groups != 0) {
        fail("conv output_channels " + std::to_string(output_channels) +
             " not divisible by groups " + std::to_string(groups));
    }
}

std::size_t ConvParams::output_extent(std::size_t input_extent, std::size_t kernel) const {
    const std::size_t padded = input_extent + 2 * padding;
    if (padded < kernel) {
        fail("conv kernel " + std::to_string(kernel) + " larger than padded input extent " +
             std::to_string(padded));
    }
    return (padded - kernel) / stride + 1;
}

Shape ConvParams::weight_shape() const {
    return {output_channels, input_channels / groups, kernel_height, kernel_width};
}

void LrnParams::validate() const {
    if (local_size < 1) fail("lrn local_size must be >= 1");
    if (!(bias > 0.0)) fail("lrn bias k must be > 0");
}

// ---- convolution --------------------------------------------------------

template <typename T>
BasicTensor<T> conv2d_forward(const BasicTensor<T>& input, const BasicTensor<T>& weights,
                              const BasicTensor<T>& bias, const ConvParams& p) {
    const ConvGeometry g = conv_geometry(input, weights, p);
    expect_rank(bias.shape(), 1, "conv bias");
    expect_dim("conv bias", 0, bias.dim(0), g.k);

    BasicTensor<T> out({g.n, g.k, g.ho, g.wo});
    const std::size_t rows = g.rows(), cols = g.cols();
    std::vector<T> col;
    for (std::size_t n = 0; n < g.n; ++n) {
        const T* image = input.data().data() + n * g.c * g.h * g.w;
        for (std::size_t grp = 0; grp < p.groups; ++grp) {
            im2col(image, g, grp, col);
            parallel_for(g.kg, [&](std::size_t kk) {
                const std::size_t k = grp * g.kg + kk;
                T* dst = &out.at(n, k, 0, 0);
                std::fill(dst, dst + cols, bias[k]);
                const T* wrow = weights.data().data() + k * rows;
                for (std::size_t r = 0; r < rows; ++r) {
                    const T wv = wrow[r];
                    const T* src = col.data() + r * cols;
                    for (std::size_t q = 0; q < cols; ++q) dst[q] += wv * src[q];
                }
            });
        }
    }
    return out;
}

template <typename T>
ConvGrads<T> conv2d_backward(const BasicTensor<T>& grad_out, const BasicTensor<T>& input,
                             const BasicTensor<T>& weights, const ConvParams& p) {
    const ConvGeometry g = conv_geometry(input, weights, p);
    expect_rank(grad_out.shape(), 4, "conv grad_out");
    expect_dim("conv grad_out", 0, grad_out.dim(0), g.n);
    expect_dim("conv grad_out", 1, grad_out.dim(1), g.k);
    expect_dim("conv grad_out", 2, grad_out.dim(2), g.ho);
    expect_dim("conv grad_out", 3, grad_out.dim(3), g.wo);

    ConvGrads<T> grads{BasicTensor<T>(input.shape()), BasicTensor<T>(weights.shape()),
                       BasicTensor<T>({g.k})};
    const std::size_t rows = g.rows(), cols = g.cols();

    parallel_for(g.k, [&](std::size_t k) {
        T acc{0};
        for (std::size_t n = 0; n < g.n; ++n) {
            const T* src = &grad_out.at(n, k, 0, 0);
            for (std::size_t q = 0; q < cols; ++q) acc += src[q];
        }
        grads.grad_bias[k] = acc;
    });

    std::vector<T> col;
    std::vector<T> grad_col(rows * cols);
    for (std::size_t n = 0; n < g.n; ++n) {
        const T* image = input.data().data() + n * g.c * g.h * g.w;
        T* grad_image = grads.grad_input.data().data() + n * g.c * g.h * g.w;
        for (std::size_t grp = 0; grp < p.groups; ++grp) {
            im2col(image, g, grp, col);
            parallel_for(g.kg, [&](std::size_t kk) {
                const std::size_t k = grp * g.kg + kk;
                const T* go = &grad_out.at(n, k, 0, 0);
                T* gw = grads.grad_weights.data().data() + k * rows;
                for (std::size_t r = 0; r < rows; ++r) {
                    const T* src = col.data() + r * cols;
                    T acc{0};
                    for (std::size_t q = 0; q < cols; ++q) acc += go[q] * src[q];
                    gw[r] += acc;
                }
            });
            parallel_for(rows, [&](std::size_t r) {
                T* dst = grad_col.data() + r * cols;
                std::fill(dst, dst + cols, T{0});
                for (std::size_t kk = 0; kk < g.kg; ++kk) {
                    const std::size_t k = grp * g.kg + kk;
                    const T wv = weights[k * rows + r];
                    const T* go = &grad_out.at(n, k, 0, 0);
                    for (std::size_t q = 0; q < cols; ++q) dst[q] += wv * go[q];
                }
            });
            col2im(grad_col, g, grp, grad_image);
        }
    }
    return grads;
}

// ---- max pooling --------------------------------------------------------

template <typename T>
MaxPoolResult<T> maxpool_forward(const BasicTensor<T>& input, const PoolParams& p) {
    expect_rank(input.shape(), 4, "maxpool input");
    if (p.window == 0 || p.stride == 0) fail("maxpool window and stride must be positive");
    const std::size_t n = input.dim(0), c = input.dim(1), h = input.dim(2), w = input.dim(3);
    if (p.window > h) {
        fail("maxpool window " + std::to_string(p.window) + " larger than input dimension 2 (" +
             std::to_string(h) + ")");
    }
    if (p.window > w) {
        fail("maxpool window " + std::to_string(p.window) + " larger than input dimension 3 (" +
             std::to_string(w) + ")");
    }
    const std::size_t ho = (h - p.window) / p.stride + 1;
    const std::size_t wo = (w - p.window) / p.stride + 1;

    MaxPoolResult<T> res{BasicTensor<T>({n, c, ho, wo}), std::vector<std::size_t>(n * c * ho * wo)};
    parallel_for(n * c, [&](std::size_t plane) {
        const std::size_t in_base = plane * h * w;
        const std::size_t out_base = plane * ho * wo;
        for (std::size_t oh = 0; oh < ho; ++oh) {
            for (std::size_t ow = 0; ow < wo; ++ow) {
                std::size_t best = in_base + (oh * p.stride) * w + ow * p.stride;
                T best_val = input[best];
                for (std::size_t i = 0; i < p.window; ++i) {
                    for (std::size_t j = 0; j < p.window; ++j) {
                        const std::size_t idx = in_base + (oh * p.stride + i) * w + ow * p.stride + j;
                        if (input[idx] > best_val) {
                            best_val = input[idx];
                            best = idx;
                        }
                    }
                }
                res.output[out_base + oh * wo + ow] = best_val;
                res.argmax[out_base + oh * wo + ow] = best;
            }
        }
    });
    return res;
}

template <typename T>
BasicTensor<T> maxpool_backward(const BasicTensor<T>& grad_out, std::span<const std::size_t> argmax,
                                const Shape& input_shape) {
    if (argmax.size() != grad_out.size()) {
        fail("maxpool argmax has " + std::to_string(argmax.size()) + " entries for grad_out of " +
             std::to_string(grad_out.size()));
    }
    BasicTensor<T> grad_in(input_shape);
    for (std::size_t o = 0; o < argmax.size(); ++o) {
        if (argmax[o] >= grad_in.size()) {
            fail("maxpool argmax index " + std::to_string(argmax[o]) + " out of range for input " +
                 shape_string(input_shape));
        }
        grad_in[argmax[o]] += grad_out[o];
    }
    return grad_in;
}

// ---- elementwise --------------------------------------------------------

template <typename T>
BasicTensor<T> relu_forward(const BasicTensor<T>& input) {
    BasicTensor<T> out = input;
    for (auto& v : out.data()) v = v > T{0} ? v : T{0};
    return out;
}

template <typename T>
BasicTensor<T> relu_backward(const BasicTensor<T>& grad_out, const BasicTensor<T>& input) {
    if (grad_out.shape() != input.shape()) {
        fail("relu grad_out shape " + shape_string(grad_out.shape()) + " differs from input " +
             shape_string(input.shape()));
    }
    BasicTensor<T> out(input.shape());
    for (std::size_t i = 0; i < input.size(); ++i) out[i] = input[i] > T{0} ? grad_out[i] : T{0};
    return out;
}

// ---- local response normalization ---------------------------------------

namespace {

struct LrnWindow {
    std::size_t lo, hi;  // inclusive
};

LrnWindow lrn_window(std::size_t c, std::size_t channels, std::size_t local_size) {
    const std::size_t before = (local_size - 1) / 2;
    const std::size_t after = local_size - 1 - before;
    return {c >= before ? c - before : 0, std::min(channels - 1, c + after)};
}

// scale[n,c,h,w] = bias + alpha/size * sum over the window of a^2.
template <typename T>
BasicTensor<T> lrn_scale(const BasicTensor<T>& input, const LrnParams& p) {
    const std::size_t n = input.dim(0), c = input.dim(1), hw = input.dim(2) * input.dim(3);
    BasicTensor<T> scale(input.shape());
    const T coeff = static_cast<T>(p.alpha / static_cast<double>(p.local_size));
    parallel_for(n * c, [&](std::size_t plane) {
        const std::size_t b = plane / c, ch = plane % c;
        const LrnWindow win = lrn_window(ch, c, p.local_size);
        T* dst = scale.data().data() + plane * hw;
        std::fill(dst, dst + hw, T{0});
        for (std::size_t cc = win.lo; cc <= win.hi; ++cc) {
            const T* src = input.data().data() + (b * c + cc) * hw;
            for (std::size_t q = 0; q < hw; ++q) dst[q] += src[q] * src[q];
        }
        for (std::size_t q = 0; q < hw; ++q) dst[q] = static_cast<T>(p.bias) + coeff * dst[q];
    });
    return scale;
}

}  // namespace

template <typename T>
BasicTensor<T> lrn_forward(const BasicTensor<T>& input, const LrnParams& p) {
    p.validate();
    expect_rank(input.shape(), 4, "lrn input");
    const BasicTensor<T> scale = lrn_scale(input, p);
    BasicTensor<T> out(input.shape());
    const T beta = static_cast<T>(p.beta);
    for (std::size_t i = 0; i < input.size(); ++i) out[i] = input[i] * std::pow(scale[i], -beta);
    return out;
}

template <typename T>
BasicTensor<T> lrn_backward(const BasicTensor<T>& grad_out, const BasicTensor<T>& input,
                            const LrnParams& p) {
    p.validate();
    expect_rank(input.shape(), 4, "lrn input");
    if (grad_out.shape() != input.shape()) {
        fail("lrn grad_out shape " + shape_string(grad_out.shape()) + " differs from input " +
             shape_string(input.shape()));
    }
    const std::size_t n = input.dim(0), c = input.dim(1), hw = input.dim(2) * input.dim(3);
    const BasicTensor<T> scale = lrn_scale(input, p);
    const T beta = static_cast<T>(p.beta);

    // ratio[c] = g[c] * a[c] * scale[c]^(-beta-1), summed over every window containing j.
    BasicTensor<T> ratio(input.shape());
    for (std::size_t i = 0; i < input.size(); ++i) {
        ratio[i] = grad_out[i] * input[i] * std::pow(scale[i], -beta - T{1});
    }

    BasicTensor<T> grad_in(input.shape());
    const T coeff = static_cast<T>(2.0 * p.alpha * p.beta / static_cast<double>(p.local_size));
    const std::size_t before = (p.local_size - 1) / 2;
    const std::size_t after = p.local_size - 1 - before;
    parallel_for(n * c, [&](std::size_t plane) {
        const std::size_t b = plane / c, j = plane % c;
        // c contains j in its window iff c - before <= j <= c + after.
        const std::size_t lo = j >= after ? j - after : 0;
        const std::size_t hi = std::min(c - 1, j + before);
        const std::size_t base = plane * hw;
        for (std::size_t q = 0; q < hw; ++q) {
            T acc{0};
            for (std::size_t cc = lo; cc <= hi; ++cc) acc += ratio[(b * c + cc) * hw + q];
            grad_in[base + q] =
                grad_out[base + q] * std::pow(scale[base + q], -beta) - coeff * input[base + q] * acc;
        }
    });
    return grad_in;
}

// ---- fully connected ----------------------------------------------------

template <typename T>
BasicTensor<T> linear_forward(const BasicTensor<T>& input, const BasicTensor<T>& weights,
                              const BasicTensor<T>& bias) {
    expect_rank(input.shape(), 2, "linear input");
    expect_rank(weights.shape(), 2, "linear weights");
    expect_rank(bias.shape(), 1, "linear bias");
    const std::size_t n = input.dim(0), d = input.dim(1), m = weights.dim(1);
    expect_dim("linear weights", 0, weights.dim(0), d);
    expect_dim("linear bias", 0, bias.dim(0), m);

    BasicTensor<T> out({n, m});
    const std::size_t blocks = (m + kLinearBlock - 1) / kLinearBlock;
    parallel_for(blocks, [&](std::size_t blk) {
        const std::size_t m0 = blk * kLinearBlock, m1 = std::min(m, m0 + kLinearBlock);
        for (std::size_t row = 0; row < n; ++row) {
            T* dst = out.data().data() + row * m;
            for (std::size_t j = m0; j < m1; ++j) dst[j] = bias[j];
            for (std::size_t k = 0; k < d; ++k) {
                const T x = input[row * d + k];
                const T* wrow = weights.data().data() + k * m;
                for (std::size_t j = m0; j < m1; ++j) dst[j] += x * wrow[j];
            }
        }
    });
    return out;
}

template <typename T>
LinearGrads<T> linear_backward(const BasicTensor<T>& grad_out, const BasicTensor<T>& input,
                               const BasicTensor<T>& weights) {
    expect_rank(input.shape(), 2, "linear input");
    expect_rank(weights.shape(), 2, "linear weights");
    expect_rank(grad_out.shape(), 2, "linear grad_out");
    const std::size_t n = input.dim(0), d = input.dim(1), m = weights.dim(1);
    expect_dim("linear weights", 0, weights.dim(0), d);
    expect_dim("linear grad_out", 0, grad_out.dim(0), n);
    expect_dim("linear grad_out", 1, grad_out.dim(1), m);

    LinearGrads<T> grads{BasicTensor<T>({n, d}), BasicTensor<T>({d, m}), BasicTensor<T>({m})};
    for (std::size_t row = 0; row < n; ++row) {
        for (std::size_t j = 0; j < m; ++j) grads.grad_bias[j] += grad_out[row * m + j];
    }
    parallel_for(d, [&](std::size_t k) {
        T* dst = grads.grad_weights.data().data() + k * m;
        for (std::size_t row = 0; row < n; ++row) {
            const T x = input[row * d + k];
            const T* go = grad_out.data().data() + row * m;
            for (std::size_t j = 0; j < m; ++j) dst[j] += x * go[j];
        }
    });
    parallel_for(n, [&](std::size_t row) {
        const T* go = grad_out.data().data() + row * m;
        for (std::size_t k = 0; k < d; ++k) {
            const T* wrow = weights.data().data() + k * m;
            T acc{0};
            for (std::size_t j = 0; j < m; ++j) acc += go[j] * wrow[j];
            grads.grad_input[row * d + k] = acc;
        }
    });
    return grads;
}

// ---- dropout ------------------------------------------------------------

template <typename T>
DropoutResult<T> dropout_forward(const BasicTensor<T>& input, double rate, std::uint64_t seed,
                                 bool training) {
    if (!(rate >= 0.0) || rate >= 1.0) {
        fail("dropout rate must be in [0, 1), got " + std::to_string(rate));
    }
    DropoutResult<T> res{input, DropoutMask{input.shape(), std::vector<std::uint8_t>(input.size(), 1), 1.0}};
    if (!training || rate == 0.0) return res;

    res.mask.scale = 1.0 / (1.0 - rate);
    std::mt19937_64 gen(seed);
    const T scale = static_cast<T>(res.mask.scale);
    for (std::size_t i = 0; i < input.size(); ++i) {
        // 53 random bits -> uniform in [0, 1)
        const double u = static_cast<double>(gen() >> 11) * 0x1p-53;
        const bool keep = u >= rate;
        res.mask.keep[i] = keep ? 1 : 0;
        res.output[i] = keep ? input[i] * scale : T{0};
    }
    return res;
}

template <typename T>
BasicTensor<T> dropout_backward(const BasicTensor<T>& grad_out, const DropoutMask& mask) {
    if (grad_out.shape() != mask.shape) {
        fail("dropout grad_out shape " + shape_string(grad_out.shape()) + " differs from mask " +
             shape_string(mask.shape));
    }
    BasicTensor<T> out(grad_out.shape());
    const T scale = static_cast<T>(mask.scale);
    for (std::size_t i = 0; i < out.size(); ++i) out[i] = mask.keep[i] ? grad_out[i] * scale : T{0};
    return out;
}

// ---- classifier head ----------------------------------------------------

template <typename T>
BasicTensor<T> softmax(const BasicTensor<T>& logits) {
    expect_rank(logits.shape(), 2, "softmax logits");
    const std::size_t n = logits.dim(0), c = logits.dim(1);
    BasicTensor<T> probs(logits.shape());
    for (std::size_t row = 0; row < n; ++row) {
        const T* x = logits.data().data() + row * c;
        T* p = probs.data().data() + row * c;
        const T peak = *std::max_element(x, x + c);
        T sum{0};
        for (std::size_t j = 0; j < c; ++j) {
            p[j] = std::exp(x[j] - peak);
            sum += p[j];
        }
        for (std::size_t j = 0; j < c; ++j) p[j] /= sum;
    }
    return probs;
}

template <typename T>
SoftmaxCrossEntropy<T> softmax_cross_entropy(const BasicTensor<T>& logits,
                                             std::span<const int> labels) {
    expect_rank(logits.shape(), 2, "softmax logits");
    const std::size_t n = logits.dim(0), c = logits.dim(1);
    if (labels.size() != n) {
        fail("got " + std::to_string(labels.size()) + " labels for " + std::to_string(n) + " logit rows");
    }
    for (std::size_t row = 0; row < n; ++row) {
        if (labels[row] < 0 || static_cast<std::size_t>(labels[row]) >= c) {
            fail("label " + std::to_string(labels[row]) + " at row " + std::to_string(row) +
                 " outside [0, " + std::to_string(c) + ")");
        }
    }

    SoftmaxCrossEntropy<T> res{T{0}, BasicTensor<T>(logits.shape()), BasicTensor<T>(logits.shape())};
    double total = 0.0;
    const T inv_n = T{1} / static_cast<T>(n);
    for (std::size_t row = 0; row < n; ++row) {
        const T* x = logits.data().data() + row * c;
        T* p = res.probabilities.data().data() + row * c;
        const T peak = *std::max_element(x, x + c);
        T sum{0};
        for (std::size_t j = 0; j < c; ++j) {
            p[j] = std::exp(x[j] - peak);
            sum += p[j];
        }
        for (std::size_t j = 0; j < c; ++j) p[j] /= sum;
        const auto y = static_cast<std::size_t>(labels[row]);
        total += -(static_cast<double>(x[y]) - static_cast<double>(peak) - std::log(static_cast<double>(sum)));
        T* g = res.grad_logits.data().data() + row * c;
        for (std::size_t j = 0; j < c; ++j) g[j] = (p[j] - (j == y ? T{1} : T{0})) * inv_n;
    }
    res.loss = static_cast<T>(total / static_cast<double>(n));
    return res;
}

// ---- instantiations -----------------------------------------------------

#define BURNCNN_INSTANTIATE_OPS(T)                                                                  \
    template BasicTensor<T> conv2d_forward(const BasicTensor<T>&, const BasicTensor<T>&,            \
                                           const BasicTensor<T>&, const ConvParams&);               \
    template ConvGrads<T> conv2d_backward(const BasicTensor<T>&, const BasicTensor<T>&,             \
                                          const BasicTensor<T>&, const ConvParams&);                \
    template MaxPoolResult<T> maxpool_forward(const BasicTensor<T>&, const PoolParams&);            \
    template BasicTensor<T> maxpool_backward(const BasicTensor<T>&, std::span<const std::size_t>,   \
                                             const Shape&);                                         \
    template BasicTensor<T> relu_forward(const BasicTensor<T>&);                                    \
    template BasicTensor<T> relu_backward(const BasicTensor<T>&, const BasicTensor<T>&);            \
    template BasicTensor<T> lrn_forward(const BasicTensor<T>&, const LrnParams&);                   \
    template BasicTensor<T> lrn_backward(const BasicTensor<T>&, const BasicTensor<T>&,              \
                                         const LrnParams&);                                         \
    template BasicTensor<T> linear_forward(const BasicTensor<T>&, const BasicTensor<T>&,            \
                                           const BasicTensor<T>&);                                  \
    template LinearGrads<T> linear_backward(const BasicTensor<T>&, const BasicTensor<T>&,           \
                                            const BasicTensor<T>&);                                 \
    template DropoutResult<T> dropout_forward(const BasicTensor<T>&, double, std::uint64_t, bool);  \
    template BasicTensor<T> dropout_backward(const BasicTensor<T>&, const DropoutMask&);            \
    template BasicTensor<T> softmax(const BasicTensor<T>&);                                         \
    template SoftmaxCrossEntropy<T> softmax_cross_entropy(const BasicTensor<T>&, std::span<const int>);

BURNCNN_INSTANTIATE_OPS(float)
BURNCNN_INSTANTIATE_OPS(double)

#undef BURNCNN_INSTANTIATE_OPS

}  // namespace burncnn
