// Acceptance suite: one PASS/FAIL line per criterion. Exit status is 0 only
// if every criterion passes.

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <functional>
#include <map>
#include <random>
#include <set>
#include <sstream>
#include <string>
#include <vector>

#include "burncnn/checkpoint.hpp"
#include "burncnn/dataset.hpp"
#include "burncnn/image.hpp"
#include "burncnn/metrics.hpp"
#include "burncnn/network.hpp"
#include "burncnn/ops.hpp"
#include "burncnn/parallel.hpp"
#include "burncnn/trainer.hpp"
#include "test_support.hpp"

using namespace burncnn;
using namespace burncnn::testkit;
namespace fs = std::filesystem;

namespace {

// ---- pinned tolerances and budgets ------------------------------------------------------

constexpr double kFdStep = 1e-4;
constexpr double kOpGradTol = 1e-4;
constexpr double kNetGradTol = 1e-3;
constexpr std::size_t kShapesPerOp = 20;
constexpr double kGradBudgetSec = 300;

constexpr double kForwardTol = 1e-6;
constexpr std::size_t kForwardShapes = 100;
constexpr double kForwardBudgetSec = 120;

constexpr double kF1Tol = 1e-4;

constexpr std::size_t kMetricInstances = 1000;
constexpr std::size_t kMetricMaxN = 200;
constexpr double kAucTol = 1e-12;
constexpr double kMetricBudgetSec = 60;

constexpr std::size_t kProbeImages = 12;
constexpr std::size_t kProbeEpochs = 200;
constexpr double kProbeBudgetSec = 600;

constexpr std::size_t kLeakageSeeds = 100;

// ---- reporting ----------------------------------------------------------------------------

struct Outcome {
    bool pass = true;
    std::string detail;
};

int g_failures = 0;

void report(const std::string& name, const Outcome& o) {
    std::printf("%s %s: %s\n", o.pass ? "PASS" : "FAIL", name.c_str(), o.detail.c_str());
    std::fflush(stdout);
    if (!o.pass) ++g_failures;
}

void run_criterion(const std::string& name, const std::function<Outcome()>& body) {
    Outcome o;
    try {
        o = body();
    } catch (const std::exception& e) {
        o = {false, std::string("exception: ") + e.what()};
    }
    report(name, o);
}

double seconds_since(std::chrono::steady_clock::time_point t0) {
    return std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
}

std::string fmt(const char* f, double v) {
    char buf[64];
    std::snprintf(buf, sizeof buf, f, v);
    return buf;
}

std::vector<double> as_vec(const TensorD& t) { return {t.values().begin(), t.values().end()}; }

// ---- random op configurations ------------------------------------------------------------

ConvParams random_conv(std::mt19937_64& rng) {
    std::uniform_int_distribution<std::size_t> g(1, 2), cc(1, 3), k(1, 5), s(1, 3), pad(0, 2);
    ConvParams p;
    p.groups = g(rng);
    p.input_channels = p.groups * cc(rng);
    p.output_channels = p.groups * cc(rng);
    p.kernel_height = k(rng);
    p.kernel_width = k(rng);
    p.stride = s(rng);
    p.padding = pad(rng);
    return p;
}

Shape conv_input(const ConvParams& p, std::mt19937_64& rng) {
    std::uniform_int_distribution<std::size_t> n(1, 2), extra(0, 5);
    return {n(rng), p.input_channels, p.kernel_height + extra(rng), p.kernel_width + extra(rng)};
}

LrnParams random_lrn(std::mt19937_64& rng) {
    std::uniform_int_distribution<std::size_t> ls(1, 7);
    std::uniform_real_distribution<double> alpha(1e-4, 1.0), bias(0.5, 2.5), beta(0.4, 1.0);
    return {ls(rng), bias(rng), alpha(rng), beta(rng)};
}

// ---- criterion: gradients -------------------------------------------------------------------

struct MaxTracker {
    double worst = 0;
    std::string where;
    std::size_t scalars = 0;
    void add(const GradCheck& g, const std::string& what) {
        scalars += g.checked;
        if (g.max_rel_error > worst) {
            worst = g.max_rel_error;
            where = what;
        }
    }
};

/// Every op's backward against central differences of sum(r * op(x)).
std::map<std::string, MaxTracker> op_gradient_checks(std::mt19937_64& rng) {
    std::map<std::string, MaxTracker> t;
    for (std::size_t trial = 0; trial < kShapesPerOp; ++trial) {
        {
            const ConvParams p = random_conv(rng);
            TensorD x = random_tensor(conv_input(p, rng), rng), w = random_tensor(p.weight_shape(), rng),
                    b = random_tensor({p.output_channels}, rng);
            const TensorD r = random_tensor(conv2d_forward(x, w, b, p).shape(), rng);
            const auto g = conv2d_backward(r, x, w, p);
            auto xv = as_vec(x), wv = as_vec(w), bv = as_vec(b);
            auto f = [&] {
                return weighted_sum(conv2d_forward(TensorD(x.shape(), xv), TensorD(w.shape(), wv), TensorD(b.shape(), bv), p), r);
            };
            t["conv"].add(check_gradient(xv, as_vec(g.grad_input), f, kFdStep), "input");
            t["conv"].add(check_gradient(wv, as_vec(g.grad_weights), f, kFdStep), "weights");
            t["conv"].add(check_gradient(bv, as_vec(g.grad_bias), f, kFdStep), "bias");
        }
        {
            std::uniform_int_distribution<std::size_t> win(1, 3), st(1, 3), ext(0, 5), n(1, 2), c(1, 3);
            const PoolParams p{win(rng), st(rng)};
            TensorD x = distinct_tensor({n(rng), c(rng), p.window + ext(rng), p.window + ext(rng)}, rng, 1e-2);
            const auto fwd = maxpool_forward(x, p);
            const TensorD r = random_tensor(fwd.output.shape(), rng);
            const TensorD g = maxpool_backward(r, fwd.argmax, x.shape());
            auto xv = as_vec(x);
            auto f = [&] { return weighted_sum(maxpool_forward(TensorD(x.shape(), xv), p).output, r); };
            t["maxpool"].add(check_gradient(xv, as_vec(g), f, kFdStep), "input");
        }
        {
            std::uniform_int_distribution<std::size_t> d(1, 6);
            TensorD x = away_from_zero({d(rng), d(rng), d(rng), d(rng)}, rng, 1e-2);
            const TensorD r = random_tensor(x.shape(), rng);
            const TensorD g = relu_backward(r, x);
            auto xv = as_vec(x);
            auto f = [&] { return weighted_sum(relu_forward(TensorD(x.shape(), xv)), r); };
            t["relu"].add(check_gradient(xv, as_vec(g), f, kFdStep), "input");
        }
        {
            // Alternate between the AlexNet constants and random strong settings.
            const LrnParams p = trial % 2 == 0 ? LrnParams{} : random_lrn(rng);
            std::uniform_int_distribution<std::size_t> n(1, 2), c(1, 9), hw(1, 4);
            TensorD x = random_tensor({n(rng), c(rng), hw(rng), hw(rng)}, rng, -3, 3);
            const TensorD r = random_tensor(x.shape(), rng);
            const TensorD g = lrn_backward(r, x, p);
            auto xv = as_vec(x);
            auto f = [&] { return weighted_sum(lrn_forward(TensorD(x.shape(), xv), p), r); };
            t["lrn"].add(check_gradient(xv, as_vec(g), f, kFdStep), "input");
        }
        {
            std::uniform_int_distribution<std::size_t> n(1, 4), d(1, 12), m(1, 10);
            const std::size_t dn = n(rng), dd = d(rng), dm = m(rng);
            TensorD x = random_tensor({dn, dd}, rng), w = random_tensor({dd, dm}, rng), b = random_tensor({dm}, rng);
            const TensorD r = random_tensor({dn, dm}, rng);
            const auto g = linear_backward(r, x, w);
            auto xv = as_vec(x), wv = as_vec(w), bv = as_vec(b);
            auto f = [&] {
                return weighted_sum(linear_forward(TensorD(x.shape(), xv), TensorD(w.shape(), wv), TensorD(b.shape(), bv)), r);
            };
            t["linear"].add(check_gradient(xv, as_vec(g.grad_input), f, kFdStep), "input");
            t["linear"].add(check_gradient(wv, as_vec(g.grad_weights), f, kFdStep), "weights");
            t["linear"].add(check_gradient(bv, as_vec(g.grad_bias), f, kFdStep), "bias");
        }
        {
            std::uniform_int_distribution<std::size_t> n(1, 4), d(2, 40);
            std::uniform_real_distribution<double> rate(0.1, 0.8);
            const double q = rate(rng);
            const std::uint64_t seed = rng();
            TensorD x = random_tensor({n(rng), d(rng)}, rng);
            const TensorD r = random_tensor(x.shape(), rng);
            const auto fwd = dropout_forward(x, q, seed, true);
            const TensorD g = dropout_backward(r, fwd.mask);
            auto xv = as_vec(x);
            auto f = [&] { return weighted_sum(dropout_forward(TensorD(x.shape(), xv), q, seed, true).output, r); };
            t["dropout"].add(check_gradient(xv, as_vec(g), f, kFdStep), "input");
        }
        {
            std::uniform_int_distribution<std::size_t> n(1, 6), c(2, 5);
            const std::size_t dn = n(rng), dc = c(rng);
            TensorD z = random_tensor({dn, dc}, rng, -4, 4);
            std::vector<int> labels(dn);
            std::uniform_int_distribution<int> lab(0, static_cast<int>(dc) - 1);
            for (auto& l : labels) l = lab(rng);
            const auto ce = softmax_cross_entropy(z, labels);
            auto zv = as_vec(z);
            auto f = [&] { return softmax_cross_entropy(TensorD(z.shape(), zv), labels).loss; };
            t["softmax_cross_entropy"].add(check_gradient(zv, as_vec(ce.grad_logits), f, kFdStep), "logits");
        }
    }
    return t;
}

struct NetGradResult {
    double worst = 0;
    std::string where;
    std::size_t scalars = 0;
    std::size_t shrunk = 0;      // scalars that needed a smaller step
    std::size_t unresolved = 0;  // still crossing a kink at the smallest step
};

/// Loss plus the activation pattern (ReLU signs, pool winners) that fixes
/// which smooth piece of the network the point lies on.
struct LossPoint {
    double loss = 0;
    std::vector<std::size_t> pattern;
};

LossPoint network_loss(const NetworkSpec& spec, const BasicParameterSet<double>& params, const TensorD& x,
                       std::span<const int> labels) {
    const auto f = forward(spec, params, x, Mode::infer);
    LossPoint p{softmax_cross_entropy(f.logits, labels).loss, {}};
    for (std::size_t i = 0; i < spec.layers.size(); ++i) {
        const auto& lc = f.cache.layers[i];
        if (spec.layers[i].kind() == LayerKind::relu) {
            for (double v : lc.input.values()) p.pattern.push_back(v > 0);
        } else if (spec.layers[i].kind() == LayerKind::maxpool) {
            p.pattern.insert(p.pattern.end(), lc.argmax.begin(), lc.argmax.end());
        }
    }
    return p;
}

/// Central difference of `at(s)`, the loss with parameters moved by s. When
/// either side lands on a different activation pattern than `base` the step
/// has crossed a kink and the quotient says nothing about the derivative, so
/// the step shrinks tenfold, at most three times.
template <typename F>
double kink_free_difference(F&& at, const std::vector<std::size_t>& base, NetGradResult& r) {
    double h = kFdStep;
    for (int k = 0;; ++k) {
        const LossPoint up = at(h), down = at(-h);
        const bool smooth = up.pattern == base && down.pattern == base;
        if (smooth || k == 3) {
            r.shrunk += k > 0;
            r.unresolved += !smooth;
            return (up.loss - down.loss) / (2 * h);
        }
        h /= 10;
    }
}

/// Per-scalar central differences over the parameters of `spec`, every
/// scalar when `per_tensor` is 0, else that many evenly spread per tensor.
NetGradResult network_gradient_check(const NetworkSpec& spec, std::uint64_t seed, std::size_t batch,
                                     std::size_t per_tensor) {
    auto params = init_parameters(spec, seed).cast<double>();
    std::mt19937_64 rng(seed + 1);
    const TensorD x = random_tensor({batch, 3, spec.input.height, spec.input.width}, rng, -1, 1);
    std::vector<int> labels(batch);
    for (std::size_t i = 0; i < batch; ++i) labels[i] = static_cast<int>(i % spec.num_classes);

    const auto fwd = forward(spec, params, x, Mode::infer);
    const auto ce = softmax_cross_entropy(fwd.logits, labels);
    const auto grads = backward(spec, params, fwd.cache, ce.grad_logits);
    const auto base = network_loss(spec, params, x, labels).pattern;

    NetGradResult r;
    for (auto& e : params.entries()) {
        const auto& g = grads.at(e.name);
        for (int part = 0; part < 2; ++part) {
            TensorD& tensor = part == 0 ? e.weights : e.bias;
            const TensorD& grad = part == 0 ? g.weights : g.bias;
            std::vector<std::size_t> idx;
            if (per_tensor == 0 || per_tensor >= tensor.size()) {
                idx.resize(tensor.size());
                for (std::size_t i = 0; i < idx.size(); ++i) idx[i] = i;
            } else {
                std::uniform_int_distribution<std::size_t> pick(0, tensor.size() - 1);
                for (std::size_t k = 0; k < per_tensor; ++k) idx.push_back(pick(rng));
            }
            for (auto i : idx) {
                const double orig = tensor[i];
                const double numeric = kink_free_difference(
                    [&](double s) {
                        tensor[i] = orig + s;
                        LossPoint p = network_loss(spec, params, x, labels);
                        tensor[i] = orig;
                        return p;
                    },
                    base, r);
                const double err = relative_error(grad[i], numeric);
                ++r.scalars;
                if (err > r.worst) {
                    r.worst = err;
                    r.where = e.name + (part == 0 ? ".weight[" : ".bias[") + std::to_string(i) + "]";
                }
            }
        }
    }
    return r;
}

/// Directional derivative along random unit directions spanning every
/// trainable scalar at once.
NetGradResult network_directional_check(const NetworkSpec& spec, std::uint64_t seed, std::size_t batch,
                                        std::size_t directions) {
    const auto base = init_parameters(spec, seed).cast<double>();
    std::mt19937_64 rng(seed + 2);
    const TensorD x = random_tensor({batch, 3, spec.input.height, spec.input.width}, rng, -1, 1);
    std::vector<int> labels(batch);
    for (std::size_t i = 0; i < batch; ++i) labels[i] = static_cast<int>((i + 1) % spec.num_classes);

    const auto fwd = forward(spec, base, x, Mode::infer);
    const auto grads = backward(spec, base, fwd.cache, softmax_cross_entropy(fwd.logits, labels).grad_logits);
    const auto pattern = network_loss(spec, base, x, labels).pattern;

    NetGradResult r;
    std::normal_distribution<double> nd(0.0, 1.0);
    for (std::size_t d = 0; d < directions; ++d) {
        auto dir = base;
        double norm = 0, analytic = 0;
        for (auto& e : dir.entries()) {
            for (auto& v : e.weights.data()) norm += (v = nd(rng)) * v;
            for (auto& v : e.bias.data()) norm += (v = nd(rng)) * v;
        }
        norm = std::sqrt(norm);
        for (auto& e : dir.entries()) {
            const auto& g = grads.at(e.name);
            for (std::size_t i = 0; i < e.weights.size(); ++i) analytic += g.weights[i] * (e.weights[i] /= norm);
            for (std::size_t i = 0; i < e.bias.size(); ++i) analytic += g.bias[i] * (e.bias[i] /= norm);
        }
        auto shifted = [&](double s) {
            auto p = base;
            for (std::size_t k = 0; k < p.entries().size(); ++k) {
                auto& pe = p.entries()[k];
                const auto& de = dir.entries()[k];
                for (std::size_t i = 0; i < pe.weights.size(); ++i) pe.weights[i] += s * de.weights[i];
                for (std::size_t i = 0; i < pe.bias.size(); ++i) pe.bias[i] += s * de.bias[i];
            }
            return network_loss(spec, p, x, labels);
        };
        const double numeric = kink_free_difference(shifted, pattern, r);
        const double err = relative_error(analytic, numeric);
        ++r.scalars;
        if (err > r.worst) {
            r.worst = err;
            r.where = "direction " + std::to_string(d);
        }
    }
    return r;
}

Outcome gradient_criterion() {
    const auto t0 = std::chrono::steady_clock::now();
    std::mt19937_64 rng(20240601);
    std::ostringstream detail;
    bool ok = true;
    for (const auto& [op, tr] : op_gradient_checks(rng)) {
        ok &= tr.worst <= kOpGradTol;
        detail << op << " " << fmt("%.2e", tr.worst) << " (" << tr.scalars << " scalars); ";
    }

    // Exhaustive per-scalar check at the smallest input the reduced stack
    // accepts, sampled and directional checks at the canonical 227 input.
    AlexNetOptions small = reduced_alexnet_options();
    small.input_size = 67;
    const NetworkSpec small_spec = alexnet_spec(3, small);
    const NetworkSpec full_spec = alexnet_spec(3, reduced_alexnet_options());

    const auto every = network_gradient_check(small_spec, 5, 2, 0);
    const auto sampled = network_gradient_check(full_spec, 6, 2, 12);
    const auto directional = network_directional_check(full_spec, 7, 2, 6);
    for (const auto* r : {&every, &sampled, &directional}) ok &= r->worst <= kNetGradTol;
    auto steps = [](const NetGradResult& r) {
        return std::to_string(r.shrunk) + " smaller steps, " + std::to_string(r.unresolved) + " unresolved kinks";
    };
    detail << "network@67 every scalar " << fmt("%.2e", every.worst) << " (" << every.scalars << ", worst "
           << every.where << ", " << steps(every) << "); network@227 sampled " << fmt("%.2e", sampled.worst) << " ("
           << sampled.scalars << ", " << steps(sampled) << "), directional " << fmt("%.2e", directional.worst) << " ("
           << directional.scalars << ", " << steps(directional) << ")";

    const double secs = seconds_since(t0);
    ok &= secs < kGradBudgetSec;
    detail << "; tolerance op " << kOpGradTol << " net " << kNetGradTol << "; " << fmt("%.1f", secs) << "s of "
           << kGradBudgetSec << "s";
    return {ok, detail.str()};
}

// ---- criterion: forward oracles ------------------------------------------------------------

template <typename F>
double max_abs_diff(const TensorD& a, const TensorD& b, F&&) {
    if (a.shape() != b.shape()) return INFINITY;
    double m = 0;
    for (std::size_t i = 0; i < a.size(); ++i) m = std::max(m, std::abs(a[i] - b[i]));
    return m;
}

double max_abs_diff(const TensorD& a, const TensorD& b) { return max_abs_diff(a, b, 0); }

Outcome forward_criterion() {
    const auto t0 = std::chrono::steady_clock::now();
    std::mt19937_64 rng(77);
    double conv = 0, pool = 0, lrn = 0, lin = 0, conv_f = 0;
    bool argmax_ok = true;
    for (std::size_t trial = 0; trial < kForwardShapes; ++trial) {
        {
            const ConvParams p = random_conv(rng);
            const TensorD x = random_tensor(conv_input(p, rng), rng), w = random_tensor(p.weight_shape(), rng),
                          b = random_tensor({p.output_channels}, rng);
            const TensorD want = naive_conv(x, w, b, p);
            conv = std::max(conv, max_abs_diff(conv2d_forward(x, w, b, p), want));
            // Single-precision path on the same data, for information.
            const Tensor yf = conv2d_forward(x.cast<float>(), w.cast<float>(), b.cast<float>(), p);
            const TensorD oracle_f = naive_conv(x.cast<float>().cast<double>(), w.cast<float>().cast<double>(),
                                                b.cast<float>().cast<double>(), p);
            conv_f = std::max(conv_f, max_abs_diff(yf.cast<double>(), oracle_f));
        }
        {
            std::uniform_int_distribution<std::size_t> win(1, 4), st(1, 3), ext(0, 8), n(1, 3), c(1, 4);
            const PoolParams p{win(rng), st(rng)};
            const TensorD x = random_tensor({n(rng), c(rng), p.window + ext(rng), p.window + ext(rng)}, rng);
            std::vector<std::size_t> arg;
            const TensorD want = naive_maxpool(x, p, &arg);
            const auto got = maxpool_forward(x, p);
            pool = std::max(pool, max_abs_diff(got.output, want));
            argmax_ok &= got.argmax == arg;
        }
        {
            const LrnParams p = trial % 2 == 0 ? LrnParams{} : random_lrn(rng);
            std::uniform_int_distribution<std::size_t> n(1, 3), c(1, 12), hw(1, 6);
            const TensorD x = random_tensor({n(rng), c(rng), hw(rng), hw(rng)}, rng, -5, 5);
            lrn = std::max(lrn, max_abs_diff(lrn_forward(x, p), naive_lrn(x, p)));
        }
        {
            std::uniform_int_distribution<std::size_t> n(1, 8), d(1, 64), m(1, 32);
            const std::size_t dn = n(rng), dd = d(rng), dm = m(rng);
            const TensorD x = random_tensor({dn, dd}, rng), w = random_tensor({dd, dm}, rng), b = random_tensor({dm}, rng);
            lin = std::max(lin, max_abs_diff(linear_forward(x, w, b), naive_linear(x, w, b)));
        }
    }
    const double secs = seconds_since(t0);
    const bool ok = conv <= kForwardTol && pool <= kForwardTol && lrn <= kForwardTol && lin <= kForwardTol &&
                    argmax_ok && secs < kForwardBudgetSec;
    std::ostringstream d;
    d << kForwardShapes << " shapes each, 64-bit max |diff| conv " << fmt("%.1e", conv) << " pool "
      << fmt("%.1e", pool) << (argmax_ok ? " (argmax identical)" : " (argmax differs)") << " lrn " << fmt("%.1e", lrn)
      << " linear " << fmt("%.1e", lin) << "; 32-bit conv " << fmt("%.1e", conv_f) << "; tolerance " << kForwardTol
      << "; " << fmt("%.1f", secs) << "s of " << kForwardBudgetSec << "s";
    return {ok, d.str()};
}

// ---- criterion: split / augment arithmetic ---------------------------------------------------

Outcome split_criterion() {
    const DatasetManifest m = reference_manifest();
    const auto counts = m.class_counts();
    bool ok = counts.at(BurnClass::full_thickness) == 20 && counts.at(BurnClass::deep_dermal) == 32 &&
              counts.at(BurnClass::superficial_dermal) == 42;
    std::string first_bad;
    for (std::uint64_t seed = 0; seed < 10; ++seed) {
        const auto s3 = split_three_class(m, seed);
        const auto a3 = label_counts(augment_split(m, s3));
        const bool ok3 = s3.count(Split::train) == 76 && s3.count(Split::validation) == 9 &&
                         s3.count(Split::test) == 9 && a3.at("deep-dermal") == 416 &&
                         a3.at("full-thickness") == 224 && a3.at("superficial-dermal") == 576 && a3.size() == 3;
        const auto s2 = split_binary(m, seed);
        const auto a2 = label_counts(augment_split(m, s2));
        const bool ok2 = s2.count(Split::test) == 74 && a2.at("graft") == 144 && a2.at("non-graft") == 128 &&
                         a2.size() == 2;
        if ((!ok3 || !ok2) && first_bad.empty()) first_bad = " (seed " + std::to_string(seed) + " off)";
        ok &= ok3 && ok2;
    }
    return {ok, "94-image reference (20/32/42): three-class 76/9/9, augmented deep-dermal 416, full-thickness 224, "
                "superficial-dermal 576; binary test 74, augmented graft 144, non-graft 128; seeds 0-9, exact" +
                    first_bad};
}

// ---- criterion: F1 --------------------------------------------------------------------------

Outcome f1_criterion() {
    const double v = f1(0.906, 0.879).value;
    return {std::abs(v - 0.8922) <= kF1Tol, "f1(0.906, 0.879) = " + fmt("%.6f", v) + ", target 0.8922 +/- " +
                                                fmt("%g", kF1Tol)};
}

// ---- criterion: metric oracles -----------------------------------------------------------------

Outcome metric_criterion() {
    const auto t0 = std::chrono::steady_clock::now();
    std::mt19937_64 rng(99);
    std::size_t mismatches = 0;
    double worst_auc = 0;
    for (std::size_t inst = 0; inst < kMetricInstances; ++inst) {
        std::uniform_int_distribution<std::size_t> nd(2, kMetricMaxN), cd(2, 3);
        const std::size_t n = nd(rng), c = cd(rng);
        std::vector<std::string> classes;
        for (std::size_t k = 0; k < c; ++k) classes.push_back("c" + std::to_string(k));
        std::uniform_int_distribution<int> lab(0, static_cast<int>(c) - 1);
        std::vector<int> t(n), p(n);
        for (std::size_t i = 0; i < n; ++i) {
            t[i] = lab(rng);
            p[i] = lab(rng);
        }
        const auto cm = confusion(t, p, classes);
        // Brute force: count every cell by scanning the pairs.
        std::size_t correct = 0;
        for (std::size_t i = 0; i < c; ++i) {
            for (std::size_t j = 0; j < c; ++j) {
                std::size_t cnt = 0;
                for (std::size_t s = 0; s < n; ++s) cnt += t[s] == int(i) && p[s] == int(j);
                mismatches += cm.counts[i][j] != cnt;
            }
        }
        for (std::size_t s = 0; s < n; ++s) correct += t[s] == p[s];
        const Metric acc = accuracy(cm);
        mismatches += acc.value != double(correct) / double(n);
        for (std::size_t k = 0; k < c; ++k) {
            std::size_t tp = 0, fp = 0, fn = 0;
            for (std::size_t s = 0; s < n; ++s) {
                tp += t[s] == int(k) && p[s] == int(k);
                fp += t[s] != int(k) && p[s] == int(k);
                fn += t[s] == int(k) && p[s] != int(k);
            }
            const Metric pr = precision(cm, k), rc = recall(cm, k);
            mismatches += tp + fp == 0 ? !(pr.degenerate && pr.value == 0) : pr.value != double(tp) / double(tp + fp);
            mismatches += tp + fn == 0 ? !(rc.degenerate && rc.value == 0) : rc.value != double(tp) / double(tp + fn);
        }

        // Binary AUC, with coarse scores on half the instances so ties occur.
        std::vector<double> scores(n);
        std::vector<int> bin(n);
        std::uniform_real_distribution<double> u(0, 1);
        std::bernoulli_distribution coin(0.5);
        for (std::size_t i = 0; i < n; ++i) {
            scores[i] = inst % 2 ? std::round(u(rng) * 8) / 8 : u(rng);
            bin[i] = coin(rng);
        }
        bin[0] = 1;
        bin[1] = 0;
        const double auc = roc_and_auc(scores, bin, 1).auc;
        worst_auc = std::max(worst_auc, std::abs(auc - pairwise_auc(scores, bin, 1)));
    }
    const double secs = seconds_since(t0);
    const bool ok = mismatches == 0 && worst_auc <= kAucTol && secs < kMetricBudgetSec;
    return {ok, std::to_string(kMetricInstances) + " instances, n <= " + std::to_string(kMetricMaxN) + ": " +
                    std::to_string(mismatches) + " count/rate mismatches, max AUC diff " + fmt("%.1e", worst_auc) +
                    " (tolerance " + fmt("%g", kAucTol) + "); " + fmt("%.1f", secs) + "s of " +
                    fmt("%g", kMetricBudgetSec) + "s"};
}

// ---- criterion: memorization ---------------------------------------------------------------------

Outcome memorization_criterion() {
    const auto t0 = std::chrono::steady_clock::now();
    std::mt19937_64 rng(1234);
    std::vector<Tensor> images;
    std::vector<int> labels;
    for (std::size_t i = 0; i < kProbeImages; ++i) {
        Raster r(32, 32, 3);
        for (auto& px : r.pixels) px = static_cast<std::uint8_t>(rng());
        images.push_back(prepare_image(r, 0).tensor);
        labels.push_back(static_cast<int>(i % 3));
    }
    const InMemorySource data(std::move(images), std::move(labels));
    const Network net = build_alexnet(3, 42, reduced_alexnet_options());
    TrainingConfig c;
    // Inputs keep the raw pixel scale, so the initial logits are large and
    // steps much above 1e-5 push the ReLUs dead.
    c.learning_rate = 1e-5;
    c.momentum = 0.9;
    c.batch_size = 4;
    c.epochs = kProbeEpochs;
    c.seed = 42;
    const ProbeResult r = overfit_probe(net.spec, net.params, data, c);
    const double secs = seconds_since(t0);
    const auto& last = r.history.records.back();
    const bool ok = r.reached && secs < kProbeBudgetSec;
    return {ok, "reduced network, 12 random-pixel images, 3 classes, from scratch, seed 42: training accuracy " +
                    fmt("%.3f", last.train_acc) + " after " + std::to_string(r.epochs_used) + " of " +
                    std::to_string(kProbeEpochs) + " epochs" + (r.reached ? "" : " (" + r.diagnostic + ")") + "; " +
                    fmt("%.1f", secs) + "s of " + fmt("%g", kProbeBudgetSec) + "s"};
}

// ---- criterion: determinism & round trip -----------------------------------------------------------

struct RunFiles {
    std::vector<std::uint8_t> best, final;
    std::string history;
};

RunFiles train_once(const DatasetManifest& manifest, const fs::path& out, std::size_t threads) {
    set_thread_count(threads);
    const auto split = make_split(manifest, SplitMode::binary, 3);
    const auto rows = augment_split(manifest, split);
    AlexNetOptions o = reduced_alexnet_options();
    o.input_size = 67;
    const Network net = build_alexnet(2, 3, o);
    TrainingConfig c = binary_preset();
    c.epochs = 2;
    c.batch_size = 64;
    c.learning_rate = 1e-3;
    c.seed = 3;
    const auto train_src = ManifestSource::from_table(manifest, rows, SplitMode::binary, 67);
    const auto val_src = ManifestSource::from_split(manifest, split, Split::validation, 67);
    const TrainResult res = train(net.spec, net.params, train_src, val_src, c, class_order(SplitMode::binary));
    fs::create_directories(out);
    save_checkpoint(res.best, out / "best.bwck");
    save_checkpoint(res.final, out / "final.bwck");
    std::ofstream(out / "history.csv", std::ios::binary) << res.history.to_csv();
    RunFiles f;
    f.best = read_bytes(out / "best.bwck");
    f.final = read_bytes(out / "final.bwck");
    const auto h = read_bytes(out / "history.csv");
    f.history.assign(h.begin(), h.end());
    return f;
}

Outcome determinism_criterion() {
    const fs::path dir = make_temp_dir("acceptance_determinism");
    const fs::path manifest_path = write_reference_dataset(dir / "data", {}, 24);
    const DatasetManifest manifest = load_manifest(manifest_path);
    const std::size_t saved = thread_count();
    const RunFiles a = train_once(manifest, dir / "a", 1);
    const RunFiles b = train_once(manifest, dir / "b", 1);
    const RunFiles c = train_once(manifest, dir / "c", 3);
    set_thread_count(saved);
    const bool same_ab = a.best == b.best && a.final == b.final && a.history == b.history;
    const bool same_ac = a.best == c.best && a.final == c.final && a.history == c.history;

    // Save/load round trip gives bit-identical predictions.
    const Checkpoint chk = load_checkpoint(dir / "a" / "final.bwck");
    const Checkpoint again = decode_checkpoint(encode_checkpoint(chk));
    const auto src = ManifestSource::from_split(manifest, make_split(manifest, SplitMode::binary, 3), Split::test, 67);
    std::vector<std::size_t> idx(src.size());
    for (std::size_t i = 0; i < idx.size(); ++i) idx[i] = i;
    const Tensor batch = gather_batch(src, idx);
    const bool preds = bit_equal(predict_probabilities(chk.spec, chk.params, batch),
                                 predict_probabilities(again.spec, again.params, batch));
    const bool reencode = encode_checkpoint(again) == a.final;
    fs::remove_all(dir);
    const bool ok = same_ab && same_ac && preds && reencode;
    std::ostringstream d;
    d << "two seeded runs: checkpoints and history " << (same_ab ? "byte-identical" : "DIFFER")
      << "; 1 vs 3 worker threads: " << (same_ac ? "byte-identical" : "DIFFER")
      << "; save/load predictions on " << idx.size() << " images " << (preds ? "bit-identical" : "DIFFER")
      << "; re-encode " << (reencode ? "byte-identical" : "DIFFERS");
    return {ok, d.str()};
}

// ---- criterion: leakage ------------------------------------------------------------------------------

Outcome leakage_criterion() {
    const DatasetManifest m = reference_manifest();
    std::size_t leaks = 0, bad_multiplicity = 0, tables = 0;
    for (std::uint64_t seed = 0; seed < kLeakageSeeds; ++seed) {
        for (SplitMode mode : {SplitMode::three_class, SplitMode::binary}) {
            const auto split = make_split(m, mode, seed * 7919 + 13);
            // Check the table as it is written to disk.
            std::ostringstream out;
            write_augmented_table(augment_split(m, split), out);
            std::istringstream in(out.str());
            const auto rows = read_augmented_table(in, "augmented.csv");
            ++tables;
            std::map<std::string, std::size_t> seen;
            for (const auto& r : rows) {
                ++seen[r.id];
                const auto it = split.assignments.find(r.id);
                leaks += it == split.assignments.end() || it->second != Split::train || r.split != Split::train;
            }
            for (const auto& id : split.ids(Split::train)) bad_multiplicity += seen[id] != kVariantsPerImage;
            bad_multiplicity += seen.size() != split.count(Split::train);
        }
    }
    return {leaks == 0 && bad_multiplicity == 0,
            std::to_string(tables) + " augmented tables (" + std::to_string(kLeakageSeeds) +
                " seeds x 2 modes): " + std::to_string(leaks) + " validation/test rows, " +
                std::to_string(bad_multiplicity) + " multiplicity errors"};
}

}  // namespace

int main() {
    std::printf("burncnn acceptance (worker threads: %zu)\n", thread_count());
    run_criterion("gradient-correctness", gradient_criterion);
    run_criterion("forward-oracle-equivalence", forward_criterion);
    run_criterion("split-augment-arithmetic", split_criterion);
    run_criterion("f1-consistency", f1_criterion);
    run_criterion("metric-oracle-equivalence", metric_criterion);
    run_criterion("memorization-probe", memorization_criterion);
    run_criterion("determinism-round-trip", determinism_criterion);
    run_criterion("leakage-guard", leakage_criterion);
    std::printf("%d criteria failed\n", g_failures);
    return g_failures == 0 ? 0 : 1;
}
