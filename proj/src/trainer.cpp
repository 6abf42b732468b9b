#include "burncnn/trainer.hpp"

#include <cmath>
#include <cstdio>
#include <numeric>
#include <random>
#include <sstream>

#include "burncnn/errors.hpp"

namespace burncnn {

namespace {

std::uint64_t mix(std::uint64_t a, std::uint64_t b) {
    std::uint64_t x = a ^ (b + 0x9e3779b97f4a7c15ULL + (a << 6) + (a >> 2));
    x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
    x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
    return x ^ (x >> 31);
}

std::string fmt_double(double v) {
    char buf[64];
    std::snprintf(buf, sizeof buf, "%.17g", v);
    return buf;
}

std::size_t count_correct(const Tensor& logits, std::span<const int> labels) {
    const std::size_t n = logits.dim(0), c = logits.dim(1);
    std::size_t correct = 0;
    for (std::size_t row = 0; row < n; ++row) {
        std::size_t best = 0;
        for (std::size_t j = 1; j < c; ++j) {
            if (logits[row * c + j] > logits[row * c + best]) best = j;
        }
        if (static_cast<int>(best) == labels[row]) ++correct;
    }
    return correct;
}

Checkpoint snapshot(const NetworkSpec& spec, const ParameterSet& params, std::size_t epoch,
                    const TrainingConfig& config, const std::vector<std::string>& class_order) {
    Checkpoint chk;
    chk.spec = spec;
    chk.params = params;
    chk.meta.epochs_completed = epoch;
    chk.meta.seed = config.seed;
    chk.meta.config_digest = config.digest();
    chk.meta.class_order = class_order;
    return chk;
}

}  // namespace

// ---- config -------------------------------------------------------------------------

void TrainingConfig::validate() const {
    if (!(learning_rate >= 0.0) || !std::isfinite(learning_rate)) {
        throw ContractViolation("learning_rate must be a finite value >= 0");
    }
    if (epochs == 0) throw ContractViolation("epochs must be positive");
    if (batch_size == 0) throw ContractViolation("batch_size must be positive");
    if (!(momentum >= 0.0 && momentum < 1.0)) throw ContractViolation("momentum must be in [0, 1)");
    if (!(weight_decay >= 0.0) || !std::isfinite(weight_decay)) throw ContractViolation("weight_decay must be >= 0");
}

std::string TrainingConfig::to_string() const {
    std::ostringstream os;
    os << "learning_rate=" << fmt_double(learning_rate) << '\n'
       << "epochs=" << epochs << '\n'
       << "batch_size=" << batch_size << '\n'
       << "momentum=" << fmt_double(momentum) << '\n'
       << "weight_decay=" << fmt_double(weight_decay) << '\n'
       << "seed=" << seed << '\n'
       << "freeze_policy=" << burncnn::to_string(freeze) << '\n'
       << "shuffle=" << (shuffle ? "true" : "false") << '\n';
    return os.str();
}

std::string TrainingConfig::digest() const {
    std::uint64_t h = 0xcbf29ce484222325ULL;
    for (unsigned char ch : to_string()) {
        h ^= ch;
        h *= 0x100000001b3ULL;
    }
    char buf[17];
    std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(h));
    return buf;
}

TrainingConfig binary_preset() {
    TrainingConfig c;
    c.learning_rate = 1e-4;
    c.epochs = 10;
    c.batch_size = 64;
    return c;
}

TrainingConfig three_class_preset() {
    TrainingConfig c;
    c.learning_rate = 1e-6;
    c.epochs = 5;
    c.batch_size = 10;
    return c;
}

std::string TrainingHistory::to_csv() const {
    std::ostringstream os;
    os << "epoch,train_loss,train_acc,val_loss,val_acc\n";
    for (const auto& r : records) {
        os << r.epoch << ',' << fmt_double(r.train_loss) << ',' << fmt_double(r.train_acc) << ','
           << fmt_double(r.val_loss) << ',' << fmt_double(r.val_acc) << '\n';
    }
    return os.str();
}

// ---- optimizer ----------------------------------------------------------------------

ParameterSet zeros_like(const ParameterSet& params) {
    std::vector<LayerParameters<float>> out;
    for (const auto& e : params.entries()) out.push_back({e.name, Tensor(e.weights.shape()), Tensor(e.bias.shape())});
    return ParameterSet(std::move(out));
}

void sgd_step_inplace(ParameterSet& params, const GradientSet<float>& grads, ParameterSet& velocity,
                      const TrainingConfig& config) {
    auto& pe = params.entries();
    auto& ve = velocity.entries();
    if (pe.size() != grads.entries.size() || pe.size() != ve.size()) {
        throw ContractViolation("sgd_step: parameter, gradient and velocity sets differ in size");
    }
    const auto lr = static_cast<float>(config.learning_rate);
    const auto mu = static_cast<float>(config.momentum);
    const auto wd = static_cast<float>(config.weight_decay);
    auto update = [&](Tensor& w, const Tensor& g, Tensor& v, const std::string& what) {
        if (w.shape() != g.shape() || w.shape() != v.shape()) {
            throw ContractViolation("sgd_step: shape mismatch for " + what + ": params " + shape_string(w.shape()) +
                                    ", grads " + shape_string(g.shape()) + ", velocity " + shape_string(v.shape()));
        }
        for (std::size_t i = 0; i < w.size(); ++i) {
            v[i] = mu * v[i] + g[i] + wd * w[i];
            w[i] = w[i] - lr * v[i];
        }
    };
    for (std::size_t i = 0; i < pe.size(); ++i) {
        const auto& g = grads.entries[i];
        if (pe[i].name != g.name || pe[i].name != ve[i].name) {
            throw ContractViolation("sgd_step: entry " + std::to_string(i) + " names differ ('" + pe[i].name +
                                    "', '" + g.name + "', '" + ve[i].name + "')");
        }
        if (g.frozen) continue;
        update(pe[i].weights, g.weights, ve[i].weights, pe[i].name + ".weight");
        update(pe[i].bias, g.bias, ve[i].bias, pe[i].name + ".bias");
    }
}

SgdState sgd_step(const ParameterSet& params, const GradientSet<float>& grads, const ParameterSet& velocity,
                  const TrainingConfig& config) {
    SgdState next{params, velocity};
    sgd_step_inplace(next.params, grads, next.velocity, config);
    return next;
}

// ---- batching / evaluation ------------------------------------------------------------

Tensor gather_batch(const SampleSource& data, std::span<const std::size_t> indices) {
    if (indices.empty()) throw ContractViolation("empty batch");
    Tensor first = data.image(indices[0]);
    const Shape& s = first.shape();
    Shape shape{indices.size()};
    shape.insert(shape.end(), s.begin(), s.end());
    Tensor batch(shape);
    const std::size_t per = first.size();
    std::copy(first.data().begin(), first.data().end(), batch.data().begin());
    for (std::size_t b = 1; b < indices.size(); ++b) {
        Tensor img = data.image(indices[b]);
        if (img.shape() != s) throw ContractViolation("samples in a batch differ in shape");
        std::copy(img.data().begin(), img.data().end(), batch.data().begin() + static_cast<std::ptrdiff_t>(b * per));
    }
    return batch;
}

EvalStats evaluate_source(const NetworkSpec& spec, const ParameterSet& params, const SampleSource& data,
                          std::size_t batch_size) {
    EvalStats stats;
    stats.count = data.size();
    if (data.size() == 0) return stats;
    double loss = 0.0;
    std::size_t correct = 0;
    for (std::size_t start = 0; start < data.size(); start += batch_size) {
        const std::size_t end = std::min(data.size(), start + batch_size);
        std::vector<std::size_t> idx(end - start);
        std::iota(idx.begin(), idx.end(), start);
        std::vector<int> labels;
        for (auto i : idx) labels.push_back(data.label(i));
        const auto fw = forward(spec, params, gather_batch(data, idx), Mode::infer);
        const auto ce = softmax_cross_entropy(fw.logits, labels);
        loss += static_cast<double>(ce.loss) * static_cast<double>(idx.size());
        correct += count_correct(fw.logits, labels);
    }
    stats.loss = loss / static_cast<double>(data.size());
    stats.accuracy = static_cast<double>(correct) / static_cast<double>(data.size());
    return stats;
}

// ---- trainer --------------------------------------------------------------------------

Trainer::Trainer(NetworkSpec spec, ParameterSet params, TrainingConfig config)
    : spec_(std::move(spec)), params_(std::move(params)), config_(config), shuffle_state_(config.seed) {
    config_.validate();
    spec_.validate();
    params_.validate_against(spec_);
    velocity_ = zeros_like(params_);
}

EvalStats Trainer::run_epoch(const SampleSource& data) {
    if (data.size() == 0) throw ContractViolation("training set is empty");
    const std::size_t epoch = epoch_ + 1;
    std::vector<std::size_t> order(data.size());
    std::iota(order.begin(), order.end(), 0);
    if (config_.shuffle) {
        std::mt19937_64 gen(mix(config_.seed, epoch));
        std::shuffle(order.begin(), order.end(), gen);
    }

    double loss_sum = 0.0;
    std::size_t correct = 0;
    std::size_t step = 0;
    for (std::size_t start = 0; start < order.size(); start += config_.batch_size) {
        ++step;
        const std::size_t end = std::min(order.size(), start + config_.batch_size);
        std::span<const std::size_t> idx(order.data() + start, end - start);
        std::vector<int> labels;
        labels.reserve(idx.size());
        for (auto i : idx) labels.push_back(data.label(i));

        const Tensor batch = gather_batch(data, idx);
        const auto fw = forward(spec_, params_, batch, Mode::train, mix(mix(config_.seed, epoch), step));
        const auto ce = softmax_cross_entropy(fw.logits, labels);
        if (!std::isfinite(ce.loss)) throw DivergenceError(epoch, step, ce.loss);
        const auto grads = backward(spec_, params_, fw.cache, ce.grad_logits);
        sgd_step_inplace(params_, grads, velocity_, config_);
        ++steps_;

        loss_sum += static_cast<double>(ce.loss) * static_cast<double>(idx.size());
        correct += count_correct(fw.logits, labels);
    }
    epoch_ = epoch;
    return {loss_sum / static_cast<double>(data.size()),
            static_cast<double>(correct) / static_cast<double>(data.size()), data.size()};
}

TrainResult train(const NetworkSpec& spec, const ParameterSet& params, const SampleSource& train_data,
                  const SampleSource& validation, const TrainingConfig& config,
                  const std::vector<std::string>& class_order, const EpochObserver& observer) {
    if (train_data.size() == 0) throw ContractViolation("training table is empty");
    Trainer trainer(spec, params, config);
    TrainResult result;
    double best_acc = -1.0;
    for (std::size_t e = 1; e <= config.epochs; ++e) {
        const EvalStats tr = trainer.run_epoch(train_data);
        const EvalStats va = evaluate_source(trainer.spec(), trainer.params(), validation, config.batch_size);
        const EpochRecord rec{e, tr.loss, tr.accuracy, va.loss, va.accuracy};
        result.history.records.push_back(rec);
        if (observer) observer(rec);
        if (va.count > 0 && va.accuracy > best_acc) {
            best_acc = va.accuracy;
            result.best_epoch = e;
            result.best = snapshot(trainer.spec(), trainer.params(), e, config, class_order);
        }
    }
    result.final = snapshot(trainer.spec(), trainer.params(), config.epochs, config, class_order);
    if (validation.size() == 0) {
        result.best = result.final;
        result.best_epoch = config.epochs;
    }
    return result;
}

ProbeResult overfit_probe(const NetworkSpec& spec, const ParameterSet& params, const SampleSource& data,
                          const TrainingConfig& config) {
    if (data.size() == 0 || data.size() > 16) {
        throw ContractViolation("overfit probe needs 1..16 samples, got " + std::to_string(data.size()));
    }
    Trainer trainer(spec, params, config);
    ProbeResult result;
    for (std::size_t e = 1; e <= config.epochs; ++e) {
        trainer.run_epoch(data);
        const EvalStats fit = evaluate_source(trainer.spec(), trainer.params(), data, config.batch_size);
        result.history.records.push_back({e, fit.loss, fit.accuracy, fit.loss, fit.accuracy});
        result.epochs_used = e;
        if (fit.accuracy == 1.0) {
            result.reached = true;
            return result;
        }
    }
    const auto& last = result.history.records.back();
    result.diagnostic = "training accuracy " + std::to_string(last.train_acc) + " (loss " +
                        std::to_string(last.train_loss) + ") after " + std::to_string(config.epochs) +
                        " epochs; expected 1.0";
    return result;
}

}  // namespace burncnn
