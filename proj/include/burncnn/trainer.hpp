#pragma once

#include <cstddef>
#include <cstdint>
#include <functional>
#include <string>
#include <vector>

#include "burncnn/checkpoint.hpp"
#include "burncnn/image.hpp"
#include "burncnn/network.hpp"

namespace burncnn {

struct TrainingConfig {
    double learning_rate = 1e-4;
    std::size_t epochs = 10;
    std::size_t batch_size = 64;
    double momentum = 0.9;
    double weight_decay = 0.0;
    std::uint64_t seed = 0;
    FreezeSpec freeze{};
    bool shuffle = true;

    /// Throws ContractViolation on out-of-range fields. A zero learning rate
    /// is accepted and makes every step a no-op.
    void validate() const;
    /// Canonical `key=value` rendering, one per line.
    std::string to_string() const;
    /// FNV-1a of to_string(), hex.
    std::string digest() const;
};

/// 0.0001 learning rate, 10 epochs, mini-batch 64.
TrainingConfig binary_preset();
/// 1e-6 learning rate, 5 epochs, mini-batch 10.
TrainingConfig three_class_preset();

struct EpochRecord {
    std::size_t epoch = 0;
    double train_loss = 0.0;
    double train_acc = 0.0;
    double val_loss = 0.0;
    double val_acc = 0.0;
};

struct TrainingHistory {
    std::vector<EpochRecord> records;
    /// `epoch,train_loss,train_acc,val_loss,val_acc`
    std::string to_csv() const;
};

/// Zero tensors shaped like `params`.
ParameterSet zeros_like(const ParameterSet& params);

struct SgdState {
    ParameterSet params;
    ParameterSet velocity;
};

/// v' = momentum*v + g + weight_decay*w;  w' = w - learning_rate*v'.
/// Frozen entries keep both weights and velocity untouched.
SgdState sgd_step(const ParameterSet& params, const GradientSet<float>& grads, const ParameterSet& velocity,
                  const TrainingConfig& config);
void sgd_step_inplace(ParameterSet& params, const GradientSet<float>& grads, ParameterSet& velocity,
                      const TrainingConfig& config);

struct EvalStats {
    double loss = 0.0;
    double accuracy = 0.0;
    std::size_t count = 0;
};

/// Inference-mode mean loss and accuracy over a source, in batches.
EvalStats evaluate_source(const NetworkSpec& spec, const ParameterSet& params, const SampleSource& data,
                          std::size_t batch_size);

/// Stacks samples into an [N,3,H,W] batch.
Tensor gather_batch(const SampleSource& data, std::span<const std::size_t> indices);

/// Stateful SGD loop over one network. Epochs are numbered from 1.
class Trainer {
public:
    Trainer(NetworkSpec spec, ParameterSet params, TrainingConfig config);

    /// One shuffled pass of mini-batch SGD. Returns the mean train-mode loss
    /// and accuracy. Throws DivergenceError on a non-finite loss.
    EvalStats run_epoch(const SampleSource& data);

    const NetworkSpec& spec() const noexcept { return spec_; }
    const ParameterSet& params() const noexcept { return params_; }
    const ParameterSet& velocity() const noexcept { return velocity_; }
    const TrainingConfig& config() const noexcept { return config_; }
    std::size_t epochs_completed() const noexcept { return epoch_; }
    std::size_t steps_taken() const noexcept { return steps_; }

private:
    NetworkSpec spec_;
    ParameterSet params_;
    ParameterSet velocity_;
    TrainingConfig config_;
    std::uint64_t shuffle_state_;
    std::size_t epoch_ = 0;
    std::size_t steps_ = 0;
};

struct TrainResult {
    Checkpoint best;
    Checkpoint final;
    std::size_t best_epoch = 0;
    TrainingHistory history;
};

using EpochObserver = std::function<void(const EpochRecord&)>;

/// Runs config.epochs epochs and keeps the checkpoint with the highest
/// validation accuracy (ties go to the earliest epoch; with an empty
/// validation set the final epoch is kept).
TrainResult train(const NetworkSpec& spec, const ParameterSet& params, const SampleSource& train_data,
                  const SampleSource& validation, const TrainingConfig& config,
                  const std::vector<std::string>& class_order = {}, const EpochObserver& observer = {});

struct ProbeResult {
    TrainingHistory history;  // train_* fields are inference-mode fits of the probe set
    bool reached = false;
    std::size_t epochs_used = 0;
    std::string diagnostic;
};

/// Trains on a tiny set (<= 16 samples) until inference-mode training
/// accuracy hits 100% or the epoch budget runs out.
ProbeResult overfit_probe(const NetworkSpec& spec, const ParameterSet& params, const SampleSource& data,
                          const TrainingConfig& config);

}  // namespace burncnn
