#include <gtest/gtest.h>

#include <random>

#include "burncnn/errors.hpp"
#include "burncnn/trainer.hpp"
#include "test_support.hpp"

using namespace burncnn;
using namespace burncnn::testkit;

namespace {

constexpr std::size_t kSmall = 67;

AlexNetOptions small_options() {
    AlexNetOptions o = reduced_alexnet_options();
    o.input_size = kSmall;
    return o;
}

InMemorySource random_source(std::size_t n, std::size_t classes, std::uint64_t seed) {
    std::mt19937_64 rng(seed);
    std::vector<Tensor> images;
    std::vector<int> labels;
    for (std::size_t i = 0; i < n; ++i) {
        images.push_back(random_tensor({3, kSmall, kSmall}, rng, -60, 60).cast<float>());
        labels.push_back(static_cast<int>(i % classes));
    }
    return InMemorySource(std::move(images), std::move(labels));
}

ParameterSet single(float w) {
    return ParameterSet({{"l", Tensor({1}, w), Tensor({1}, 0.0f)}});
}

GradientSet<float> single_grad(float g, bool frozen = false) {
    return {{{"l", Tensor({1}, g), Tensor({1}, 0.0f), frozen}}};
}

}  // namespace

TEST(Config, PresetsMatchPublishedSettings) {
    const auto b = binary_preset();
    EXPECT_EQ(b.learning_rate, 1e-4);
    EXPECT_EQ(b.epochs, 10u);
    EXPECT_EQ(b.batch_size, 64u);
    const auto t = three_class_preset();
    EXPECT_EQ(t.learning_rate, 1e-6);
    EXPECT_EQ(t.epochs, 5u);
    EXPECT_EQ(t.batch_size, 10u);
}

TEST(Config, ValidationRejectsOutOfRange) {
    TrainingConfig c;
    c.momentum = 1.0;
    EXPECT_THROW(c.validate(), ContractViolation);
    c = {};
    c.batch_size = 0;
    EXPECT_THROW(c.validate(), ContractViolation);
    c = {};
    c.learning_rate = -1;
    EXPECT_THROW(c.validate(), ContractViolation);
    c = {};
    c.weight_decay = -0.1;
    EXPECT_THROW(c.validate(), ContractViolation);
}

TEST(Sgd, PlainStep) {
    TrainingConfig c;
    c.learning_rate = 0.1;
    c.momentum = 0;
    const auto s = sgd_step(single(1.0f), single_grad(0.5f), zeros_like(single(1.0f)), c);
    EXPECT_FLOAT_EQ(s.params.at("l").weights[0], 0.95f);
}

TEST(Sgd, ZeroGradientZeroVelocityLeavesParameters) {
    TrainingConfig c;
    const auto s = sgd_step(single(0.3f), single_grad(0.0f), zeros_like(single(0.3f)), c);
    EXPECT_EQ(s.params.at("l").weights[0], 0.3f);
}

TEST(Sgd, TwoMomentumSteps) {
    // v1 = 1, w1 = -0.1; v2 = 0.9 + 1 = 1.9, w2 = -0.1 - 0.19 = -0.29.
    TrainingConfig c;
    c.learning_rate = 0.1;
    c.momentum = 0.9;
    auto s = sgd_step(single(0.0f), single_grad(1.0f), zeros_like(single(0.0f)), c);
    s = sgd_step(s.params, single_grad(1.0f), s.velocity, c);
    EXPECT_NEAR(s.params.at("l").weights[0], -0.29f, 1e-6);
}

TEST(Sgd, WeightDecayTerm) {
    TrainingConfig c;
    c.learning_rate = 1.0;
    c.momentum = 0;
    c.weight_decay = 0.5;
    const auto s = sgd_step(single(2.0f), single_grad(0.0f), zeros_like(single(2.0f)), c);
    EXPECT_FLOAT_EQ(s.params.at("l").weights[0], 1.0f);
}

TEST(Sgd, FrozenEntriesUntouched) {
    TrainingConfig c;
    c.learning_rate = 0.1;
    ParameterSet v = zeros_like(single(1.0f));
    v.at("l").weights[0] = 0.25f;
    const auto s = sgd_step(single(1.0f), single_grad(3.0f, true), v, c);
    EXPECT_EQ(s.params.at("l").weights[0], 1.0f);
    EXPECT_EQ(s.velocity.at("l").weights[0], 0.25f);
}

TEST(Sgd, ShapeMismatchRejected) {
    TrainingConfig c;
    const GradientSet<float> g{{{"l", Tensor({2}, 1.0f), Tensor({1}, 0.0f), false}}};
    EXPECT_THROW(sgd_step(single(1.0f), g, zeros_like(single(1.0f)), c), ContractViolation);
}

TEST(Train, EmptyTableRejected) {
    const Network net = build_alexnet(3, 1, small_options());
    EXPECT_THROW(train(net.spec, net.params, InMemorySource(), InMemorySource(), TrainingConfig{}), ContractViolation);
}

TEST(Train, StepCountIncludesPartialBatch) {
    const Network net = build_alexnet(3, 1, small_options());
    TrainingConfig c;
    c.epochs = 2;
    c.batch_size = 4;
    Trainer t(net.spec, net.params, c);
    const auto data = random_source(10, 3, 1);
    t.run_epoch(data);
    t.run_epoch(data);
    EXPECT_EQ(t.steps_taken(), 6u);
    EXPECT_EQ(t.epochs_completed(), 2u);
}

TEST(Train, SameSeedIsBitIdentical) {
    const Network net = build_alexnet(3, 1, small_options());
    TrainingConfig c;
    c.epochs = 2;
    c.batch_size = 3;
    c.learning_rate = 1e-3;
    c.seed = 11;
    const auto data = random_source(7, 3, 2), val = random_source(3, 3, 3);
    const auto a = train(net.spec, net.params, data, val, c);
    const auto b = train(net.spec, net.params, data, val, c);
    EXPECT_TRUE(bit_equal(a.final.params, b.final.params));
    EXPECT_EQ(a.history.to_csv(), b.history.to_csv());
    EXPECT_EQ(a.history.records.size(), 2u);
}

TEST(Train, ZeroLearningRateNeverChangesParameters) {
    const Network net = build_alexnet(3, 1, small_options());
    TrainingConfig c;
    c.epochs = 2;
    c.batch_size = 4;
    c.learning_rate = 0;
    const auto r = train(net.spec, net.params, random_source(6, 3, 4), random_source(3, 3, 5), c);
    EXPECT_TRUE(bit_equal(r.final.params, net.params));
}

TEST(Train, FrozenLayersBitIdenticalAfterTraining) {
    Network net = build_alexnet(3, 1, small_options());
    net.spec = apply_freeze(net.spec, {FreezePolicy::all_but_head, 0});
    TrainingConfig c;
    c.epochs = 1;
    c.batch_size = 4;
    c.learning_rate = 1e-2;
    const auto r = train(net.spec, net.params, random_source(8, 3, 6), InMemorySource(), c);
    for (const auto& e : net.params.entries()) {
        const bool same = bit_equal(e.weights, r.final.params.at(e.name).weights);
        EXPECT_EQ(same, e.name != "fc8") << e.name;
    }
}

TEST(Train, DivergenceReportsEpochAndStep) {
    const Network net = build_alexnet(3, 1, small_options());
    TrainingConfig c;
    c.epochs = 3;
    c.batch_size = 2;
    c.learning_rate = 1e30;
    c.momentum = 0;
    try {
        train(net.spec, net.params, random_source(6, 3, 7), InMemorySource(), c);
        FAIL() << "expected divergence";
    } catch (const DivergenceError& e) {
        EXPECT_GE(e.epoch(), 1u);
        EXPECT_GE(e.step(), 1u);
    }
}

TEST(Probe, SingleSampleFitsQuickly) {
    const Network net = build_alexnet(3, 2, small_options());
    TrainingConfig c;
    c.epochs = 30;
    c.batch_size = 1;
    c.learning_rate = 1e-3;
    const auto r = overfit_probe(net.spec, net.params, random_source(1, 3, 8), c);
    EXPECT_TRUE(r.reached) << r.diagnostic;
}

TEST(Probe, ZeroLearningRateLossConstant) {
    const Network net = build_alexnet(3, 2, small_options());
    TrainingConfig c;
    c.epochs = 3;
    c.batch_size = 4;
    c.learning_rate = 0;
    const auto r = overfit_probe(net.spec, net.params, random_source(6, 3, 9), c);
    ASSERT_FALSE(r.reached);
    ASSERT_EQ(r.history.records.size(), 3u);
    EXPECT_EQ(r.history.records[0].train_loss, r.history.records[2].train_loss);
    EXPECT_FALSE(r.diagnostic.empty());
}

TEST(Probe, RejectsMoreThanSixteenSamples) {
    const Network net = build_alexnet(3, 2, small_options());
    EXPECT_THROW(overfit_probe(net.spec, net.params, random_source(17, 3, 1), TrainingConfig{}), ContractViolation);
}

TEST(History, CsvLayout) {
    TrainingHistory h;
    h.records.push_back({1, 0.5, 0.25, 0.75, 1.0});
    const std::string csv = h.to_csv();
    EXPECT_EQ(csv.substr(0, csv.find('\n')), "epoch,train_loss,train_acc,val_loss,val_acc");
    EXPECT_NE(csv.find("\n1,"), std::string::npos);
}
