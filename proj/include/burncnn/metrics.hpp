#pragma once

#include <cstddef>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "burncnn/checkpoint.hpp"
#include "burncnn/dataset.hpp"
#include "burncnn/image.hpp"
#include "json.hpp"

namespace burncnn {

/// counts[i][j] = samples of true class i predicted as class j.
struct ConfusionMatrix {
    std::vector<std::string> class_order;
    std::vector<std::vector<std::size_t>> counts;

    explicit ConfusionMatrix(std::vector<std::string> classes = {});

    std::size_t classes() const noexcept { return class_order.size(); }
    std::size_t total() const;
    std::size_t trace() const;
    std::size_t row_sum(std::size_t i) const;
    std::size_t column_sum(std::size_t j) const;

    /// Element-wise sum; class orders must agree.
    ConfusionMatrix& operator+=(const ConfusionMatrix& other);
    friend bool operator==(const ConfusionMatrix&, const ConfusionMatrix&) = default;
};

ConfusionMatrix confusion(std::span<const int> truth, std::span<const int> predicted,
                          const std::vector<std::string>& class_order);

/// A ratio; 0 with `degenerate` set when its denominator is 0.
struct Metric {
    double value = 0.0;
    bool degenerate = false;
};

Metric accuracy(const ConfusionMatrix& cm);
Metric precision(const ConfusionMatrix& cm, std::size_t positive);
Metric recall(const ConfusionMatrix& cm, std::size_t positive);
Metric f1(double precision, double recall);

struct RocPoint {
    double fpr = 0.0;
    double tpr = 0.0;
};

struct RocCurve {
    std::vector<RocPoint> points;
    int positive_label = 1;
};

struct RocResult {
    RocCurve curve;
    double auc = 0.0;
};

/// Threshold sweep over distinct scores (descending) from (0,0) to (1,1),
/// trapezoidal AUC. Tied scores contribute a diagonal segment, so the AUC
/// equals the pairwise-ordering probability with ties counted 1/2.
RocResult roc_and_auc(std::span<const double> scores, std::span<const int> labels, int positive_label = 1);

/// Row-wise argmax, ties to the lowest class index.
std::vector<int> argmax_rows(const Tensor& probabilities);

struct ClassMetrics {
    std::string name;
    Metric precision;
    Metric recall;
    Metric f1;
    std::size_t support = 0;
};

struct EvalReport {
    SplitMode mode = SplitMode::three_class;
    ConfusionMatrix confusion;
    Metric accuracy;
    std::vector<ClassMetrics> per_class;
    Metric macro_precision;
    Metric macro_recall;
    Metric macro_f1;
    /// Binary only: graft, with its metrics and the ROC from P(graft).
    std::optional<ClassMetrics> positive;
    std::optional<RocResult> roc;
    std::size_t count = 0;

    nlohmann::json to_json() const;
    std::string roc_csv() const;
    std::string summary_table() const;
};

/// Builds a report from [N,C] class probabilities and true labels.
EvalReport evaluate_predictions(const Tensor& probabilities, std::span<const int> labels, SplitMode mode);

/// Runs the checkpoint in inference mode over `test` and reports.
EvalReport evaluate(const Checkpoint& checkpoint, const SampleSource& test, SplitMode mode,
                    std::size_t batch_size = 16);

}  // namespace burncnn
