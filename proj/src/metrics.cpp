#include "burncnn/metrics.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <numeric>
#include <sstream>

#include "burncnn/errors.hpp"
#include "burncnn/network.hpp"
#include "burncnn/trainer.hpp"

namespace burncnn {

namespace {

Metric ratio(std::size_t num, std::size_t den) {
    if (den == 0) return {0.0, true};
    return {static_cast<double>(num) / static_cast<double>(den), false};
}

nlohmann::json metric_json(const Metric& m) { return m.value; }

std::string fmt(double v, const char* format = "%.6g") {
    char buf[64];
    std::snprintf(buf, sizeof buf, format, v);
    return buf;
}

}  // namespace

// ---- confusion ---------------------------------------------------------------------------

ConfusionMatrix::ConfusionMatrix(std::vector<std::string> classes)
    : class_order(std::move(classes)),
      counts(class_order.size(), std::vector<std::size_t>(class_order.size(), 0)) {}

std::size_t ConfusionMatrix::total() const {
    std::size_t t = 0;
    for (const auto& row : counts) t = std::accumulate(row.begin(), row.end(), t);
    return t;
}

std::size_t ConfusionMatrix::trace() const {
    std::size_t t = 0;
    for (std::size_t i = 0; i < counts.size(); ++i) t += counts[i][i];
    return t;
}

std::size_t ConfusionMatrix::row_sum(std::size_t i) const {
    return std::accumulate(counts.at(i).begin(), counts.at(i).end(), std::size_t{0});
}

std::size_t ConfusionMatrix::column_sum(std::size_t j) const {
    std::size_t t = 0;
    for (const auto& row : counts) t += row.at(j);
    return t;
}

ConfusionMatrix& ConfusionMatrix::operator+=(const ConfusionMatrix& other) {
    if (other.class_order != class_order) throw ContractViolation("cannot merge confusion matrices with different classes");
    for (std::size_t i = 0; i < counts.size(); ++i)
        for (std::size_t j = 0; j < counts.size(); ++j) counts[i][j] += other.counts[i][j];
    return *this;
}

ConfusionMatrix confusion(std::span<const int> truth, std::span<const int> predicted,
                          const std::vector<std::string>& class_order) {
    if (truth.size() != predicted.size()) {
        throw ContractViolation("confusion: " + std::to_string(truth.size()) + " true labels vs " +
                                std::to_string(predicted.size()) + " predictions");
    }
    ConfusionMatrix cm(class_order);
    const auto c = static_cast<int>(class_order.size());
    for (std::size_t i = 0; i < truth.size(); ++i) {
        if (truth[i] < 0 || truth[i] >= c || predicted[i] < 0 || predicted[i] >= c) {
            throw ContractViolation("confusion: label outside [0, " + std::to_string(c) + ") at position " +
                                    std::to_string(i));
        }
        ++cm.counts[static_cast<std::size_t>(truth[i])][static_cast<std::size_t>(predicted[i])];
    }
    return cm;
}

Metric accuracy(const ConfusionMatrix& cm) { return ratio(cm.trace(), cm.total()); }

Metric precision(const ConfusionMatrix& cm, std::size_t positive) {
    if (positive >= cm.classes()) throw ContractViolation("positive class index out of range");
    return ratio(cm.counts[positive][positive], cm.column_sum(positive));
}

Metric recall(const ConfusionMatrix& cm, std::size_t positive) {
    if (positive >= cm.classes()) throw ContractViolation("positive class index out of range");
    return ratio(cm.counts[positive][positive], cm.row_sum(positive));
}

Metric f1(double p, double r) {
    if (p + r == 0.0) return {0.0, true};
    return {2.0 * p * r / (p + r), false};
}

// ---- ROC -----------------------------------------------------------------------------------

RocResult roc_and_auc(std::span<const double> scores, std::span<const int> labels, int positive_label) {
    if (scores.size() != labels.size()) throw ContractViolation("roc: scores and labels differ in length");
    std::size_t pos = 0;
    for (std::size_t i = 0; i < scores.size(); ++i) {
        if (std::isnan(scores[i])) throw ContractViolation("roc: NaN score at position " + std::to_string(i));
        if (labels[i] == positive_label) ++pos;
    }
    const std::size_t neg = scores.size() - pos;
    if (pos == 0 || neg == 0) throw ContractViolation("roc: need at least one positive and one negative sample");

    std::vector<std::size_t> order(scores.size());
    std::iota(order.begin(), order.end(), 0);
    std::stable_sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) { return scores[a] > scores[b]; });

    RocResult res;
    res.curve.positive_label = positive_label;
    res.curve.points.push_back({0.0, 0.0});
    std::size_t tp = 0, fp = 0;
    double area = 0.0;
    for (std::size_t i = 0; i < order.size();) {
        const double threshold = scores[order[i]];
        const std::size_t tp0 = tp, fp0 = fp;
        for (; i < order.size() && scores[order[i]] == threshold; ++i) {
            if (labels[order[i]] == positive_label) ++tp;
            else ++fp;
        }
        // Trapezoid in integer units, normalized once at the end.
        area += static_cast<double>(fp - fp0) * static_cast<double>(tp + tp0) / 2.0;
        res.curve.points.push_back(
            {static_cast<double>(fp) / static_cast<double>(neg), static_cast<double>(tp) / static_cast<double>(pos)});
    }
    res.auc = area / (static_cast<double>(pos) * static_cast<double>(neg));
    return res;
}

std::vector<int> argmax_rows(const Tensor& probabilities) {
    if (probabilities.rank() != 2) throw ContractViolation("argmax_rows needs an [N,C] tensor");
    const std::size_t n = probabilities.dim(0), c = probabilities.dim(1);
    std::vector<int> out(n);
    for (std::size_t row = 0; row < n; ++row) {
        std::size_t best = 0;
        for (std::size_t j = 1; j < c; ++j) {
            if (probabilities[row * c + j] > probabilities[row * c + best]) best = j;
        }
        out[row] = static_cast<int>(best);
    }
    return out;
}

// ---- report ----------------------------------------------------------------------------------

EvalReport evaluate_predictions(const Tensor& probabilities, std::span<const int> labels, SplitMode mode) {
    const auto classes = class_order(mode);
    if (probabilities.rank() != 2 || probabilities.dim(1) != classes.size()) {
        throw ContractViolation("expected probabilities with " + std::to_string(classes.size()) + " classes, got " +
                                shape_string(probabilities.shape()));
    }
    if (probabilities.dim(0) != labels.size()) throw ContractViolation("probability rows and labels differ in count");

    EvalReport r;
    r.mode = mode;
    r.count = labels.size();
    const auto predicted = argmax_rows(probabilities);
    r.confusion = confusion(labels, predicted, classes);
    r.accuracy = accuracy(r.confusion);

    double sp = 0, sr = 0, sf = 0;
    bool dp = false, dr = false, df = false;
    for (std::size_t k = 0; k < classes.size(); ++k) {
        ClassMetrics m;
        m.name = classes[k];
        m.precision = precision(r.confusion, k);
        m.recall = recall(r.confusion, k);
        m.f1 = f1(m.precision.value, m.recall.value);
        m.support = r.confusion.row_sum(k);
        sp += m.precision.value;
        sr += m.recall.value;
        sf += m.f1.value;
        dp |= m.precision.degenerate;
        dr |= m.recall.degenerate;
        df |= m.f1.degenerate;
        r.per_class.push_back(std::move(m));
    }
    const double kc = static_cast<double>(classes.size());
    r.macro_precision = {sp / kc, dp};
    r.macro_recall = {sr / kc, dr};
    r.macro_f1 = {sf / kc, df};

    if (mode == SplitMode::binary) {
        constexpr std::size_t graft = 0;
        r.positive = r.per_class[graft];
        std::vector<double> scores(labels.size());
        for (std::size_t i = 0; i < labels.size(); ++i) scores[i] = probabilities[i * classes.size() + graft];
        std::size_t pos = 0;
        for (int l : labels) pos += l == static_cast<int>(graft);
        if (pos > 0 && pos < labels.size()) r.roc = roc_and_auc(scores, labels, static_cast<int>(graft));
    }
    return r;
}

EvalReport evaluate(const Checkpoint& checkpoint, const SampleSource& test, SplitMode mode, std::size_t batch_size) {
    const auto classes = class_order(mode);
    if (checkpoint.spec.num_classes != classes.size()) {
        throw ContractViolation("checkpoint has " + std::to_string(checkpoint.spec.num_classes) + " classes but " +
                                to_string(mode) + " mode needs " + std::to_string(classes.size()));
    }
    if (test.size() == 0) throw ContractViolation("test set is empty");
    if (batch_size == 0) batch_size = 1;

    Tensor probs({test.size(), classes.size()});
    std::vector<int> labels(test.size());
    for (std::size_t start = 0; start < test.size(); start += batch_size) {
        const std::size_t end = std::min(test.size(), start + batch_size);
        std::vector<std::size_t> idx(end - start);
        std::iota(idx.begin(), idx.end(), start);
        const Tensor p = predict_probabilities(checkpoint.spec, checkpoint.params, gather_batch(test, idx));
        std::copy(p.data().begin(), p.data().end(),
                  probs.data().begin() + static_cast<std::ptrdiff_t>(start * classes.size()));
        for (auto i : idx) labels[i] = test.label(i);
    }
    return evaluate_predictions(probs, labels, mode);
}

nlohmann::json EvalReport::to_json() const {
    nlohmann::json j;
    j["mode"] = to_string(mode);
    j["class_order"] = confusion.class_order;
    j["confusion"] = confusion.counts;
    j["count"] = count;
    j["accuracy"] = metric_json(accuracy);
    nlohmann::json pc = nlohmann::json::object();
    nlohmann::json degenerate = nlohmann::json::array();
    auto note = [&](const std::string& what, const Metric& m) {
        if (m.degenerate) degenerate.push_back(what);
    };
    note("accuracy", accuracy);
    for (const auto& m : per_class) {
        pc[m.name] = {{"precision", m.precision.value},
                      {"recall", m.recall.value},
                      {"f1", m.f1.value},
                      {"support", m.support}};
        note(m.name + ".precision", m.precision);
        note(m.name + ".recall", m.recall);
        note(m.name + ".f1", m.f1);
    }
    j["per_class"] = std::move(pc);
    j["macro"] = {{"precision", macro_precision.value}, {"recall", macro_recall.value}, {"f1", macro_f1.value}};
    if (positive) {
        j["positive_class"] = positive->name;
        j["precision"] = positive->precision.value;
        j["recall"] = positive->recall.value;
        j["f1"] = positive->f1.value;
    }
    if (roc) {
        nlohmann::json pts = nlohmann::json::array();
        for (const auto& p : roc->curve.points) pts.push_back({p.fpr, p.tpr});
        j["roc"] = std::move(pts);
        j["auc"] = roc->auc;
    }
    j["degenerate"] = std::move(degenerate);
    return j;
}

std::string EvalReport::roc_csv() const {
    std::ostringstream os;
    os << "fpr,tpr\n";
    if (roc) {
        for (const auto& p : roc->curve.points) os << fmt(p.fpr, "%.17g") << ',' << fmt(p.tpr, "%.17g") << '\n';
    }
    return os.str();
}

std::string EvalReport::summary_table() const {
    std::ostringstream os;
    os << "mode: " << to_string(mode) << "  samples: " << count << '\n';
    os << "accuracy: " << fmt(100.0 * accuracy.value, "%.1f") << "%\n";
    if (positive) {
        os << "positive class: " << positive->name << "  precision " << fmt(100.0 * positive->precision.value, "%.1f")
           << "%  recall " << fmt(100.0 * positive->recall.value, "%.1f") << "%  F1 "
           << fmt(positive->f1.value, "%.4f");
        if (roc) os << "  AUC " << fmt(roc->auc, "%.3f");
        os << '\n';
    }
    os << "class                 precision  recall     f1      support\n";
    for (const auto& m : per_class) {
        char line[160];
        std::snprintf(line, sizeof line, "%-20s  %9.4f  %9.4f  %7.4f  %7zu\n", m.name.c_str(), m.precision.value,
                      m.recall.value, m.f1.value, m.support);
        os << line;
    }
    os << "confusion (rows = true, columns = predicted):\n";
    for (std::size_t i = 0; i < confusion.classes(); ++i) {
        char head[32];
        std::snprintf(head, sizeof head, "%-20s", confusion.class_order[i].c_str());
        os << head;
        for (auto v : confusion.counts[i]) {
            char cell[16];
            std::snprintf(cell, sizeof cell, " %6zu", v);
            os << cell;
        }
        os << '\n';
    }
    return os.str();
}

}  // namespace burncnn
