#include "framing/metrics.hpp"

#include "framing/errors.hpp"

#include <set>

namespace framing::eval {

namespace {

void check_lengths(std::span<const int> a, std::span<const int> b) {
    if (a.size() != b.size())
        throw ShapeError("gold and predicted lengths differ (" + std::to_string(a.size()) + " vs " +
                         std::to_string(b.size()) + ")");
}

double ratio(std::size_t num, std::size_t den, bool& degenerate) {
    if (den == 0) {
        degenerate = true;
        return 0.0;
    }
    return static_cast<double>(num) / static_cast<double>(den);
}

double harmonic(double p, double r) { return p + r > 0.0 ? 2.0 * p * r / (p + r) : 0.0; }

}  // namespace

LabelScores label_prf(std::span<const int> gold, std::span<const int> predicted, int label) {
    check_lengths(gold, predicted);
    LabelScores s;
    for (std::size_t i = 0; i < gold.size(); ++i) {
        const bool g = gold[i] == label;
        const bool p = predicted[i] == label;
        if (g && p) ++s.tp;
        else if (p) ++s.fp;
        else if (g) ++s.fn;
    }
    s.precision = ratio(s.tp, s.tp + s.fp, s.degenerate);
    s.recall = ratio(s.tp, s.tp + s.fn, s.degenerate);
    s.f1 = harmonic(s.precision, s.recall);
    return s;
}

MicroMacro micro_macro_f1(std::span<const int> gold, std::span<const int> predicted, std::span<const int> labels) {
    check_lengths(gold, predicted);
    MicroMacro out;
    if (labels.empty()) return out;
    std::size_t tp = 0, fp = 0, fn = 0;
    double f_sum = 0.0;
    for (int l : labels) {
        auto s = label_prf(gold, predicted, l);
        tp += s.tp;
        fp += s.fp;
        fn += s.fn;
        f_sum += s.f1;
    }
    bool unused = false;
    out.micro = harmonic(ratio(tp, tp + fp, unused), ratio(tp, tp + fn, unused));
    out.macro = f_sum / static_cast<double>(labels.size());
    return out;
}

double macro_f1_present(std::span<const int> gold, std::span<const int> predicted) {
    std::set<int> present(gold.begin(), gold.end());
    present.insert(predicted.begin(), predicted.end());
    std::vector<int> labels(present.begin(), present.end());
    return micro_macro_f1(gold, predicted, labels).macro;
}

std::size_t ConfusionMatrix::total() const {
    std::size_t t = 0;
    for (auto c : counts_) t += c;
    return t;
}

ConfusionMatrix confusion(std::span<const int> gold, std::span<const int> predicted, std::size_t n_classes) {
    check_lengths(gold, predicted);
    ConfusionMatrix m(n_classes);
    for (std::size_t i = 0; i < gold.size(); ++i) {
        if (gold[i] < 0 || predicted[i] < 0 || static_cast<std::size_t>(gold[i]) >= n_classes ||
            static_cast<std::size_t>(predicted[i]) >= n_classes)
            throw ShapeError("label out of range at instance " + std::to_string(i));
        m.add(static_cast<std::size_t>(gold[i]), static_cast<std::size_t>(predicted[i]));
    }
    return m;
}

double cohens_kappa(std::span<const int> a, std::span<const int> b, std::size_t n_classes) {
    check_lengths(a, b);
    if (a.empty()) throw ShapeError("kappa needs at least one item");
    auto table = confusion(a, b, n_classes);
    const double n = static_cast<double>(a.size());
    double observed = 0.0, chance = 0.0;
    for (std::size_t c = 0; c < n_classes; ++c) {
        observed += static_cast<double>(table.at(c, c));
        double row = 0.0, col = 0.0;
        for (std::size_t k = 0; k < n_classes; ++k) {
            row += static_cast<double>(table.at(c, k));
            col += static_cast<double>(table.at(k, c));
        }
        chance += (row / n) * (col / n);
    }
    observed /= n;
    if (chance >= 1.0) return observed >= 1.0 ? 1.0 : 0.0;
    return (observed - chance) / (1.0 - chance);
}

AgreementReport agreement(const std::vector<corpus::AnnotatedHeadline>& records) {
    std::vector<int> rel_a, rel_b, fault_a, fault_b, per_a, per_b;
    for (const auto& r : records) {
        if (!r.annotator_labels || r.annotator_labels->size() < 2) continue;
        const auto& x = (*r.annotator_labels)[0];
        const auto& y = (*r.annotator_labels)[1];
        const bool rx = x.accident != corpus::Accident::NotAccident;
        const bool ry = y.accident != corpus::Accident::NotAccident;
        rel_a.push_back(rx);
        rel_b.push_back(ry);
        per_a.push_back(static_cast<int>(x.perception));
        per_b.push_back(static_cast<int>(y.perception));
        if (rx && ry) {
            fault_a.push_back(static_cast<int>(x.accident) - 1);
            fault_b.push_back(static_cast<int>(y.accident) - 1);
        }
    }
    AgreementReport out;
    out.items = rel_a.size();
    out.fault_items = fault_a.size();
    if (!rel_a.empty()) {
        out.related = cohens_kappa(rel_a, rel_b, 2);
        out.perception = cohens_kappa(per_a, per_b, 3);
    }
    if (!fault_a.empty()) out.fault = cohens_kappa(fault_a, fault_b, 3);
    return out;
}

}  // namespace framing::eval
