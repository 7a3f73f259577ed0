#pragma once

#include "framing/corpus.hpp"

#include <cstddef>
#include <optional>
#include <span>
#include <vector>

namespace framing::eval {

struct LabelScores {
    std::size_t tp = 0;
    std::size_t fp = 0;
    std::size_t fn = 0;
    double precision = 0.0;
    double recall = 0.0;
    double f1 = 0.0;
    // A zero denominator occurred; the affected ratio was reported as 0.
    bool degenerate = false;
};

// One-vs-rest counts for `label`. Throws ShapeError on a length mismatch.
LabelScores label_prf(std::span<const int> gold, std::span<const int> predicted, int label);

struct MicroMacro {
    double micro = 0.0;
    double macro = 0.0;
};

MicroMacro micro_macro_f1(std::span<const int> gold, std::span<const int> predicted, std::span<const int> labels);

// Macro-F1 over the labels that occur in gold or predicted.
double macro_f1_present(std::span<const int> gold, std::span<const int> predicted);

class ConfusionMatrix {
public:
    explicit ConfusionMatrix(std::size_t n_classes = 0) : n_(n_classes), counts_(n_classes * n_classes, 0) {}

    std::size_t n_classes() const { return n_; }
    std::size_t at(std::size_t gold, std::size_t predicted) const { return counts_[gold * n_ + predicted]; }
    void add(std::size_t gold, std::size_t predicted) { ++counts_[gold * n_ + predicted]; }
    std::size_t total() const;

private:
    std::size_t n_;
    std::vector<std::size_t> counts_;
};

// Entry (g, p) counts instances with gold g predicted as p. Throws on out-of-range labels.
ConfusionMatrix confusion(std::span<const int> gold, std::span<const int> predicted, std::size_t n_classes);

// (p_o - p_e) / (1 - p_e); 1 when both annotators use one identical class throughout.
double cohens_kappa(std::span<const int> a, std::span<const int> b, std::size_t n_classes);

struct AgreementReport {
    std::optional<double> related;
    std::optional<double> fault;  // over items both annotators marked accident related
    std::optional<double> perception;
    std::size_t items = 0;
    std::size_t fault_items = 0;
};

// Uses records carrying at least two annotator label sets (the first two).
AgreementReport agreement(const std::vector<corpus::AnnotatedHeadline>& records);

}  // namespace framing::eval
