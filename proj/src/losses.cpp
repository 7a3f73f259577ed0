#include "framing/losses.hpp"

#include "framing/errors.hpp"

#include <algorithm>
#include <cmath>
#include <string>

namespace framing::models {

std::vector<double> softmax(std::span<const double> logits) {
    std::vector<double> p(logits.begin(), logits.end());
    if (p.empty()) return p;
    double m = *std::max_element(p.begin(), p.end());
    double z = 0.0;
    for (double& v : p) {
        v = std::exp(v - m);
        z += v;
    }
    for (double& v : p) v /= z;
    return p;
}

double cross_entropy(std::span<const double> logits, std::size_t gold) {
    if (gold >= logits.size()) throw ShapeError("gold class out of range for logits");
    double m = *std::max_element(logits.begin(), logits.end());
    double z = 0.0;
    for (double v : logits) z += std::exp(v - m);
    return std::log(z) + m - logits[gold];
}

double mean_cross_entropy(const Matrix& logits, std::span<const int> gold) {
    if (gold.size() != logits.rows) throw ShapeError("logit rows and gold labels differ in length");
    double total = 0.0;
    std::size_t used = 0;
    for (std::size_t r = 0; r < logits.rows; ++r) {
        if (gold[r] < 0) continue;
        total += cross_entropy(logits.row(r), static_cast<std::size_t>(gold[r]));
        ++used;
    }
    return used == 0 ? 0.0 : total / static_cast<double>(used);
}

double mt_loss(std::span<const Matrix> head_outputs, std::span<const std::vector<int>> gold,
               std::span<const double> weights) {
    if (head_outputs.size() != gold.size() || head_outputs.size() != weights.size())
        throw ShapeError("mt_loss needs one gold vector and one weight per task");
    double loss = 0.0;
    for (std::size_t t = 0; t < head_outputs.size(); ++t) {
        for (int g : gold[t])
            if (g < 0) throw ShapeError("task " + std::to_string(t) + " has a masked gold label");
        if (weights[t] < 0.0) throw ShapeError("task weights must be nonnegative");
        if (weights[t] == 0.0) {
            if (gold[t].size() != head_outputs[t].rows) throw ShapeError("logit rows and gold labels differ in length");
            continue;
        }
        loss += weights[t] * mean_cross_entropy(head_outputs[t], gold[t]);
    }
    return loss;
}

double lp_aux_loss(const Matrix& lp_logits, std::span<const int> lp_gold, double alpha) {
    if (alpha < 0.0) throw ShapeError("alpha must be nonnegative");
    if (lp_gold.size() != lp_logits.rows) throw ShapeError("logit rows and gold labels differ in length");
    if (alpha == 0.0) return 0.0;
    return alpha * mean_cross_entropy(lp_logits, lp_gold);
}

double combined_loss(std::span<const Matrix> head_outputs, const Matrix& lp_logits,
                     std::span<const std::vector<int>> gold, std::span<const int> lp_gold,
                     std::span<const double> weights, double alpha) {
    return mt_loss(head_outputs, gold, weights) + lp_aux_loss(lp_logits, lp_gold, alpha);
}

}  // namespace framing::models
