#pragma once

#include "framing/matrix.hpp"

#include <span>
#include <vector>

namespace framing::models {

// Labels below zero are masked out of a loss term.
inline constexpr int kMasked = -1;

std::vector<double> softmax(std::span<const double> logits);

// -log softmax(logits)[gold], computed with a max shift.
double cross_entropy(std::span<const double> logits, std::size_t gold);

// Mean cross-entropy over rows whose label is not masked; 0 when every row is masked.
double mean_cross_entropy(const Matrix& logits, std::span<const int> gold);

// Sum over tasks of w_i * mean cross-entropy.
double mt_loss(std::span<const Matrix> head_outputs, std::span<const std::vector<int>> gold,
               std::span<const double> weights);

// alpha * mean cross-entropy of the label-powerset head over unmasked rows.
double lp_aux_loss(const Matrix& lp_logits, std::span<const int> lp_gold, double alpha);

// mt_loss + lp_aux_loss.
double combined_loss(std::span<const Matrix> head_outputs, const Matrix& lp_logits,
                     std::span<const std::vector<int>> gold, std::span<const int> lp_gold,
                     std::span<const double> weights, double alpha);

}  // namespace framing::models
