#pragma once

#include <cstdint>
#include <span>
#include <vector>

namespace framing::models {

// Each class drawn with probability 1/n_classes. Throws ConfigError when n_classes < 2.
std::vector<int> predict_uniform(std::size_t n_classes, std::size_t n_items, std::uint64_t seed);

// Class c drawn with probability count(c)/N over the training labels.
// Throws DegenerateDataError on empty training labels.
std::vector<int> predict_stratified(std::span<const int> train_labels, std::size_t n_items, std::uint64_t seed);

}  // namespace framing::models
