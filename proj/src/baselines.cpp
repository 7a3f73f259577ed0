#include "framing/baselines.hpp"

#include "framing/errors.hpp"
#include "framing/random.hpp"

#include <map>

namespace framing::models {

std::vector<int> predict_uniform(std::size_t n_classes, std::size_t n_items, std::uint64_t seed) {
    if (n_classes < 2) throw ConfigError("uniform baseline needs at least two classes");
    Rng rng(seed);
    std::vector<int> out(n_items);
    for (auto& v : out) v = static_cast<int>(rng.index(n_classes));
    return out;
}

std::vector<int> predict_stratified(std::span<const int> train_labels, std::size_t n_items, std::uint64_t seed) {
    if (train_labels.empty()) throw DegenerateDataError("stratified baseline needs training labels");
    std::map<int, std::size_t> counts;
    for (int y : train_labels) ++counts[y];
    std::vector<int> classes;
    std::vector<std::size_t> cumulative;
    std::size_t running = 0;
    for (const auto& [cls, n] : counts) {
        running += n;
        classes.push_back(cls);
        cumulative.push_back(running);
    }
    Rng rng(seed);
    std::vector<int> out(n_items);
    for (auto& v : out) {
        // Integer draw in [0, N) keeps the class probabilities exact.
        const std::size_t u = rng.index(train_labels.size());
        std::size_t k = 0;
        while (u >= cumulative[k]) ++k;
        v = classes[k];
    }
    return out;
}

}  // namespace framing::models
