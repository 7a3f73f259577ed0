#pragma once

#include <cstddef>
#include <cstdint>
#include <random>
#include <span>
#include <string>
#include <string_view>
#include <utility>

namespace framing {

// Seeded generator with portable draws. std::mt19937_64 output is fixed by the
// standard, but the std distributions are not, so every draw used for sampling
// or shuffling goes through the helpers below.
class Rng {
public:
    explicit Rng(std::uint64_t seed) : engine_(seed) {}

    std::uint64_t next() { return engine_(); }

    // Uniform in [0, 1) with 53 random bits.
    double uniform() { return static_cast<double>(engine_() >> 11) * 0x1.0p-53; }

    double uniform(double lo, double hi) { return lo + (hi - lo) * uniform(); }

    // Uniform integer in [0, n). n must be nonzero.
    std::size_t index(std::size_t n);

    template <typename T>
    void shuffle(std::span<T> items) {
        for (std::size_t i = items.size(); i > 1; --i) {
            std::size_t j = index(i);
            using std::swap;
            swap(items[i - 1], items[j]);
        }
    }

    // Derive an independent stream, e.g. one per fold.
    Rng fork(std::uint64_t stream);

private:
    std::mt19937_64 engine_;
};

// splitmix64 finalizer, used to decorrelate derived seeds.
std::uint64_t mix_seed(std::uint64_t seed, std::uint64_t stream);

// FNV-1a 64-bit digest, rendered as 16 lowercase hex digits.
std::string fnv1a_hex(std::string_view data);

}  // namespace framing
