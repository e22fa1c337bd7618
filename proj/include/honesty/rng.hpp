#pragma once

#include <cstdint>
#include <random>
#include <string>
#include <string_view>
#include <vector>

#include "honesty/text.hpp"

namespace honesty {

/// Derives the seed for a named substream. Every random choice in the
/// toolkit flows from one user seed through these, keyed so corpus edits
/// don't reshuffle unrelated questions.
inline uint64_t substream_seed(uint64_t seed, std::string_view stream, std::string_view key = {}) {
  uint64_t h = fnv1a64(stream, 0xcbf29ce484222325ULL ^ seed);
  if (!key.empty()) h = fnv1a64(key, h);
  return h;
}

/// Deterministic RNG. Bounded draws use explicit rejection sampling on the
/// raw mt19937_64 stream, so sequences are identical across standard
/// library implementations (std::uniform_int_distribution is not).
class Rng {
 public:
  explicit Rng(uint64_t seed) : engine_(seed) {}

  uint64_t next() { return engine_(); }

  /// Uniform draw in [0, n).
  uint64_t below(uint64_t n) {
    if (n == 0) throw std::invalid_argument("Rng::below(0)");
    const uint64_t limit = UINT64_MAX - UINT64_MAX % n;
    uint64_t x;
    do {
      x = engine_();
    } while (x >= limit);
    return x % n;
  }

  /// k distinct indices from [0, n), by partial Fisher-Yates. Order is part
  /// of the draw and stable under a fixed seed.
  std::vector<size_t> sample_indices(size_t n, size_t k) {
    std::vector<size_t> idx(n);
    for (size_t i = 0; i < n; ++i) idx[i] = i;
    if (k > n) throw std::invalid_argument("sample_indices: k > n");
    for (size_t i = 0; i < k; ++i) {
      size_t j = i + static_cast<size_t>(below(n - i));
      std::swap(idx[i], idx[j]);
    }
    idx.resize(k);
    return idx;
  }

 private:
  std::mt19937_64 engine_;
};

}  // namespace honesty
