#pragma once

#include <cstddef>
#include <cstdint>
#include <vector>

#include "cofiner/corpus.hpp"

namespace cofiner {

// Presets used for the K-shot experiments.
inline constexpr int kShotPresets[] = {10, 20, 40, 80, 100};

struct KShotSample {
  Corpus corpus;
  std::vector<std::size_t> indices;   // into the input corpus, ascending
  std::vector<std::size_t> counts;    // entity mentions per type in `corpus`
  std::vector<TypeId> exhausted;      // types whose candidates ran out below K
  // True when every type present in the input reached K.
  bool normal_termination = false;
};

// K~(K+5) greedy sampler. Types are visited from rarest to most frequent; for each
// one, sentences containing it are drawn uniformly without replacement and kept
// unless they would push any type above K+5. Deterministic in `seed`.
KShotSample sample_kshot(const Corpus& corpus, int k, std::uint64_t seed);

}  // namespace cofiner
