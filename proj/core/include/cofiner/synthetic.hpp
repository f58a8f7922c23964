#pragma once

#include <cstddef>
#include <cstdint>
#include <string>
#include <vector>

#include "cofiner/corpus.hpp"

namespace cofiner {

struct CoarseGroup {
  std::string coarse;
  std::vector<std::string> fine;  // at least two subtypes
};

// Shape of a generated fine/coarse corpus pair. Every fine type owns a disjoint
// set of marker words; an entity is 1..max_entity_len marker words of its type,
// optionally preceded by a cue word specific to its fine type or to its coarse
// parent. Everything else is filler.
struct SyntheticSpec {
  std::vector<CoarseGroup> groups;
  std::size_t markers_per_fine = 24;
  std::size_t fine_cues_per_type = 2;
  std::size_t coarse_cues_per_type = 2;
  double fine_cue_prob = 0.5;
  double coarse_cue_prob = 0.6;  // applied when no fine cue was drawn
  std::size_t filler_vocab = 300;
  std::size_t fine_sentences = 200;
  std::size_t coarse_sentences = 1000;
  std::size_t min_length = 5;
  std::size_t max_length = 14;
  double entity_rate = 0.15;  // chance that an entity starts at a free position
  std::size_t max_entity_len = 2;
  double corruption_rate = 0.0;  // fraction of coarse entity spans relabeled

  // 4 coarse types with 3 fine subtypes each.
  static SyntheticSpec standard();
};

struct SyntheticData {
  Corpus fine;
  Corpus coarse;
  std::vector<TypeId> hierarchy;  // fine type -> coarse type
  // Uncorrupted fine-level tags for every coarse sentence (parallel view).
  std::vector<std::vector<TagId>> coarse_latent_fine;
  std::size_t coarse_entity_tokens = 0;
  std::size_t corrupted_tokens = 0;
};

SyntheticData generate_synthetic(const SyntheticSpec& spec, std::uint64_t seed);

}  // namespace cofiner
