#include "cofiner/sampler.hpp"

#include <algorithm>
#include <numeric>
#include <random>
#include <string>

#include "cofiner/error.hpp"
#include "cofiner/log.hpp"
#include "cofiner/rng.hpp"

namespace cofiner {

KShotSample sample_kshot(const Corpus& corpus, int k, std::uint64_t seed) {
  if (k < 1) throw ArgumentError("K must be >= 1, got " + std::to_string(k));
  const std::size_t num_types = corpus.schema.num_types();
  const auto kk = static_cast<std::size_t>(k);
  const std::size_t cap = kk + 5;

  // Per-sentence mention counts.
  std::vector<std::vector<std::size_t>> sentence_counts(corpus.size(),
                                                        std::vector<std::size_t>(num_types, 0));
  std::vector<std::size_t> freq(num_types, 0);
  for (std::size_t i = 0; i < corpus.size(); ++i)
    for (TagId tag : corpus.sentences[i].tags)
      if (TagSchema::prefix(tag) == TagPrefix::kBegin) {
        const auto t = static_cast<std::size_t>(TagSchema::type_of(tag));
        ++sentence_counts[i][t];
        ++freq[t];
      }

  std::vector<std::size_t> present;
  for (std::size_t t = 0; t < num_types; ++t)
    if (freq[t] > 0) present.push_back(t);
  if (present.empty()) throw ArgumentError("corpus contains no entities to sample");

  std::stable_sort(present.begin(), present.end(),
                   [&](std::size_t a, std::size_t b) { return freq[a] < freq[b]; });

  Rng rng = make_rng(seed, {0x6b73686f74ULL});
  std::vector<std::size_t> count(num_types, 0);
  std::vector<bool> selected(corpus.size(), false);
  KShotSample out;

  auto all_reached = [&] {
    return std::all_of(present.begin(), present.end(),
                       [&](std::size_t t) { return count[t] >= kk; });
  };

  for (std::size_t type : present) {
    if (all_reached()) break;
    std::vector<std::size_t> pool;
    for (std::size_t i = 0; i < corpus.size(); ++i)
      if (!selected[i] && sentence_counts[i][type] > 0) pool.push_back(i);

    while (count[type] < kk && !pool.empty()) {
      std::uniform_int_distribution<std::size_t> pick(0, pool.size() - 1);
      const std::size_t slot = pick(rng);
      const std::size_t cand = pool[slot];
      pool[slot] = pool.back();
      pool.pop_back();

      const auto& add = sentence_counts[cand];
      bool overflow = false;
      for (std::size_t t = 0; t < num_types; ++t)
        if (count[t] + add[t] > cap) {
          overflow = true;
          break;
        }
      if (overflow) continue;
      selected[cand] = true;
      for (std::size_t t = 0; t < num_types; ++t) count[t] += add[t];
    }
    if (count[type] < kk) {
      out.exhausted.push_back(static_cast<TypeId>(type));
      log::warn("k-shot sampler: candidates for type '" + corpus.schema.type_name(static_cast<TypeId>(type)) +
                "' exhausted at " + std::to_string(count[type]) + " < K=" + std::to_string(k));
    }
  }

  out.corpus.schema = corpus.schema;
  out.corpus.name = corpus.name + ".k" + std::to_string(k);
  for (std::size_t i = 0; i < corpus.size(); ++i)
    if (selected[i]) {
      out.indices.push_back(i);
      out.corpus.sentences.push_back(corpus.sentences[i]);
    }
  out.counts = count;
  out.normal_termination = all_reached();
  return out;
}

}  // namespace cofiner
