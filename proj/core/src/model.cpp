#include "cofiner/model.hpp"

namespace cofiner {

void ModelConfig::validate() const {
  if (vocab_size < 1 || embed_dim < 1 || hidden_dim < 1 || num_tags < 1)
    throw ArgumentError("model dimensions must be >= 1");
  if (!(dropout >= 0.0 && dropout < 1.0)) throw ArgumentError("dropout must lie in [0, 1)");
}

std::uint64_t fnv1a64(std::string_view bytes) {
  std::uint64_t h = 0xcbf29ce484222325ULL;
  for (unsigned char c : bytes) {
    h ^= c;
    h *= 0x100000001b3ULL;
  }
  return h;
}

std::uint32_t token_bucket(std::string_view token, std::size_t vocab_size) {
  std::uint64_t h = 0xcbf29ce484222325ULL;
  for (unsigned char c : token) {
    if (c >= 'A' && c <= 'Z') c = static_cast<unsigned char>(c - 'A' + 'a');
    h ^= c;
    h *= 0x100000001b3ULL;
  }
  return static_cast<std::uint32_t>(h % vocab_size);
}

SentenceFeatures featurize(std::span<const std::string> tokens, const ModelConfig& config) {
  SentenceFeatures f;
  f.num_tokens = tokens.size();
  f.slots = config.window_slots();
  f.ids.assign(f.num_tokens * f.slots, kBoundaryBucket);
  std::vector<std::uint32_t> buckets(tokens.size());
  for (std::size_t i = 0; i < tokens.size(); ++i) buckets[i] = token_bucket(tokens[i], config.vocab_size);
  const auto w = static_cast<std::ptrdiff_t>(config.window);
  const auto n = static_cast<std::ptrdiff_t>(tokens.size());
  for (std::ptrdiff_t t = 0; t < n; ++t)
    for (std::ptrdiff_t off = -w; off <= w; ++off) {
      const std::ptrdiff_t pos = t + off;
      if (pos >= 0 && pos < n)
        f.ids[static_cast<std::size_t>(t) * f.slots + static_cast<std::size_t>(off + w)] =
            buckets[static_cast<std::size_t>(pos)];
    }
  return f;
}

}  // namespace cofiner
