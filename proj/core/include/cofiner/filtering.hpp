#pragma once

#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <string>
#include <vector>

#include "cofiner/corpus.hpp"
#include "cofiner/f2c.hpp"
#include "cofiner/model.hpp"

namespace cofiner {

// Per-token keep flags over a coarse corpus (1 = label consistent with the fine model).
struct ConsistencyMask {
  std::vector<std::vector<std::uint8_t>> keep;
  std::size_t total_tokens = 0;
  std::size_t masked_tokens = 0;
  std::vector<double> masked_fraction_by_type;  // over gold coarse entity tokens, per type

  double masked_fraction() const noexcept {
    return total_tokens == 0 ? 0.0
                             : static_cast<double>(masked_tokens) / static_cast<double>(total_tokens);
  }

  static ConsistencyMask all_true(const Corpus& corpus);
  static ConsistencyMask all_false(const Corpus& corpus);
};

// argmax of p^F · M_tag per token (ties to the lowest tag index).
std::vector<TagId> predict_coarse(const TokenClassifier& model, const Matrix<double>& m_tag,
                                  const SentenceFeatures& features);
std::vector<TagId> predict_coarse(const TokenClassifier& model, const F2CMatrix& m,
                                  const TaggedSentence& sentence);

ConsistencyMask build_mask(const TokenClassifier& model, const F2CMatrix& m,
                           const Corpus& coarse_corpus);

// Recomputes the summary counters from `keep` against the corpus gold tags.
void summarize_mask(ConsistencyMask& mask, const Corpus& coarse_corpus);

struct FilterRow {
  std::string coarse_type;
  std::size_t tokens = 0;
  std::size_t filtered = 0;
  double proportion = 0.0;
};

std::vector<FilterRow> filtering_report(const ConsistencyMask& mask, const Corpus& coarse_corpus);
// Columns: coarse_type, tokens, filtered, proportion, delta_f1 (left empty for the caller).
void write_filtering_report(const std::vector<FilterRow>& rows, std::ostream& out);

// Mask cache: "# checkpoint=<hex> matrix=<provenance>" then one 0/1 line per sentence.
void write_mask_cache(const ConsistencyMask& mask, const std::string& checkpoint_hex,
                      const std::string& provenance, const std::filesystem::path& path);
ConsistencyMask read_mask_cache(const std::filesystem::path& path, const Corpus& coarse_corpus,
                                std::string* header = nullptr);

}  // namespace cofiner
