#pragma once

#include <cstddef>
#include <filesystem>
#include <iosfwd>
#include <optional>
#include <string>
#include <string_view>
#include <unordered_map>
#include <vector>

namespace cofiner {

using TagId = int;
using TypeId = int;

inline constexpr TagId kOutsideTag = 0;

enum class TagPrefix { kOutside, kBegin, kInside };

// Entity-type inventory plus its BIO tag alphabet:
//   index 0 = "O", then "B-t", "I-t" for each type t in order.
class TagSchema {
 public:
  TagSchema() = default;
  // Keeps the given order. Throws ArgumentError on duplicates, "O", or names containing '-'.
  explicit TagSchema(std::vector<std::string> entity_types);

  // Sorts lexicographically and drops duplicates.
  static TagSchema induced(std::vector<std::string> entity_types);

  std::size_t num_types() const noexcept { return types_.size(); }
  std::size_t num_tags() const noexcept { return 2 * types_.size() + 1; }
  const std::vector<std::string>& entity_types() const noexcept { return types_; }
  const std::vector<std::string>& tag_alphabet() const noexcept { return tags_; }

  const std::string& type_name(TypeId t) const { return types_.at(static_cast<std::size_t>(t)); }
  const std::string& tag_name(TagId tag) const { return tags_.at(static_cast<std::size_t>(tag)); }

  std::optional<TypeId> find_type(std::string_view name) const;
  std::optional<TagId> find_tag(std::string_view tag) const;

  static TagId begin_tag(TypeId t) noexcept { return 2 * t + 1; }
  static TagId inside_tag(TypeId t) noexcept { return 2 * t + 2; }
  static TagPrefix prefix(TagId tag) noexcept {
    if (tag == kOutsideTag) return TagPrefix::kOutside;
    return (tag % 2 == 1) ? TagPrefix::kBegin : TagPrefix::kInside;
  }
  // Entity type of a B-/I- tag; -1 for O.
  static TypeId type_of(TagId tag) noexcept { return tag == kOutsideTag ? -1 : (tag - 1) / 2; }

  friend bool operator==(const TagSchema& a, const TagSchema& b) { return a.types_ == b.types_; }

 private:
  std::vector<std::string> types_;
  std::vector<std::string> tags_{"O"};
  std::unordered_map<std::string, TypeId> type_index_;
};

struct TaggedSentence {
  std::vector<std::string> tokens;
  std::vector<TagId> tags;

  std::size_t size() const noexcept { return tokens.size(); }
  friend bool operator==(const TaggedSentence&, const TaggedSentence&) = default;
};

struct Corpus {
  TagSchema schema;
  std::vector<TaggedSentence> sentences;
  std::string name;

  std::size_t size() const noexcept { return sentences.size(); }
  bool empty() const noexcept { return sentences.empty(); }
  std::size_t num_tokens() const noexcept;

  // Throws ArgumentError if a sentence is empty, misaligned, or uses an out-of-range tag.
  void validate() const;

  friend bool operator==(const Corpus& a, const Corpus& b) {
    return a.schema == b.schema && a.sentences == b.sentences;
  }
};

struct Span {
  TypeId entity_type = 0;
  std::size_t start = 0;  // inclusive
  std::size_t end = 0;    // exclusive

  friend auto operator<=>(const Span&, const Span&) = default;
};

// Rewrites every I-t not preceded by B-t/I-t into B-t. Returns the number of repairs.
std::size_t repair_bio(std::vector<TagId>& tags);
bool is_bio_valid(const std::vector<TagId>& tags);

std::vector<Span> extract_spans(const std::vector<TagId>& tags);
inline std::vector<Span> extract_spans(const TaggedSentence& sentence) {
  return extract_spans(sentence.tags);
}
// Inverse of extract_spans for non-overlapping spans.
std::vector<TagId> spans_to_tags(const std::vector<Span>& spans, std::size_t length);

// Number of entity mentions per type in the corpus.
std::vector<std::size_t> count_entities(const Corpus& corpus);

struct ConllStats {
  std::size_t repaired_tags = 0;
  std::size_t docstart_lines = 0;
};

// Column format: "token<TAB>tag" (a single space also accepted), blank line between
// sentences, "-DOCSTART-" lines skipped. Without a schema one is induced from the tags.
Corpus parse_conll(std::istream& in, const std::optional<TagSchema>& schema = std::nullopt,
                   ConllStats* stats = nullptr);
Corpus read_conll(const std::filesystem::path& path,
                  const std::optional<TagSchema>& schema = std::nullopt, ConllStats* stats = nullptr);

void format_conll(const Corpus& corpus, std::ostream& out);
void write_conll(const Corpus& corpus, const std::filesystem::path& path);

}  // namespace cofiner
