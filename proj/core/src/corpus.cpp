#include "cofiner/corpus.hpp"

#include <algorithm>
#include <fstream>
#include <istream>
#include <ostream>
#include <set>
#include <sstream>

#include "cofiner/error.hpp"

namespace cofiner {

TagSchema::TagSchema(std::vector<std::string> entity_types) : types_(std::move(entity_types)) {
  tags_.reserve(2 * types_.size() + 1);
  for (std::size_t i = 0; i < types_.size(); ++i) {
    const auto& t = types_[i];
    if (t.empty()) throw ArgumentError("entity type name is empty");
    if (t == "O") throw ArgumentError("entity type may not be named \"O\"");
    if (t.find('-') != std::string::npos)
      throw ArgumentError("entity type name contains '-': " + t);
    if (t.find_first_of(" \t\r\n") != std::string::npos)
      throw ArgumentError("entity type name contains whitespace: " + t);
    if (!type_index_.emplace(t, static_cast<TypeId>(i)).second)
      throw ArgumentError("duplicate entity type: " + t);
    tags_.push_back("B-" + t);
    tags_.push_back("I-" + t);
  }
}

TagSchema TagSchema::induced(std::vector<std::string> entity_types) {
  std::sort(entity_types.begin(), entity_types.end());
  entity_types.erase(std::unique(entity_types.begin(), entity_types.end()), entity_types.end());
  return TagSchema(std::move(entity_types));
}

std::optional<TypeId> TagSchema::find_type(std::string_view name) const {
  auto it = type_index_.find(std::string(name));
  if (it == type_index_.end()) return std::nullopt;
  return it->second;
}

std::optional<TagId> TagSchema::find_tag(std::string_view tag) const {
  if (tag == "O") return kOutsideTag;
  if (tag.size() < 3 || tag[1] != '-' || (tag[0] != 'B' && tag[0] != 'I')) return std::nullopt;
  auto type = find_type(tag.substr(2));
  if (!type) return std::nullopt;
  return tag[0] == 'B' ? begin_tag(*type) : inside_tag(*type);
}

std::size_t Corpus::num_tokens() const noexcept {
  std::size_t n = 0;
  for (const auto& s : sentences) n += s.size();
  return n;
}

void Corpus::validate() const {
  const auto num_tags = static_cast<TagId>(schema.num_tags());
  for (std::size_t i = 0; i < sentences.size(); ++i) {
    const auto& s = sentences[i];
    if (s.tokens.empty()) throw ArgumentError("sentence " + std::to_string(i) + " is empty");
    if (s.tokens.size() != s.tags.size())
      throw ArgumentError("sentence " + std::to_string(i) + " has misaligned tokens and tags");
    for (const auto& tok : s.tokens)
      if (tok.empty()) throw ArgumentError("sentence " + std::to_string(i) + " has an empty token");
    for (TagId tag : s.tags)
      if (tag < 0 || tag >= num_tags)
        throw ArgumentError("sentence " + std::to_string(i) + " has out-of-range tag " +
                            std::to_string(tag));
  }
}

std::size_t repair_bio(std::vector<TagId>& tags) {
  std::size_t repaired = 0;
  TagId prev = kOutsideTag;
  for (auto& tag : tags) {
    if (TagSchema::prefix(tag) == TagPrefix::kInside &&
        TagSchema::type_of(prev) != TagSchema::type_of(tag)) {
      tag = TagSchema::begin_tag(TagSchema::type_of(tag));
      ++repaired;
    }
    prev = tag;
  }
  return repaired;
}

bool is_bio_valid(const std::vector<TagId>& tags) {
  TagId prev = kOutsideTag;
  for (TagId tag : tags) {
    if (TagSchema::prefix(tag) == TagPrefix::kInside &&
        TagSchema::type_of(prev) != TagSchema::type_of(tag))
      return false;
    prev = tag;
  }
  return true;
}

std::vector<Span> extract_spans(const std::vector<TagId>& tags) {
  std::vector<Span> spans;
  bool open = false;
  Span cur;
  for (std::size_t i = 0; i < tags.size(); ++i) {
    const TagId tag = tags[i];
    const auto prefix = TagSchema::prefix(tag);
    if (open && (prefix != TagPrefix::kInside || TagSchema::type_of(tag) != cur.entity_type)) {
      cur.end = i;
      spans.push_back(cur);
      open = false;
    }
    if (prefix == TagPrefix::kBegin || (prefix == TagPrefix::kInside && !open)) {
      cur = Span{TagSchema::type_of(tag), i, i};
      open = true;
    }
  }
  if (open) {
    cur.end = tags.size();
    spans.push_back(cur);
  }
  return spans;
}

std::vector<TagId> spans_to_tags(const std::vector<Span>& spans, std::size_t length) {
  std::vector<TagId> tags(length, kOutsideTag);
  for (const auto& span : spans) {
    if (span.start >= span.end || span.end > length)
      throw ArgumentError("span out of range for sentence of length " + std::to_string(length));
    tags[span.start] = TagSchema::begin_tag(span.entity_type);
    for (std::size_t i = span.start + 1; i < span.end; ++i)
      tags[i] = TagSchema::inside_tag(span.entity_type);
  }
  return tags;
}

std::vector<std::size_t> count_entities(const Corpus& corpus) {
  std::vector<std::size_t> counts(corpus.schema.num_types(), 0);
  for (const auto& s : corpus.sentences)
    for (TagId tag : s.tags)
      if (TagSchema::prefix(tag) == TagPrefix::kBegin)
        ++counts[static_cast<std::size_t>(TagSchema::type_of(tag))];
  return counts;
}

namespace {

struct RawSentence {
  std::vector<std::string> tokens;
  std::vector<std::string> tags;
  std::vector<std::size_t> lines;
};

// Entity type of a raw tag string, or nullopt for "O".
std::optional<std::string> raw_type(const std::string& tag, std::size_t line) {
  if (tag == "O") return std::nullopt;
  if (tag.size() < 3 || tag[1] != '-' || (tag[0] != 'B' && tag[0] != 'I'))
    throw ParseError("malformed BIO tag '" + tag + "'", line);
  return tag.substr(2);
}

}  // namespace

Corpus parse_conll(std::istream& in, const std::optional<TagSchema>& schema, ConllStats* stats) {
  ConllStats local;
  std::vector<RawSentence> raw;
  RawSentence cur;
  auto flush = [&] {
    if (!cur.tokens.empty()) raw.push_back(std::move(cur));
    cur = RawSentence{};
  };

  std::string line;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.empty()) {
      flush();
      continue;
    }
    std::string token;
    std::string tag;
    const char sep = line.find('\t') != std::string::npos ? '\t' : ' ';
    const auto pos = line.find(sep);
    if (pos == std::string::npos || line.find(sep, pos + 1) != std::string::npos) {
      if (line.rfind("-DOCSTART-", 0) == 0) {
        ++local.docstart_lines;
        flush();
        continue;
      }
      throw ParseError("expected 2 columns (token, tag)", line_no);
    }
    token = line.substr(0, pos);
    tag = line.substr(pos + 1);
    if (token == "-DOCSTART-") {
      ++local.docstart_lines;
      flush();
      continue;
    }
    if (token.empty() || tag.empty()) throw ParseError("empty token or tag column", line_no);
    cur.tokens.push_back(std::move(token));
    cur.tags.push_back(std::move(tag));
    cur.lines.push_back(line_no);
  }
  flush();

  Corpus corpus;
  if (schema) {
    corpus.schema = *schema;
  } else {
    std::set<std::string> seen;
    for (const auto& s : raw)
      for (std::size_t i = 0; i < s.tags.size(); ++i)
        if (auto t = raw_type(s.tags[i], s.lines[i])) seen.insert(*t);
    try {
      corpus.schema = TagSchema::induced({seen.begin(), seen.end()});
    } catch (const ArgumentError& e) {
      throw SchemaError(e.what());
    }
  }

  corpus.sentences.reserve(raw.size());
  for (auto& s : raw) {
    TaggedSentence out;
    out.tokens = std::move(s.tokens);
    out.tags.reserve(s.tags.size());
    for (std::size_t i = 0; i < s.tags.size(); ++i) {
      raw_type(s.tags[i], s.lines[i]);  // shape check
      auto id = corpus.schema.find_tag(s.tags[i]);
      if (!id)
        throw SchemaError("line " + std::to_string(s.lines[i]) + ": tag '" + s.tags[i] +
                          "' not in schema");
      out.tags.push_back(*id);
    }
    local.repaired_tags += repair_bio(out.tags);
    corpus.sentences.push_back(std::move(out));
  }
  if (stats) *stats = local;
  return corpus;
}

Corpus read_conll(const std::filesystem::path& path, const std::optional<TagSchema>& schema,
                  ConllStats* stats) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot open " + path.string());
  Corpus corpus = parse_conll(in, schema, stats);
  corpus.name = path.stem().string();
  return corpus;
}

void format_conll(const Corpus& corpus, std::ostream& out) {
  for (const auto& s : corpus.sentences) {
    for (std::size_t i = 0; i < s.size(); ++i)
      out << s.tokens[i] << '\t' << corpus.schema.tag_name(s.tags[i]) << '\n';
    out << '\n';
  }
}

void write_conll(const Corpus& corpus, const std::filesystem::path& path) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw IoError("cannot open " + path.string() + " for writing");
  format_conll(corpus, out);
  out.flush();
  if (!out) throw IoError("write failed: " + path.string());
}

}  // namespace cofiner
