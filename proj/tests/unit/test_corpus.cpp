#include <sstream>

#include "cofiner/corpus.hpp"
#include "cofiner/error.hpp"
#include "doctest.h"
#include "oracles.hpp"

using namespace cofiner;

namespace {

Corpus parse(const std::string& text, const std::optional<TagSchema>& schema = std::nullopt,
             ConllStats* stats = nullptr) {
  std::istringstream in(text);
  return parse_conll(in, schema, stats);
}

std::string format(const Corpus& c) {
  std::ostringstream out;
  format_conll(c, out);
  return out.str();
}

}  // namespace

TEST_CASE("schema layout: O first, then B/I per type") {
  TagSchema s({"PER", "LOC"});
  CHECK(s.num_tags() == 5);
  CHECK(s.tag_alphabet() == std::vector<std::string>{"O", "B-PER", "I-PER", "B-LOC", "I-LOC"});
  CHECK(s.find_tag("I-LOC") == 4);
  CHECK_FALSE(s.find_tag("B-ORG"));
  CHECK(TagSchema::type_of(TagSchema::inside_tag(1)) == 1);
  CHECK(TagSchema::type_of(kOutsideTag) == -1);
}

TEST_CASE("schema rejects bad names") {
  CHECK_THROWS_AS(TagSchema({"A", "A"}), ArgumentError);
  CHECK_THROWS_AS(TagSchema({"O"}), ArgumentError);
  CHECK_THROWS_AS(TagSchema({"a-b"}), ArgumentError);
  CHECK(TagSchema::induced({"b", "a", "b"}).entity_types() == std::vector<std::string>{"a", "b"});
}

TEST_CASE("parse: tab or single space, blank line splits sentences") {
  const auto c = parse("John\tB-PER\nlives O\n\nParis\tB-LOC\n\n");
  REQUIRE(c.size() == 2);
  CHECK(c.schema.entity_types() == std::vector<std::string>{"LOC", "PER"});
  CHECK(c.sentences[0].tokens == std::vector<std::string>{"John", "lives"});
  CHECK(c.sentences[1].tags[0] == TagSchema::begin_tag(0));
}

TEST_CASE("parse: missing trailing blank line still closes the last sentence") {
  CHECK(parse("a\tO\nb\tO").size() == 1);
}

TEST_CASE("parse: wrong column count reports the line") {
  try {
    parse("a\tO\nb c d\n");
    FAIL("expected ParseError");
  } catch (const ParseError& e) {
    CHECK(e.line() == 2);
  }
}

TEST_CASE("parse: unknown tag against an explicit schema") {
  CHECK_THROWS_AS(parse("a\tB-ORG\n\n", TagSchema({"PER"})), SchemaError);
}

TEST_CASE("parse: DOCSTART lines are skipped and counted") {
  ConllStats stats;
  const auto c = parse("-DOCSTART- O\n\na\tB-X\n\n", std::nullopt, &stats);
  CHECK(stats.docstart_lines == 1);
  CHECK(c.size() == 1);
}

TEST_CASE("parse: invalid I- after O is repaired to B-") {
  ConllStats stats;
  const auto c = parse("a\tO\nb\tI-X\nc\tI-X\nd\tI-Y\n\n", std::nullopt, &stats);
  CHECK(stats.repaired_tags == 2);
  const auto& t = c.sentences[0].tags;
  CHECK(c.schema.tag_name(t[1]) == "B-X");
  CHECK(c.schema.tag_name(t[2]) == "I-X");
  CHECK(c.schema.tag_name(t[3]) == "B-Y");
  CHECK(is_bio_valid(t));
}

TEST_CASE("write: one sentence ends in exactly one blank line; empty corpus writes nothing") {
  const auto c = parse("a\tB-X\nb\tO\n\n");
  CHECK(format(c) == "a\tB-X\nb\tO\n\n");
  Corpus empty;
  CHECK(format(empty).empty());
}

TEST_CASE("round trip is byte-identical on random BIO-valid corpora") {
  Rng rng = make_rng(11);
  for (int i = 0; i < 50; ++i) {
    const auto c = testing::random_corpus(rng, 1 + testing::below(rng, 20), 1 + testing::below(rng, 4));
    const auto text = format(c);
    const auto back = parse(text, c.schema);
    CHECK(back == c);
    CHECK(format(back) == text);
  }
}

TEST_CASE("extract_spans examples") {
  const TagId B = TagSchema::begin_tag(0), I = TagSchema::inside_tag(0);
  CHECK(extract_spans(std::vector<TagId>{B, I, kOutsideTag}) == std::vector<Span>{{0, 0, 2}});
  CHECK(extract_spans(std::vector<TagId>{B, B}) == std::vector<Span>{{0, 0, 1}, {0, 1, 2}});
  CHECK(extract_spans(std::vector<TagId>{0, 0, 0}).empty());
}

TEST_CASE("spans_to_tags inverts extract_spans, adjacent same-type spans keep their boundary") {
  const std::vector<Span> spans{{1, 0, 2}, {1, 2, 3}, {0, 4, 6}};
  const auto tags = spans_to_tags(spans, 7);
  CHECK(extract_spans(tags) == spans);
  Rng rng = make_rng(12);
  for (int i = 0; i < 200; ++i) {
    const auto t = testing::random_bio(rng, 1 + testing::below(rng, 15), 3);
    CHECK(spans_to_tags(extract_spans(t), t.size()) == t);
  }
}

TEST_CASE("read_conll reports the path on failure") {
  try {
    read_conll("/nonexistent/dir/x.conll");
    FAIL("expected IoError");
  } catch (const IoError& e) {
    CHECK(std::string(e.what()).find("/nonexistent/dir/x.conll") != std::string::npos);
  }
}
