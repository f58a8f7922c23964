#include "cofiner/f2c.hpp"

#include <algorithm>
#include <charconv>
#include <fstream>
#include <iomanip>
#include <istream>
#include <numeric>
#include <ostream>
#include <sstream>

#include "cofiner/log.hpp"

namespace cofiner {

std::string topk_name(const TopK& k) { return k ? std::to_string(*k) : "all"; }

TopK parse_topk(const std::string& text) {
  if (text == "all" || text == "ALL") return kTopKAll;
  std::size_t value = 0;
  auto [ptr, ec] = std::from_chars(text.data(), text.data() + text.size(), value);
  if (ec != std::errc() || ptr != text.data() + text.size() || value == 0)
    throw ArgumentError("top-k must be a positive integer or 'all', got '" + text + "'");
  return value;
}

CooccurrenceMatrix count_cooccurrence(const Corpus& fine_corpus,
                                      const std::vector<std::vector<TagId>>& coarse_predictions,
                                      const TagSchema& coarse_schema) {
  if (coarse_predictions.size() != fine_corpus.size())
    throw ArgumentError("coarse predictions cover " + std::to_string(coarse_predictions.size()) +
                        " sentences, fine corpus has " + std::to_string(fine_corpus.size()));
  CooccurrenceMatrix c;
  c.fine = fine_corpus.schema;
  c.coarse = coarse_schema;
  c.counts = Matrix<std::uint64_t>(c.fine.num_types(), c.coarse.num_types() + 1);
  const auto num_coarse_tags = static_cast<TagId>(coarse_schema.num_tags());
  for (std::size_t i = 0; i < fine_corpus.size(); ++i) {
    const auto& gold = fine_corpus.sentences[i].tags;
    const auto& pred = coarse_predictions[i];
    if (pred.size() != gold.size())
      throw ArgumentError("coarse predictions misaligned with sentence " + std::to_string(i));
    for (std::size_t t = 0; t < gold.size(); ++t) {
      const TypeId fine_type = TagSchema::type_of(gold[t]);
      if (fine_type < 0) continue;
      if (pred[t] < 0 || pred[t] >= num_coarse_tags)
        throw ArgumentError("coarse prediction out of range");
      const TypeId coarse_type = TagSchema::type_of(pred[t]);
      const std::size_t col = coarse_type < 0 ? c.o_column() : static_cast<std::size_t>(coarse_type);
      ++c.counts(static_cast<std::size_t>(fine_type), col);
    }
  }
  return c;
}

CooccurrenceMatrix refine_topk(const CooccurrenceMatrix& c, const TopK& k) {
  if (k && *k == 0) throw ArgumentError("top-k must be >= 1");
  CooccurrenceMatrix out = c;
  out.k_applied = k;
  const std::size_t types = c.coarse.num_types();
  std::vector<std::size_t> order(types);
  for (std::size_t r = 0; r < out.counts.rows(); ++r) {
    out.counts(r, c.o_column()) = 0;
    if (!k || *k >= types) continue;
    std::iota(order.begin(), order.end(), std::size_t{0});
    std::stable_sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) {
      return c.counts(r, a) > c.counts(r, b);
    });
    for (std::size_t j = *k; j < types; ++j) out.counts(r, order[j]) = 0;
  }
  return out;
}

Matrix<double> build_tag_level(const Matrix<double>& type_level, const TagSchema& fine,
                               const TagSchema& coarse) {
  if (type_level.rows() != fine.num_types() || type_level.cols() != coarse.num_types())
    throw ArgumentError("type-level matrix shape does not match schemas");
  Matrix<double> tag(fine.num_tags(), coarse.num_tags());
  tag(kOutsideTag, kOutsideTag) = 1.0;
  for (std::size_t l = 0; l < fine.num_types(); ++l)
    for (std::size_t s = 0; s < coarse.num_types(); ++s) {
      const auto fl = static_cast<TypeId>(l);
      const auto cs = static_cast<TypeId>(s);
      tag(static_cast<std::size_t>(TagSchema::begin_tag(fl)),
          static_cast<std::size_t>(TagSchema::begin_tag(cs))) = type_level(l, s);
      tag(static_cast<std::size_t>(TagSchema::inside_tag(fl)),
          static_cast<std::size_t>(TagSchema::inside_tag(cs))) = type_level(l, s);
    }
  return tag;
}

F2CMatrix normalize(const CooccurrenceMatrix& refined) {
  F2CMatrix m;
  m.fine = refined.fine;
  m.coarse = refined.coarse;
  m.k_used = refined.k_applied;
  const std::size_t types = refined.coarse.num_types();
  if (types == 0) throw ArgumentError("coarse schema has no entity types");
  m.type_level = Matrix<double>(refined.fine.num_types(), types);
  for (std::size_t r = 0; r < m.type_level.rows(); ++r) {
    std::uint64_t total = 0;
    for (std::size_t s = 0; s < types; ++s) total += refined.counts(r, s);
    if (total == 0) {
      for (std::size_t s = 0; s < types; ++s) m.type_level(r, s) = 1.0 / static_cast<double>(types);
      m.fallback_rows.push_back(static_cast<TypeId>(r));
      log::warn("F2C row '" + refined.fine.type_name(static_cast<TypeId>(r)) +
                "' has no coarse co-occurrences; using uniform row");
      continue;
    }
    for (std::size_t s = 0; s < types; ++s)
      m.type_level(r, s) =
          static_cast<double>(refined.counts(r, s)) / static_cast<double>(total);
  }
  m.tag_level = build_tag_level(m.type_level, m.fine, m.coarse);
  return m;
}

F2CMatrix identity_f2c(const TagSchema& schema) {
  F2CMatrix m;
  m.fine = schema;
  m.coarse = schema;
  m.type_level = Matrix<double>(schema.num_types(), schema.num_types());
  for (std::size_t i = 0; i < schema.num_types(); ++i) m.type_level(i, i) = 1.0;
  m.tag_level = build_tag_level(m.type_level, schema, schema);
  m.provenance = "identity";
  return m;
}

void write_matrix_tsv(const F2CMatrix& m, std::ostream& out) {
  out << "fine";
  for (const auto& name : m.coarse.entity_types()) out << '\t' << name;
  out << '\n';
  out << std::fixed << std::setprecision(9);
  for (std::size_t r = 0; r < m.type_level.rows(); ++r) {
    out << m.fine.type_name(static_cast<TypeId>(r));
    for (std::size_t c = 0; c < m.type_level.cols(); ++c) out << '\t' << m.type_level(r, c);
    out << '\n';
  }
}

void write_matrix_tsv(const F2CMatrix& m, const std::filesystem::path& path) {
  std::ofstream out(path, std::ios::trunc);
  if (!out) throw IoError("cannot open " + path.string() + " for writing");
  write_matrix_tsv(m, out);
  if (!out) throw IoError("write failed: " + path.string());
}

F2CMatrix read_matrix_tsv(std::istream& in, const TagSchema& fine, const TagSchema& coarse) {
  F2CMatrix m;
  m.fine = fine;
  m.coarse = coarse;
  m.type_level = Matrix<double>(fine.num_types(), coarse.num_types());
  std::string line;
  if (!std::getline(in, line)) throw ParseError("empty matrix file");
  {
    std::istringstream header(line);
    std::string cell;
    std::getline(header, cell, '\t');
    std::size_t c = 0;
    while (std::getline(header, cell, '\t')) {
      if (c >= coarse.num_types() || cell != coarse.type_name(static_cast<TypeId>(c)))
        throw ParseError("matrix header does not match coarse schema", 1);
      ++c;
    }
    if (c != coarse.num_types()) throw ParseError("matrix header does not match coarse schema", 1);
  }
  std::size_t row = 0;
  std::size_t line_no = 1;
  while (std::getline(in, line)) {
    ++line_no;
    if (line.empty()) continue;
    std::istringstream cells(line);
    std::string name;
    std::getline(cells, name, '\t');
    if (row >= fine.num_types() || name != fine.type_name(static_cast<TypeId>(row)))
      throw ParseError("unexpected fine type '" + name + "'", line_no);
    for (std::size_t c = 0; c < coarse.num_types(); ++c) {
      std::string cell;
      if (!std::getline(cells, cell, '\t')) throw ParseError("missing matrix cell", line_no);
      m.type_level(row, c) = std::stod(cell);
    }
    ++row;
  }
  if (row != fine.num_types()) throw ParseError("matrix has too few rows");
  m.tag_level = build_tag_level(m.type_level, fine, coarse);
  return m;
}

}  // namespace cofiner
