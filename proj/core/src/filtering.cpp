#include "cofiner/filtering.hpp"

#include <fstream>
#include <iomanip>
#include <ostream>

namespace cofiner {

ConsistencyMask ConsistencyMask::all_true(const Corpus& corpus) {
  ConsistencyMask m;
  for (const auto& s : corpus.sentences) m.keep.emplace_back(s.size(), 1);
  summarize_mask(m, corpus);
  return m;
}

ConsistencyMask ConsistencyMask::all_false(const Corpus& corpus) {
  ConsistencyMask m;
  for (const auto& s : corpus.sentences) m.keep.emplace_back(s.size(), 0);
  summarize_mask(m, corpus);
  return m;
}

std::vector<TagId> predict_coarse(const TokenClassifier& model, const Matrix<double>& m_tag,
                                  const SentenceFeatures& features) {
  if (m_tag.rows() != model.config().num_tags)
    throw ArgumentError("F2C matrix rows do not match the model's tag count");
  const Matrix<float> probs = predict_probs(model, features);
  const std::size_t nf = m_tag.rows();
  const std::size_t nc = m_tag.cols();
  std::vector<TagId> out(probs.rows());
  std::vector<double> pc(nc);
  for (std::size_t i = 0; i < probs.rows(); ++i) {
    std::fill(pc.begin(), pc.end(), 0.0);
    for (std::size_t l = 0; l < nf; ++l) {
      const double p = probs(i, l);
      for (std::size_t s = 0; s < nc; ++s) pc[s] += p * m_tag(l, s);
    }
    out[i] = static_cast<TagId>(argmax(std::span<const double>(pc)));
  }
  return out;
}

std::vector<TagId> predict_coarse(const TokenClassifier& model, const F2CMatrix& m,
                                  const TaggedSentence& sentence) {
  return predict_coarse(model, m.tag_level, featurize(sentence, model.config()));
}

void summarize_mask(ConsistencyMask& mask, const Corpus& corpus) {
  if (mask.keep.size() != corpus.size()) throw ArgumentError("mask does not cover the corpus");
  mask.total_tokens = 0;
  mask.masked_tokens = 0;
  const std::size_t types = corpus.schema.num_types();
  std::vector<std::size_t> tokens(types, 0);
  std::vector<std::size_t> masked(types, 0);
  for (std::size_t i = 0; i < corpus.size(); ++i) {
    const auto& tags = corpus.sentences[i].tags;
    if (mask.keep[i].size() != tags.size())
      throw ArgumentError("mask misaligned with sentence " + std::to_string(i));
    for (std::size_t t = 0; t < tags.size(); ++t) {
      ++mask.total_tokens;
      const bool dropped = mask.keep[i][t] == 0;
      if (dropped) ++mask.masked_tokens;
      const TypeId type = TagSchema::type_of(tags[t]);
      if (type >= 0) {
        ++tokens[static_cast<std::size_t>(type)];
        if (dropped) ++masked[static_cast<std::size_t>(type)];
      }
    }
  }
  mask.masked_fraction_by_type.assign(types, 0.0);
  for (std::size_t k = 0; k < types; ++k)
    if (tokens[k] > 0)
      mask.masked_fraction_by_type[k] = static_cast<double>(masked[k]) / static_cast<double>(tokens[k]);
}

ConsistencyMask build_mask(const TokenClassifier& model, const F2CMatrix& m,
                           const Corpus& coarse_corpus) {
  if (!(m.coarse == coarse_corpus.schema))
    throw ArgumentError("F2C matrix coarse schema does not match the corpus");
  ConsistencyMask mask;
  mask.keep.reserve(coarse_corpus.size());
  for (const auto& s : coarse_corpus.sentences) {
    const auto pred = predict_coarse(model, m.tag_level, featurize(s, model.config()));
    std::vector<std::uint8_t> keep(s.size());
    for (std::size_t t = 0; t < s.size(); ++t) keep[t] = pred[t] == s.tags[t] ? 1 : 0;
    mask.keep.push_back(std::move(keep));
  }
  summarize_mask(mask, coarse_corpus);
  return mask;
}

std::vector<FilterRow> filtering_report(const ConsistencyMask& mask, const Corpus& corpus) {
  if (mask.keep.size() != corpus.size()) throw ArgumentError("mask does not cover the corpus");
  std::vector<FilterRow> rows(corpus.schema.num_types());
  for (std::size_t k = 0; k < rows.size(); ++k)
    rows[k].coarse_type = corpus.schema.type_name(static_cast<TypeId>(k));
  for (std::size_t i = 0; i < corpus.size(); ++i) {
    const auto& tags = corpus.sentences[i].tags;
    if (mask.keep[i].size() != tags.size())
      throw ArgumentError("mask misaligned with sentence " + std::to_string(i));
    for (std::size_t t = 0; t < tags.size(); ++t) {
      const TypeId type = TagSchema::type_of(tags[t]);
      if (type < 0) continue;
      auto& row = rows[static_cast<std::size_t>(type)];
      ++row.tokens;
      if (!mask.keep[i][t]) ++row.filtered;
    }
  }
  for (auto& row : rows)
    row.proportion =
        row.tokens == 0 ? 0.0 : static_cast<double>(row.filtered) / static_cast<double>(row.tokens);
  return rows;
}

void write_filtering_report(const std::vector<FilterRow>& rows, std::ostream& out) {
  out << "coarse_type\ttokens\tfiltered\tproportion\tdelta_f1\n";
  out << std::fixed << std::setprecision(6);
  for (const auto& r : rows)
    out << r.coarse_type << '\t' << r.tokens << '\t' << r.filtered << '\t' << r.proportion << "\t\n";
}

void write_mask_cache(const ConsistencyMask& mask, const std::string& checkpoint_hex,
                      const std::string& provenance, const std::filesystem::path& path) {
  std::ofstream out(path, std::ios::trunc);
  if (!out) throw IoError("cannot open " + path.string() + " for writing");
  out << "# checkpoint=" << checkpoint_hex << " matrix=" << provenance << '\n';
  for (const auto& sentence : mask.keep) {
    for (auto k : sentence) out << (k ? '1' : '0');
    out << '\n';
  }
  if (!out) throw IoError("write failed: " + path.string());
}

ConsistencyMask read_mask_cache(const std::filesystem::path& path, const Corpus& corpus,
                                std::string* header) {
  std::ifstream in(path);
  if (!in) throw IoError("cannot open " + path.string());
  std::string line;
  if (!std::getline(in, line) || line.rfind("# ", 0) != 0)
    throw ParseError("mask cache missing header", 1);
  if (header) *header = line.substr(2);
  ConsistencyMask mask;
  std::size_t line_no = 1;
  while (std::getline(in, line)) {
    ++line_no;
    std::vector<std::uint8_t> keep;
    keep.reserve(line.size());
    for (char c : line) {
      if (c != '0' && c != '1') throw ParseError("mask cache expects only 0/1", line_no);
      keep.push_back(c == '1' ? 1 : 0);
    }
    mask.keep.push_back(std::move(keep));
  }
  summarize_mask(mask, corpus);
  return mask;
}

}  // namespace cofiner
