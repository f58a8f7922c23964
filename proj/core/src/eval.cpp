#include "cofiner/eval.hpp"

#include <algorithm>
#include <fstream>
#include <iomanip>
#include <ostream>

#include "cofiner/filtering.hpp"

namespace cofiner {

double f1_score(double precision, double recall) {
  return precision + recall > 0.0 ? 2.0 * precision * recall / (precision + recall) : 0.0;
}

namespace {

void finish(TypeScore& s) {
  s.precision = s.predicted ? static_cast<double>(s.correct) / static_cast<double>(s.predicted) : 0.0;
  s.recall = s.gold ? static_cast<double>(s.correct) / static_cast<double>(s.gold) : 0.0;
  s.f1 = f1_score(s.precision, s.recall);
}

}  // namespace

EvalReport score_spans(const std::vector<std::vector<Span>>& gold,
                       const std::vector<std::vector<Span>>& predicted, const TagSchema& schema) {
  if (gold.size() != predicted.size())
    throw ArgumentError("gold and predicted span lists cover different sentence counts");
  EvalReport r;
  r.schema = schema;
  r.sentences = gold.size();
  r.per_type.resize(schema.num_types());
  for (std::size_t k = 0; k < schema.num_types(); ++k)
    r.per_type[k].name = schema.type_name(static_cast<TypeId>(k));
  auto slot = [&](const Span& s) -> TypeScore& {
    if (s.entity_type < 0 || static_cast<std::size_t>(s.entity_type) >= r.per_type.size())
      throw ArgumentError("span type outside schema");
    return r.per_type[static_cast<std::size_t>(s.entity_type)];
  };
  std::vector<Span> g;
  std::vector<Span> p;
  for (std::size_t i = 0; i < gold.size(); ++i) {
    g = gold[i];
    p = predicted[i];
    std::sort(g.begin(), g.end());
    std::sort(p.begin(), p.end());
    g.erase(std::unique(g.begin(), g.end()), g.end());
    p.erase(std::unique(p.begin(), p.end()), p.end());
    for (const auto& s : g) ++slot(s).gold;
    for (const auto& s : p) ++slot(s).predicted;
    auto gi = g.begin();
    auto pi = p.begin();
    while (gi != g.end() && pi != p.end()) {
      if (*gi < *pi) {
        ++gi;
      } else if (*pi < *gi) {
        ++pi;
      } else {
        ++slot(*gi).correct;
        ++gi;
        ++pi;
      }
    }
  }
  for (auto& t : r.per_type) {
    finish(t);
    r.gold += t.gold;
    r.predicted += t.predicted;
    r.correct += t.correct;
  }
  TypeScore micro{"micro", r.gold, r.predicted, r.correct};
  finish(micro);
  r.precision = micro.precision;
  r.recall = micro.recall;
  r.f1 = micro.f1;
  return r;
}

std::vector<TagId> predict_tags(const TokenClassifier& model, const TaggedSentence& sentence) {
  const Matrix<float> probs = predict_probs(model, featurize(sentence, model.config()));
  std::vector<TagId> tags(probs.rows());
  for (std::size_t i = 0; i < probs.rows(); ++i)
    tags[i] = static_cast<TagId>(argmax(probs.row(i)));
  repair_bio(tags);
  return tags;
}

std::vector<TagId> predict_tags(const TokenClassifier& model, const F2CMatrix& m,
                                const TaggedSentence& sentence) {
  auto tags = predict_coarse(model, m, sentence);
  repair_bio(tags);
  return tags;
}

EvalReport evaluate(const TokenClassifier& model, const F2CMatrix* m, const Corpus& corpus) {
  const std::size_t head = model.config().num_tags;
  if (m) {
    if (m->tag_level.rows() != head)
      throw ArgumentError("F2C matrix does not match the model head");
    if (!(m->coarse == corpus.schema))
      throw ArgumentError("F2C matrix coarse schema does not match the corpus");
  } else if (corpus.schema.num_tags() != head) {
    throw ArgumentError("model head has " + std::to_string(head) + " tags but corpus schema has " +
                        std::to_string(corpus.schema.num_tags()) + "; supply an F2C matrix");
  }
  std::vector<std::vector<Span>> gold;
  std::vector<std::vector<Span>> pred;
  gold.reserve(corpus.size());
  pred.reserve(corpus.size());
  for (const auto& s : corpus.sentences) {
    gold.push_back(extract_spans(s.tags));
    pred.push_back(extract_spans(m ? predict_tags(model, *m, s) : predict_tags(model, s)));
  }
  return score_spans(gold, pred, corpus.schema);
}

void print_report(const EvalReport& r, std::ostream& out) {
  out << std::left << std::setw(20) << "type" << std::right << std::setw(8) << "gold"
      << std::setw(8) << "pred" << std::setw(8) << "correct" << std::setw(10) << "P"
      << std::setw(10) << "R" << std::setw(10) << "F1" << '\n';
  out << std::fixed << std::setprecision(4);
  auto line = [&](const std::string& name, std::size_t g, std::size_t p, std::size_t c, double pr,
                  double re, double f) {
    out << std::left << std::setw(20) << name << std::right << std::setw(8) << g << std::setw(8)
        << p << std::setw(8) << c << std::setw(10) << pr << std::setw(10) << re << std::setw(10)
        << f << '\n';
  };
  for (const auto& t : r.per_type)
    line(t.name, t.gold, t.predicted, t.correct, t.precision, t.recall, t.f1);
  line("micro", r.gold, r.predicted, r.correct, r.precision, r.recall, r.f1);
}

void write_report_tsv(const EvalReport& r, std::ostream& out) {
  out << "type\tgold\tpredicted\tcorrect\tprecision\trecall\tf1\n";
  out << std::fixed << std::setprecision(6);
  for (const auto& t : r.per_type)
    out << t.name << '\t' << t.gold << '\t' << t.predicted << '\t' << t.correct << '\t'
        << t.precision << '\t' << t.recall << '\t' << t.f1 << '\n';
  out << "micro\t" << r.gold << '\t' << r.predicted << '\t' << r.correct << '\t' << r.precision
      << '\t' << r.recall << '\t' << r.f1 << '\n';
}

void write_report_tsv(const EvalReport& r, const std::filesystem::path& path) {
  std::ofstream out(path, std::ios::trunc);
  if (!out) throw IoError("cannot open " + path.string() + " for writing");
  write_report_tsv(r, out);
}

}  // namespace cofiner
