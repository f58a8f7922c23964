#pragma once

#include <cstddef>
#include <filesystem>
#include <iosfwd>
#include <string>
#include <vector>

#include "cofiner/corpus.hpp"
#include "cofiner/f2c.hpp"
#include "cofiner/model.hpp"

namespace cofiner {

struct TypeScore {
  std::string name;
  std::size_t gold = 0;
  std::size_t predicted = 0;
  std::size_t correct = 0;
  double precision = 0.0;
  double recall = 0.0;
  double f1 = 0.0;
};

// Span-level micro scores; a predicted span counts only on an exact (type, start, end) match.
struct EvalReport {
  double precision = 0.0;
  double recall = 0.0;
  double f1 = 0.0;
  std::size_t gold = 0;
  std::size_t predicted = 0;
  std::size_t correct = 0;
  std::size_t sentences = 0;
  std::vector<TypeScore> per_type;
  TagSchema schema;
};

double f1_score(double precision, double recall);

EvalReport score_spans(const std::vector<std::vector<Span>>& gold,
                       const std::vector<std::vector<Span>>& predicted, const TagSchema& schema);

// Argmax tags, BIO-repaired. The second form decodes through p^F · M (coarse tags).
std::vector<TagId> predict_tags(const TokenClassifier& model, const TaggedSentence& sentence);
std::vector<TagId> predict_tags(const TokenClassifier& model, const F2CMatrix& m,
                                const TaggedSentence& sentence);

// Scores `model` on `corpus`. Pass an F2C matrix when the corpus is labeled with a
// coarse schema; otherwise the model head must match the corpus schema.
EvalReport evaluate(const TokenClassifier& model, const F2CMatrix* m, const Corpus& corpus);

void print_report(const EvalReport& report, std::ostream& out);
// Columns: type, gold, predicted, correct, precision, recall, f1; last row "micro".
void write_report_tsv(const EvalReport& report, std::ostream& out);
void write_report_tsv(const EvalReport& report, const std::filesystem::path& path);

}  // namespace cofiner
