#pragma once

#include <cstddef>
#include <cstdint>
#include <iosfwd>
#include <optional>
#include <string>
#include <vector>

#include "cofiner/config.hpp"
#include "cofiner/corpus.hpp"
#include "cofiner/eval.hpp"
#include "cofiner/f2c.hpp"
#include "cofiner/filtering.hpp"
#include "cofiner/losses.hpp"
#include "cofiner/model.hpp"
#include "cofiner/optimizer.hpp"

namespace cofiner {

struct EpochPlan {
  std::size_t coarse_model = 20;  // coarse reannotation model
  std::size_t fine = 30;          // step 1
  std::size_t joint = 30;         // step 4

  friend bool operator==(const EpochPlan&, const EpochPlan&) = default;
};

struct TrainPlan {
  Corpus fine;
  std::vector<Corpus> coarse;
  std::optional<Corpus> dev;   // when absent, dev_fraction of `fine` is held out
  std::optional<Corpus> test;  // scored at the end when present

  ModelConfig model;  // num_tags is taken from the schema being trained
  AdamWConfig optimizer;
  EpochPlan epochs;
  std::size_t batch_size = 16;
  std::uint64_t seed = 0;
  double dev_fraction = 0.1;

  bool no_filtering = false;
  bool no_coarse = false;
  bool learnable_matrix = false;
  bool fine_first = false;
  bool reset_optimizer = false;
  bool refilter_every_epoch = false;
  CoarseNormalization coarse_normalization = CoarseNormalization::kAllTokens;
  TopK topk = 1;

  // Throws ArgumentError when the plan cannot run.
  void validate() const;
  // Stable hash over corpora, hyperparameters and flags. The seed is left out so that
  // replicate runs of one configuration share a hash.
  std::uint64_t hash() const;

  // Applies config keys (model.*, optim.*, epochs.*, train.*, mode.*); unknown keys are ignored.
  void apply(const KeyValueConfig& config);
};

struct MetricRow {
  std::string stage;   // fine, coarse_model, joint_fine, joint_coarse
  std::size_t epoch = 0;
  std::string corpus;
  double loss = 0.0;
  std::optional<double> dev_f1;
  std::size_t steps = 0;
  std::size_t skipped_batches = 0;  // batches with no surviving tokens, no optimizer step
};

void write_metric_log(const std::vector<MetricRow>& rows, std::ostream& out);

// Model plus optimizer state: the single-writer training context.
struct TrainingContext {
  TokenClassifier model;
  OptimizerState optimizer;
  std::size_t fine_epochs_done = 0;  // global fine-pass index (selects the RNG stream)
};

struct FineSplits {
  Corpus train;
  Corpus dev;
};
FineSplits split_fine(const TrainPlan& plan);

// Step 1: fine-only training for plan.epochs.fine epochs.
TrainingContext train_fine(const TrainPlan& plan, std::vector<MetricRow>* log = nullptr);

// Coarse reannotation model for plan.coarse[index], trained with plain cross-entropy.
TokenClassifier train_coarse_model(const TrainPlan& plan, std::size_t index,
                                   std::vector<MetricRow>* log = nullptr);

// Step 2: reannotate the fine corpus with the coarse model and build M.
F2CMatrix build_matrix_step(const TokenClassifier& coarse_model, const Corpus& fine_corpus,
                            const TagSchema& coarse_schema, const TopK& k);

struct CoarseArtifacts {
  std::string name;
  std::size_t corpus_index = 0;  // into TrainPlan::coarse
  std::optional<TokenClassifier> coarse_model;
  F2CMatrix matrix;
  ConsistencyMask mask;
};

// Step 4: alternating epochs, continuing from `ctx` (usually the Step 1 context).
TrainingContext train_joint(const TrainPlan& plan, TrainingContext ctx,
                            std::vector<CoarseArtifacts>& coarse,
                            std::vector<MetricRow>* log = nullptr);

struct RunArtifacts {
  std::uint64_t plan_hash = 0;
  std::uint64_t seed = 0;
  TokenClassifier step1;
  TokenClassifier final_model;
  std::vector<CoarseArtifacts> coarse;
  std::vector<MetricRow> log;
  std::optional<EvalReport> dev_report;
  std::optional<EvalReport> test_report;
};

// Steps 1-4 according to the plan's mode flags.
RunArtifacts run_pipeline(const TrainPlan& plan);

// Steps 2-3 for every coarse corpus, given the Step 1 model.
std::vector<CoarseArtifacts> prepare_coarse(const TrainPlan& plan, const TokenClassifier& step1,
                                            std::vector<MetricRow>* log = nullptr);

struct AblationRow {
  std::string variant;
  double dev_f1 = 0.0;
  double test_f1 = 0.0;
  double precision = 0.0;
  double recall = 0.0;
};

struct AblationTable {
  std::vector<AblationRow> rows;
  std::size_t step1_cache_hits = 0;
};

// Variants: full, no_filtering, no_coarse and (with several coarse corpora) one
// "without <corpus>" row per corpus. All share the Step 1 model and coarse models.
AblationTable run_ablation(const TrainPlan& plan);
void write_ablation_tsv(const AblationTable& table, std::ostream& out);

}  // namespace cofiner
