#pragma once

#include <cstddef>
#include <cstdint>
#include <functional>
#include <iosfwd>
#include <optional>
#include <string>
#include <vector>

#include "cofiner/f2c.hpp"
#include "cofiner/trainer.hpp"

namespace cofiner {

// Runs fn(0..count-1) on up to `jobs` threads. Exceptions are rethrown (first by index).
void parallel_for(std::size_t count, std::size_t jobs, const std::function<void(std::size_t)>& fn);

struct KShotCell {
  std::size_t k = 0;
  std::uint64_t seed = 0;
  double cofiner_f1 = 0.0;   // span F1 in [0, 1]
  double baseline_f1 = 0.0;  // fine-only (no coarse data)
  std::size_t sampled_sentences = 0;
};

struct KShotCurve {
  std::vector<std::size_t> ks;
  std::vector<KShotCell> cells;

  struct Summary {
    double mean = 0.0;
    double stdev = 0.0;  // sample stdev, 0 for a single seed
  };
  Summary cofiner(std::size_t k) const;
  Summary baseline(std::size_t k) const;
};

// Published 10/20/40/80/100-shot CoFiNER scores, carried as annotations only.
std::optional<double> reference_kshot_f1(std::size_t k);

// For each K and seed: sample the pool, run the full pipeline and a fine-only run,
// and score on plan.test (or the held-out dev split when there is no test corpus).
// `base.fine` is ignored; the sampled corpus replaces it.
KShotCurve kshot_curve(const TrainPlan& base, const Corpus& pool, const std::vector<std::size_t>& ks,
                       const std::vector<std::uint64_t>& seeds, std::size_t jobs = 1);

// Table-shaped TSV: one row per method, one "<K>-shot" column per K, cells "mean ± stdev"
// in F1 points. A reference row is appended with a NOT-REPRODUCIBLE-AT-DESK-SCALE marker.
void write_kshot_tsv(const KShotCurve& curve, std::ostream& out);
// One row per (k, seed).
void write_kshot_cells_tsv(const KShotCurve& curve, std::ostream& out);

struct TopKPoint {
  TopK k;
  std::uint64_t seed = 0;
  double f1 = 0.0;
  double precision = 0.0;
  double recall = 0.0;
};

// Varies only refine_topk's k. The Step 1 model and the coarse models are trained once
// and shared by every k.
std::vector<TopKPoint> topk_sweep(const TrainPlan& base, const std::vector<TopK>& ks);
void write_topk_tsv(const std::vector<TopKPoint>& points, std::ostream& out);

}  // namespace cofiner
