#include "cofiner/experiments.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <exception>
#include <iomanip>
#include <map>
#include <mutex>
#include <ostream>
#include <sstream>
#include <thread>

#include "cofiner/log.hpp"
#include "cofiner/sampler.hpp"

namespace cofiner {

void parallel_for(std::size_t count, std::size_t jobs, const std::function<void(std::size_t)>& fn) {
  jobs = std::clamp<std::size_t>(jobs, 1, std::max<std::size_t>(count, 1));
  if (jobs == 1) {
    for (std::size_t i = 0; i < count; ++i) fn(i);
    return;
  }
  std::atomic<std::size_t> next{0};
  std::vector<std::exception_ptr> errors(count);
  std::vector<std::thread> workers;
  for (std::size_t j = 0; j < jobs; ++j)
    workers.emplace_back([&] {
      for (std::size_t i = next++; i < count; i = next++) {
        try {
          fn(i);
        } catch (...) {
          errors[i] = std::current_exception();
        }
      }
    });
  for (auto& w : workers) w.join();
  for (auto& e : errors)
    if (e) std::rethrow_exception(e);
}

namespace {

KShotCurve::Summary summarize(const std::vector<double>& xs) {
  KShotCurve::Summary s;
  if (xs.empty()) return s;
  for (double x : xs) s.mean += x;
  s.mean /= static_cast<double>(xs.size());
  if (xs.size() > 1) {
    double ss = 0.0;
    for (double x : xs) ss += (x - s.mean) * (x - s.mean);
    s.stdev = std::sqrt(ss / static_cast<double>(xs.size() - 1));
  }
  return s;
}

double score(const TokenClassifier& model, const TrainPlan& plan) {
  if (plan.test) return evaluate(model, nullptr, *plan.test).f1;
  const auto splits = split_fine(plan);
  return splits.dev.empty() ? 0.0 : evaluate(model, nullptr, splits.dev).f1;
}

std::string cell(const KShotCurve::Summary& s) {
  std::ostringstream o;
  o << std::fixed << std::setprecision(3) << 100.0 * s.mean << " ± " << 100.0 * s.stdev;
  return o.str();
}

}  // namespace

KShotCurve::Summary KShotCurve::cofiner(std::size_t k) const {
  std::vector<double> xs;
  for (const auto& c : cells)
    if (c.k == k) xs.push_back(c.cofiner_f1);
  return summarize(xs);
}

KShotCurve::Summary KShotCurve::baseline(std::size_t k) const {
  std::vector<double> xs;
  for (const auto& c : cells)
    if (c.k == k) xs.push_back(c.baseline_f1);
  return summarize(xs);
}

std::optional<double> reference_kshot_f1(std::size_t k) {
  static const std::map<std::size_t, double> table = {
      {10, 44.951}, {20, 51.142}, {40, 56.409}, {80, 56.847}, {100, 57.178}};
  const auto it = table.find(k);
  if (it == table.end()) return std::nullopt;
  return it->second;
}

KShotCurve kshot_curve(const TrainPlan& base, const Corpus& pool, const std::vector<std::size_t>& ks,
                       const std::vector<std::uint64_t>& seeds, std::size_t jobs) {
  if (ks.empty() || seeds.empty()) throw ArgumentError("kshot_curve needs at least one K and one seed");
  KShotCurve curve;
  curve.ks = ks;
  curve.cells.resize(ks.size() * seeds.size());
  parallel_for(curve.cells.size(), jobs, [&](std::size_t i) {
    const std::size_t k = ks[i / seeds.size()];
    const std::uint64_t seed = seeds[i % seeds.size()];
    auto sample = sample_kshot(pool, k, seed);
    TrainPlan plan = base;
    plan.fine = std::move(sample.corpus);
    plan.fine.name = pool.name + ".k" + std::to_string(k);
    plan.seed = seed;
    plan.no_coarse = false;
    KShotCell& c = curve.cells[i];
    c.k = k;
    c.seed = seed;
    c.sampled_sentences = plan.fine.size();
    c.cofiner_f1 = score(run_pipeline(plan).final_model, plan);
    TrainPlan fine_only = plan;
    fine_only.no_coarse = true;
    c.baseline_f1 = score(run_pipeline(fine_only).final_model, fine_only);
    log::info("kshot k=" + std::to_string(k) + " seed=" + std::to_string(seed) + " done");
  });
  return curve;
}

void write_kshot_tsv(const KShotCurve& curve, std::ostream& out) {
  out << "method";
  for (auto k : curve.ks) out << '\t' << k << "-shot";
  out << '\n';
  out << "CoFiNER";
  for (auto k : curve.ks) out << '\t' << cell(curve.cofiner(k));
  out << '\n';
  out << "fine-only";
  for (auto k : curve.ks) out << '\t' << cell(curve.baseline(k));
  out << '\n';
  out << "reference:CoFiNER[NOT-REPRODUCIBLE-AT-DESK-SCALE]";
  for (auto k : curve.ks) {
    out << '\t';
    if (auto r = reference_kshot_f1(k)) out << std::fixed << std::setprecision(3) << *r;
    else out << "n/a";
  }
  out << '\n';
}

void write_kshot_cells_tsv(const KShotCurve& curve, std::ostream& out) {
  out << "k\tseed\tsentences\tcofiner_f1\tbaseline_f1\n";
  out << std::fixed << std::setprecision(6);
  for (const auto& c : curve.cells)
    out << c.k << '\t' << c.seed << '\t' << c.sampled_sentences << '\t' << c.cofiner_f1 << '\t'
        << c.baseline_f1 << '\n';
}

std::vector<TopKPoint> topk_sweep(const TrainPlan& base, const std::vector<TopK>& ks) {
  base.validate();
  if (ks.empty()) throw ArgumentError("topk_sweep needs at least one k");
  if (base.coarse.empty() || base.no_coarse) throw ArgumentError("topk_sweep needs coarse corpora");
  const TrainingContext step1 = train_fine(base);
  const FineSplits splits = split_fine(base);
  std::vector<TokenClassifier> coarse_models;
  for (std::size_t i = 0; i < base.coarse.size(); ++i) coarse_models.push_back(train_coarse_model(base, i));

  std::vector<TopKPoint> points;
  for (const auto& k : ks) {
    TrainPlan plan = base;
    plan.topk = k;
    std::vector<CoarseArtifacts> coarse;
    for (std::size_t i = 0; i < base.coarse.size(); ++i) {
      CoarseArtifacts a;
      a.name = base.coarse[i].name;
      a.corpus_index = i;
      a.matrix = build_matrix_step(coarse_models[i], splits.train, base.coarse[i].schema, k);
      a.mask = plan.no_filtering ? ConsistencyMask::all_true(base.coarse[i])
                                 : build_mask(step1.model, a.matrix, base.coarse[i]);
      coarse.push_back(std::move(a));
    }
    const TrainingContext ctx = train_joint(plan, step1, coarse);
    const Corpus& scored = base.test ? *base.test : splits.dev;
    TopKPoint p;
    p.k = k;
    p.seed = base.seed;
    if (!scored.empty()) {
      const auto rep = evaluate(ctx.model, nullptr, scored);
      p.f1 = rep.f1;
      p.precision = rep.precision;
      p.recall = rep.recall;
    }
    points.push_back(p);
  }
  return points;
}

void write_topk_tsv(const std::vector<TopKPoint>& points, std::ostream& out) {
  out << "k\tseed\tf1\tprecision\trecall\n";
  out << std::fixed << std::setprecision(6);
  for (const auto& p : points)
    out << topk_name(p.k) << '\t' << p.seed << '\t' << p.f1 << '\t' << p.precision << '\t' << p.recall
        << '\n';
}

}  // namespace cofiner
