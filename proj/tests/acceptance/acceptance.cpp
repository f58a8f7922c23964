// Acceptance suite: one PASS/FAIL line per criterion. `--only N` runs a single one.

#include <chrono>
#include <cmath>
#include <cstdio>
#include <cstring>
#include <functional>
#include <set>
#include <sstream>
#include <string>
#include <vector>

#include "CLI11.hpp"
#include "cofiner/checkpoint.hpp"
#include "cofiner/corpus.hpp"
#include "cofiner/eval.hpp"
#include "cofiner/experiments.hpp"
#include "cofiner/f2c.hpp"
#include "cofiner/filtering.hpp"
#include "cofiner/log.hpp"
#include "cofiner/losses.hpp"
#include "cofiner/sampler.hpp"
#include "cofiner/synthetic.hpp"
#include "cofiner/trainer.hpp"
#include "oracles.hpp"

using namespace cofiner;
namespace ct = cofiner::testing;

namespace {

struct Outcome {
  bool pass = false;
  std::string detail;
};

struct Criterion {
  int id;
  const char* name;
  double budget_s;  // 0 = no runtime bound
  std::function<Outcome()> run;
};

std::string fmt(const char* f, double a) {
  char buf[128];
  std::snprintf(buf, sizeof buf, f, a);
  return buf;
}

// ---------------------------------------------------------------- 1
Outcome gradient_correctness() {
  Rng rng = make_rng(20240601, {1});
  double worst_fine = 0, worst_fixed = 0, worst_logits = 0, worst_2pt = 0;
  std::size_t checked = 0, kinks = 0;
  for (int inst = 0; inst < 200; ++inst) {
    const std::size_t fine_types = 2 + ct::below(rng, 3);
    const std::size_t coarse_types = 1 + ct::below(rng, fine_types - 1);
    const TagSchema fine = ct::numbered_schema("f", fine_types);
    const TagSchema coarse = ct::numbered_schema("c", coarse_types);
    auto model = ct::small_model(rng, fine.num_tags());
    const auto feats = ct::random_features(rng, model.config(), 1 + ct::below(rng, 5));
    const std::size_t n = feats.num_tokens;

    std::vector<TagId> gold_f(n), gold_c(n);
    std::vector<std::uint8_t> mask(n);
    for (std::size_t i = 0; i < n; ++i) {
      gold_f[i] = static_cast<TagId>(ct::below(rng, fine.num_tags()));
      gold_c[i] = static_cast<TagId>(ct::below(rng, coarse.num_tags()));
      mask[i] = ct::uniform(rng) < 0.7;
    }
    mask[0] = 1;
    const auto norm = inst % 2 ? CoarseNormalization::kSurviving : CoarseNormalization::kAllTokens;

    // fine loss
    {
      model.zero_grad();
      const auto cache = forward_cached(model, feats);
      const auto l = fine_loss(cache.out.probs, std::span<const TagId>(gold_f));
      backward(model, cache, l.grad_probs);
      const auto g = ct::check_model_gradients(
          model, feats,
          [&](const BasicTokenClassifier<double>& m) {
            return fine_loss(predict_probs(m, feats), std::span<const TagId>(gold_f)).loss;
          },
          ct::grads_of(model));
      worst_fine = std::max(worst_fine, g.max_rel_error);
      worst_2pt = std::max(worst_2pt, g.max_rel_error_2pt);
      checked += g.checked;
      kinks += g.skipped_kinks;
    }
    // coarse loss through a fixed M
    F2CMatrix m0;
    m0.fine = fine;
    m0.coarse = coarse;
    m0.type_level = ct::random_stochastic(rng, fine_types, coarse_types);
    m0.tag_level = build_tag_level(m0.type_level, fine, coarse);
    {
      model.zero_grad();
      const auto cache = forward_cached(model, feats);
      const auto l = coarse_loss(cache.out.probs, m0.tag_level, std::span<const TagId>(gold_c),
                                 std::span<const std::uint8_t>(mask), norm);
      backward(model, cache, l.grad_probs);
      const auto g = ct::check_model_gradients(
          model, feats,
          [&](const BasicTokenClassifier<double>& m) {
            return coarse_loss(predict_probs(m, feats), m0.tag_level, std::span<const TagId>(gold_c),
                               std::span<const std::uint8_t>(mask), norm)
                .loss;
          },
          ct::grads_of(model));
      worst_fixed = std::max(worst_fixed, g.max_rel_error);
      worst_2pt = std::max(worst_2pt, g.max_rel_error_2pt);
      checked += g.checked;
      kinks += g.skipped_kinks;
    }
    // learnable-M logits
    {
      LearnableF2C<double> lm(m0, true);
      const auto probs = predict_probs(model, feats);
      const auto l = coarse_loss(probs, lm.tag_level(), std::span<const TagId>(gold_c),
                                 std::span<const std::uint8_t>(mask), norm);
      lm.accumulate(probs, l.grad_coarse);
      const Matrix<double> analytic = lm.grad();
      const double h = 1e-3;
      for (std::size_t i = 0; i < lm.logits().size(); ++i) {
        auto logits = lm.logits().flat();
        const double saved = logits[i];
        auto eval = [&](double v) {
          lm.logits().flat()[i] = v;
          lm.refresh();
          return coarse_loss(probs, lm.tag_level(), std::span<const TagId>(gold_c),
                             std::span<const std::uint8_t>(mask), norm)
              .loss;
        };
        const auto d = ct::central_diff(eval, saved, h);
        eval(saved);
        worst_logits = std::max(worst_logits, ct::relative_error(analytic.flat()[i], d.five_point));
        worst_2pt = std::max(worst_2pt, ct::relative_error(analytic.flat()[i], d.two_point));
        ++checked;
      }
    }
  }
  const double worst = std::max({worst_fine, worst_fixed, worst_logits});
  std::ostringstream d;
  d << "max rel err fine=" << worst_fine << " coarse(fixed M)=" << worst_fixed
    << " coarse(M logits)=" << worst_logits << " over " << checked << " coordinates (" << kinks
    << " ReLU-kink coordinates skipped), five-point stencil h=1e-3; two-point stencil max " << worst_2pt;
  return {worst < 1e-4, d.str()};
}

// ---------------------------------------------------------------- 2
Outcome matrix_laws() {
  Rng rng = make_rng(20240601, {2});
  std::size_t violations = 0;
  double worst_sum = 0;
  log::Level saved = log::level();
  log::set_level(log::Level::kError);  // zero-row fallbacks are expected here
  for (int inst = 0; inst < 1000; ++inst) {
    const std::size_t f = 1 + ct::below(rng, 8);
    const std::size_t c = 1 + ct::below(rng, 6);
    CooccurrenceMatrix co;
    co.fine = ct::numbered_schema("f", f);
    co.coarse = ct::numbered_schema("c", c);
    co.counts = Matrix<std::uint64_t>(f, c + 1);
    const std::uint64_t range = 1 + ct::below(rng, inst % 3 == 0 ? 3 : 50);  // small ranges force ties
    for (auto& x : co.counts.flat()) x = ct::uniform(rng) < 0.2 ? 0 : ct::below(rng, range + 1);

    std::vector<TopK> ks;
    for (std::size_t k = 1; k <= c; ++k) ks.push_back(k);
    ks.push_back(kTopKAll);
    std::vector<CooccurrenceMatrix> refined;
    for (const auto& k : ks) {
      auto r = refine_topk(co, k);
      // determinism
      if (!(refine_topk(co, k).counts == r.counts)) ++violations;
      // selection oracle: column kept iff fewer than k columns beat it (count, then lower index)
      for (std::size_t row = 0; row < f; ++row) {
        if (r.counts(row, c) != 0) ++violations;
        for (std::size_t col = 0; col < c; ++col) {
          std::size_t better = 0;
          for (std::size_t o = 0; o < c; ++o)
            if (co.counts(row, o) > co.counts(row, col) || (co.counts(row, o) == co.counts(row, col) && o < col))
              ++better;
          const bool keep = !k || better < *k;
          const std::uint64_t want = keep ? co.counts(row, col) : 0;
          if (r.counts(row, col) != want) ++violations;
        }
      }
      const auto m = normalize(r);
      for (std::size_t row = 0; row < f; ++row) {
        double s = 0;
        for (std::size_t col = 0; col < c; ++col) s += m.type_level(row, col);
        worst_sum = std::max(worst_sum, std::abs(s - 1.0));
      }
      refined.push_back(std::move(r));
    }
    // support nesting across increasing k
    for (std::size_t a = 0; a + 1 < refined.size(); ++a)
      for (std::size_t row = 0; row < f; ++row)
        for (std::size_t col = 0; col < c; ++col)
          if (refined[a].counts(row, col) != 0 && refined[a + 1].counts(row, col) == 0) ++violations;
  }
  log::set_level(saved);
  std::ostringstream d;
  d << "max |row sum - 1| = " << worst_sum << ", selection/nesting/determinism violations = " << violations;
  return {violations == 0 && worst_sum <= 1e-9, d.str()};
}

// ---------------------------------------------------------------- 3
Outcome masked_loss_oracle() {
  Rng rng = make_rng(20240601, {3});
  std::size_t mismatches = 0;
  for (int inst = 0; inst < 500; ++inst) {
    const std::size_t fine_types = 2 + ct::below(rng, 4);
    const std::size_t coarse_types = 1 + ct::below(rng, fine_types - 1);
    const TagSchema fine = ct::numbered_schema("f", fine_types);
    const TagSchema coarse = ct::numbered_schema("c", coarse_types);
    const std::size_t n = 1 + ct::below(rng, 20);
    const auto pd = ct::random_stochastic(rng, n, fine.num_tags());
    const Matrix<float> probs = matrix_cast<float>(pd);
    Matrix<double> type_level = ct::random_stochastic(rng, fine_types, coarse_types);
    if (inst % 4 == 0)  // some one-hot rows, as produced by k=1
      for (std::size_t r = 0; r < fine_types; ++r)
        for (std::size_t s = 0; s < coarse_types; ++s) type_level(r, s) = s == r % coarse_types ? 1.0 : 0.0;
    const Matrix<float> m = matrix_cast<float>(build_tag_level(type_level, fine, coarse));
    std::vector<TagId> gold(n);
    std::vector<std::uint8_t> mask(n);
    const double keep_rate = ct::uniform(rng);
    for (std::size_t i = 0; i < n; ++i) {
      gold[i] = static_cast<TagId>(ct::below(rng, coarse.num_tags()));
      mask[i] = ct::uniform(rng) < keep_rate;
    }
    const auto l = coarse_loss(probs, m, std::span<const TagId>(gold), std::span<const std::uint8_t>(mask));
    if (l.loss != ct::brute_masked_loss(probs, m, gold, mask)) ++mismatches;
  }
  return {mismatches == 0, std::to_string(mismatches) + " of 500 instances differ from the filtered-subset oracle"};
}

// ---------------------------------------------------------------- 4
Outcome sampler_bounds() {
  Rng rng = make_rng(20240601, {4});
  std::size_t over = 0, under = 0, nondet = 0, not_subset = 0, runs = 0, normal = 0;
  log::Level saved = log::level();
  log::set_level(log::Level::kError);  // exhaustion warnings are expected on tiny corpora
  for (int inst = 0; inst < 100; ++inst) {
    const Corpus corpus = ct::random_corpus(rng, 20 + ct::below(rng, 300), 1 + ct::below(rng, 6));
    if (count_entities(corpus) == std::vector<std::size_t>(corpus.schema.num_types(), 0)) continue;
    for (int k : {1, 3, 10}) {
      const std::uint64_t seed = rng();
      const auto a = sample_kshot(corpus, k, seed);
      const auto b = sample_kshot(corpus, k, seed);
      ++runs;
      if (!(a.corpus == b.corpus) || a.indices != b.indices) ++nondet;
      for (auto c : a.counts) over += c > static_cast<std::size_t>(k + 5);
      if (a.normal_termination) {
        ++normal;
        for (auto c : a.counts) under += c < static_cast<std::size_t>(k);
      }
      for (std::size_t i = 0; i < a.indices.size(); ++i)
        if (a.indices[i] >= corpus.size() || !(corpus.sentences[a.indices[i]] == a.corpus.sentences[i]))
          ++not_subset;
    }
  }
  log::set_level(saved);
  std::ostringstream d;
  d << runs << " runs (" << normal << " normal terminations): over K+5=" << over << ", under K=" << under
    << ", nondeterministic=" << nondet << ", non-subset=" << not_subset;
  return {runs > 0 && over + under + nondet + not_subset == 0, d.str()};
}

// ---------------------------------------------------------------- 5
Outcome matrix_recovery() {
  int recovered = 0;
  for (std::uint64_t seed = 0; seed < 10; ++seed) {
    auto spec = SyntheticSpec::standard();
    spec.fine_sentences = 200;
    spec.coarse_sentences = 2000;
    const auto data = generate_synthetic(spec, 500 + seed);
    TrainPlan plan;
    plan.fine = data.fine;
    plan.coarse = {data.coarse};
    plan.seed = seed;
    plan.epochs.coarse_model = 5;
    const auto coarse_model = train_coarse_model(plan, 0);
    const auto m = build_matrix_step(coarse_model, data.fine, data.coarse.schema, 1);
    bool exact = true;
    for (std::size_t l = 0; l < m.type_level.rows(); ++l)
      for (std::size_t s = 0; s < m.type_level.cols(); ++s)
        exact = exact && m.type_level(l, s) == (static_cast<TypeId>(s) == data.hierarchy[l] ? 1.0 : 0.0);
    recovered += exact;
  }
  return {recovered >= 9, std::to_string(recovered) + "/10 seeds recover the exact 0/1 hierarchy"};
}

// Shared synthetic benchmark: fine training corpus, coarse corpus, 1000-sentence test set.
struct Benchmark {
  SyntheticData data;
  Corpus test;
};

Benchmark make_benchmark(std::uint64_t seed, std::size_t fine_sentences, std::size_t coarse_sentences,
                         double rho) {
  auto spec = SyntheticSpec::standard();
  spec.fine_sentences = fine_sentences;
  spec.coarse_sentences = coarse_sentences;
  spec.corruption_rate = rho;
  Benchmark b{generate_synthetic(spec, 1000 + seed), {}};
  auto test_spec = spec;
  test_spec.fine_sentences = 1000;
  test_spec.coarse_sentences = 0;
  b.test = generate_synthetic(test_spec, 900000 + seed).fine;
  b.test.name = "synthetic-test";
  return b;
}

TrainPlan benchmark_plan(const Benchmark& b, std::uint64_t seed) {
  TrainPlan plan;
  plan.fine = b.data.fine;
  plan.coarse = {b.data.coarse};
  plan.test = b.test;
  plan.seed = seed;
  plan.dev_fraction = 0.0;
  plan.epochs.coarse_model = 5;
  plan.epochs.fine = 30;
  plan.epochs.joint = 10;
  return plan;
}

// ---------------------------------------------------------------- 6
Outcome joint_benefit() {
  int wins = 0;
  double total = 0;
  std::ostringstream per_seed;
  for (std::uint64_t seed = 0; seed < 10; ++seed) {
    const auto b = make_benchmark(seed, 50, 5000, 0.0);
    TrainPlan plan = benchmark_plan(b, seed);
    const double cofiner = run_pipeline(plan).test_report->f1;
    plan.no_coarse = true;
    const double fine_only = run_pipeline(plan).test_report->f1;
    wins += cofiner >= fine_only;
    total += cofiner - fine_only;
    per_seed << ' ' << fmt("%.1f", 100 * cofiner) << '/' << fmt("%.1f", 100 * fine_only);
  }
  const double mean = 100 * total / 10;
  std::ostringstream d;
  d << wins << "/10 seeds CoFiNER >= fine-only, mean improvement " << fmt("%.2f", mean)
    << " F1 points; per seed (cofiner/fine-only):" << per_seed.str();
  return {wins >= 8 && mean > 2.0, d.str()};
}

// ---------------------------------------------------------------- 7
Outcome filtering_benefit() {
  int wins = 0;
  std::ostringstream per_seed;
  for (std::uint64_t seed = 0; seed < 10; ++seed) {
    const auto b = make_benchmark(seed, 1500, 5000, 0.3);
    TrainPlan plan = benchmark_plan(b, seed);
    plan.fine = sample_kshot(b.data.fine, 20, seed).corpus;  // 20-shot fine set
    const TrainingContext step1 = train_fine(plan);
    auto coarse = prepare_coarse(plan, step1.model);
    auto unfiltered = coarse;
    for (auto& a : unfiltered) a.mask = ConsistencyMask::all_true(plan.coarse[a.corpus_index]);
    const double full = evaluate(train_joint(plan, step1, coarse).model, nullptr, b.test).f1;
    TrainPlan nf = plan;
    nf.no_filtering = true;
    const double no_filter = evaluate(train_joint(nf, step1, unfiltered).model, nullptr, b.test).f1;
    wins += full >= no_filter;
    per_seed << ' ' << fmt("%.1f", 100 * full) << '/' << fmt("%.1f", 100 * no_filter);
  }
  std::ostringstream d;
  d << wins << "/10 seeds full >= no_filtering at rho=0.3; per seed (full/no_filtering):" << per_seed.str();
  return {wins >= 8, d.str()};
}

// ---------------------------------------------------------------- 8
Outcome topk_direction() {
  int wins = 0;
  double off_mass = 0;
  std::ostringstream per_seed;
  for (std::uint64_t seed = 0; seed < 10; ++seed) {
    // Same regime as criterion 7: a 20-shot fine set next to a large coarse corpus.
    // The reannotation model gets one epoch on rho=0.3 corrupted labels, which makes
    // it noisy; the noise is measured as the k=ALL matrix mass off the true hierarchy.
    const auto b = make_benchmark(seed, 1500, 5000, 0.3);
    TrainPlan plan = benchmark_plan(b, seed);
    plan.fine = sample_kshot(b.data.fine, 20, seed).corpus;
    plan.epochs.coarse_model = 1;
    const auto dense = build_matrix_step(train_coarse_model(plan, 0), plan.fine, plan.coarse[0].schema, kTopKAll);
    for (std::size_t l = 0; l < b.data.hierarchy.size(); ++l)
      off_mass += (1.0 - dense.type_level(l, b.data.hierarchy[l])) / static_cast<double>(b.data.hierarchy.size());
    const auto points = topk_sweep(plan, {std::size_t{1}, kTopKAll});
    wins += points[0].f1 >= points[1].f1;
    per_seed << ' ' << fmt("%.1f", 100 * points[0].f1) << '/' << fmt("%.1f", 100 * points[1].f1);
  }
  std::ostringstream d;
  d << wins << "/10 seeds F1(k=1) >= F1(k=ALL); mean off-hierarchy mass of the k=ALL matrix "
    << fmt("%.3f", off_mass / 10) << "; per seed (k=1/k=ALL):" << per_seed.str();
  return {wins >= 7, d.str()};
}

// ---------------------------------------------------------------- 9
Outcome span_f1_oracle() {
  Rng rng = make_rng(20240601, {9});
  std::size_t mismatches = 0;
  std::size_t model_checks = 0;
  for (int inst = 0; inst < 1000; ++inst) {
    const std::size_t types = 1 + ct::below(rng, 5);
    const Corpus gold = ct::random_corpus(rng, 1 + ct::below(rng, 10), types);
    std::vector<std::vector<TagId>> g, p;
    std::vector<std::vector<Span>> gs, ps;
    for (const auto& s : gold.sentences) {
      g.push_back(s.tags);
      p.push_back(ct::random_bio(rng, s.size(), types, ct::uniform(rng)));
      if (ct::uniform(rng) < 0.3) p.back() = s.tags;  // plenty of exact matches
      gs.push_back(extract_spans(g.back()));
      ps.push_back(extract_spans(p.back()));
    }
    auto check = [&](const EvalReport& r, const std::vector<std::vector<TagId>>& pred) {
      const auto bf = ct::brute_span_counts(g, pred);
      const double prec = bf.predicted ? static_cast<double>(bf.correct) / static_cast<double>(bf.predicted) : 0.0;
      const double rec = bf.gold ? static_cast<double>(bf.correct) / static_cast<double>(bf.gold) : 0.0;
      const double f1 = prec + rec > 0 ? 2 * prec * rec / (prec + rec) : 0.0;
      if (r.gold != bf.gold || r.predicted != bf.predicted || r.correct != bf.correct || r.precision != prec ||
          r.recall != rec || r.f1 != f1)
        ++mismatches;
    };
    check(score_spans(gs, ps, gold.schema), p);
    if (inst % 10 == 0) {
      // End to end through evaluate(): a random model's repaired argmax predictions.
      ModelConfig cfg;
      cfg.vocab_size = 64;
      cfg.embed_dim = 4;
      cfg.hidden_dim = 8;
      cfg.num_tags = gold.schema.num_tags();
      cfg.seed = rng();
      const TokenClassifier model(cfg);
      std::vector<std::vector<TagId>> pred;
      for (const auto& s : gold.sentences) pred.push_back(predict_tags(model, s));
      check(evaluate(model, nullptr, gold), pred);
      ++model_checks;
    }
  }
  return {mismatches == 0, std::to_string(mismatches) + " mismatches over 1000 span-set pairs and " +
                               std::to_string(model_checks) + " end-to-end evaluate() runs"};
}

// ---------------------------------------------------------------- 10
Outcome format_fidelity() {
  Rng rng = make_rng(20240601, {10});
  std::size_t conll_failures = 0, ckpt_failures = 0;
  for (int inst = 0; inst < 100; ++inst) {
    const Corpus c = ct::random_corpus(rng, ct::below(rng, 30), 1 + ct::below(rng, 6));
    std::ostringstream first;
    format_conll(c, first);
    std::istringstream in(first.str());
    const Corpus back = parse_conll(in, c.schema);
    std::ostringstream second;
    format_conll(back, second);
    if (!(back == c) || first.str() != second.str()) ++conll_failures;
  }
  for (int inst = 0; inst < 20; ++inst) {
    ModelConfig cfg;
    cfg.vocab_size = 16 + ct::below(rng, 100);
    cfg.embed_dim = 1 + ct::below(rng, 8);
    cfg.window = ct::below(rng, 3);
    cfg.hidden_dim = 1 + ct::below(rng, 16);
    cfg.num_tags = 3 + 2 * ct::below(rng, 5);
    cfg.dropout = ct::uniform(rng, 0.0, 0.5);
    cfg.seed = rng();
    TokenClassifier model(cfg);
    model.w2.value(0, 0) = -0.0f;  // signed zero must survive too
    std::stringstream buf;
    save_checkpoint(model, buf);
    const TokenClassifier loaded = load_checkpoint(buf);
    bool same = loaded.config() == model.config();
    auto a = model.parameters();
    auto b = loaded.parameters();
    for (std::size_t i = 0; same && i < a.size(); ++i)
      same = a[i]->value.size() == b[i]->value.size() &&
             std::memcmp(a[i]->value.data(), b[i]->value.data(), a[i]->value.size() * sizeof(float)) == 0;
    ckpt_failures += !same;
  }
  return {conll_failures + ckpt_failures == 0,
          std::to_string(conll_failures) + "/100 CoNLL round-trip failures, " + std::to_string(ckpt_failures) +
              "/20 checkpoint bit-exactness failures"};
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"cofiner acceptance suite"};
  int only = 0;
  app.add_option("--only", only, "Run a single criterion (1-10)");
  CLI11_PARSE(app, argc, argv);
  log::set_level(log::Level::kWarn);

  const std::vector<Criterion> criteria = {
      {1, "gradient correctness", 30, gradient_correctness},
      {2, "matrix laws", 5, matrix_laws},
      {3, "masked-loss oracle", 5, masked_loss_oracle},
      {4, "sampler bounds", 10, sampler_bounds},
      {5, "matrix recovery", 120, matrix_recovery},
      {6, "joint-training benefit", 600, joint_benefit},
      {7, "filtering benefit", 900, filtering_benefit},
      {8, "top-k direction", 0, topk_direction},
      {9, "span-F1 oracle", 5, span_f1_oracle},
      {10, "format fidelity", 0, format_fidelity},
  };
  int failures = 0;
  int ran = 0;
  for (const auto& c : criteria) {
    if (only != 0 && c.id != only) continue;
    ++ran;
    const auto t0 = std::chrono::steady_clock::now();
    Outcome o;
    try {
      o = c.run();
    } catch (const std::exception& e) {
      o = {false, std::string("exception: ") + e.what()};
    }
    const double secs = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
    bool pass = o.pass;
    std::string timing = fmt("%.1fs", secs);
    if (c.budget_s > 0) {
      timing += fmt(" / budget %.0fs", c.budget_s);
      if (secs > c.budget_s) {
        pass = false;
        timing += " EXCEEDED";
      }
    }
    std::printf("[%s] criterion %d (%s): %s [%s]\n", pass ? "PASS" : "FAIL", c.id, c.name, o.detail.c_str(),
                timing.c_str());
    std::fflush(stdout);
    failures += !pass;
  }
  if (ran == 0) {
    std::fprintf(stderr, "no criterion with id %d\n", only);
    return 2;
  }
  return failures == 0 ? 0 : 1;
}
