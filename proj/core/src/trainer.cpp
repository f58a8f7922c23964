#include "cofiner/trainer.hpp"

#include <algorithm>
#include <cmath>
#include <iomanip>
#include <numeric>
#include <ostream>
#include <sstream>

#include "cofiner/checkpoint.hpp"
#include "cofiner/log.hpp"
#include "cofiner/rng.hpp"

namespace cofiner {
namespace {

// RNG stream ids.
enum : std::uint64_t {
  kInitStream = 1,
  kFinePassStream = 2,
  kCoarsePassStream = 3,
  kCoarseModelStream = 4,
  kCoarseModelInitStream = 5,
  kSplitStream = 6,
};

struct Encoded {
  const Corpus* corpus = nullptr;
  std::vector<SentenceFeatures> features;
};

Encoded encode(const Corpus& corpus, const ModelConfig& config) {
  Encoded e;
  e.corpus = &corpus;
  e.features.reserve(corpus.size());
  for (const auto& s : corpus.sentences) e.features.push_back(featurize(s, config));
  return e;
}

struct PassResult {
  double loss = 0.0;
  std::size_t steps = 0;
  std::size_t skipped = 0;
};

void require_finite(const TokenClassifier& model, const char* where) {
  if (!model.all_finite())
    throw StateError(std::string("non-finite parameter or gradient during ") + where);
}

std::vector<ParamRef<float>> collect_params(TokenClassifier& model,
                                            std::vector<LearnableF2C<float>>* learnables) {
  auto refs = model.param_refs();
  if (learnables)
    for (auto& m : *learnables)
      if (m.enabled()) refs.push_back(m.param());
  return refs;
}

void optimizer_update(TrainingContext& ctx, std::vector<LearnableF2C<float>>* learnables,
                      const char* where) {
  require_finite(ctx.model, where);
  adamw_step(collect_params(ctx.model, learnables), ctx.optimizer);
  ctx.model.touch();
  if (learnables)
    for (auto& m : *learnables)
      if (m.enabled()) m.refresh();
  require_finite(ctx.model, where);
}

template <typename T>
void scale(Matrix<T>& m, T factor) {
  for (auto& x : m.flat()) x *= factor;
}

// One shuffled pass with plain cross-entropy against the corpus' own tags.
PassResult supervised_pass(TrainingContext& ctx, const Encoded& data, std::size_t batch_size,
                           Rng& rng, std::vector<LearnableF2C<float>>* learnables,
                           const char* where) {
  PassResult r;
  const std::size_t n = data.features.size();
  std::vector<std::size_t> order(n);
  std::iota(order.begin(), order.end(), std::size_t{0});
  std::shuffle(order.begin(), order.end(), rng);
  double total = 0.0;
  for (std::size_t start = 0; start < n; start += batch_size) {
    const std::size_t end = std::min(n, start + batch_size);
    const float inv_batch = 1.0f / static_cast<float>(end - start);
    for (std::size_t b = start; b < end; ++b) {
      const std::size_t idx = order[b];
      const auto cache = forward_train(ctx.model, data.features[idx], rng);
      auto loss = fine_loss(cache.out.probs, std::span<const TagId>(data.corpus->sentences[idx].tags));
      total += loss.loss;
      scale(loss.grad_probs, inv_batch);
      backward(ctx.model, cache, loss.grad_probs);
    }
    optimizer_update(ctx, learnables, where);
    ++r.steps;
  }
  r.loss = n ? total / static_cast<double>(n) : 0.0;
  return r;
}

// One shuffled pass over a coarse corpus with the masked F2C loss.
PassResult coarse_pass(TrainingContext& ctx, const Encoded& data, LearnableF2C<float>& f2c,
                       const ConsistencyMask& mask, const TrainPlan& plan, Rng& rng,
                       std::vector<LearnableF2C<float>>& learnables) {
  PassResult r;
  const std::size_t n = data.features.size();
  std::vector<std::size_t> order(n);
  std::iota(order.begin(), order.end(), std::size_t{0});
  std::shuffle(order.begin(), order.end(), rng);
  double total = 0.0;
  for (std::size_t start = 0; start < n; start += plan.batch_size) {
    const std::size_t end = std::min(n, start + plan.batch_size);
    const float inv_batch = 1.0f / static_cast<float>(end - start);
    std::size_t contributing = 0;
    for (std::size_t b = start; b < end; ++b) {
      const std::size_t idx = order[b];
      const auto& keep = mask.keep[idx];
      // A sentence without surviving tokens has zero loss and zero gradient.
      if (std::none_of(keep.begin(), keep.end(), [](std::uint8_t k) { return k != 0; })) continue;
      const auto cache = forward_train(ctx.model, data.features[idx], rng);
      auto loss = coarse_loss(cache.out.probs, f2c.tag_level(),
                              std::span<const TagId>(data.corpus->sentences[idx].tags),
                              std::span<const std::uint8_t>(keep), plan.coarse_normalization);
      total += loss.loss;
      scale(loss.grad_probs, inv_batch);
      backward(ctx.model, cache, loss.grad_probs);
      if (f2c.enabled()) {
        scale(loss.grad_coarse, inv_batch);
        f2c.accumulate(cache.out.probs, loss.grad_coarse);
      }
      ++contributing;
    }
    if (contributing == 0) {
      ++r.skipped;
      continue;
    }
    optimizer_update(ctx, &learnables, "joint coarse pass");
    ++r.steps;
  }
  r.loss = n ? total / static_cast<double>(n) : 0.0;
  return r;
}

std::size_t expected_steps(std::size_t n, std::size_t batch) { return (n + batch - 1) / batch; }

void check_accounting(const PassResult& r, std::size_t n, std::size_t batch) {
  if (r.steps + r.skipped != expected_steps(n, batch))
    throw StateError("epoch step accounting mismatch");
}

std::optional<double> dev_f1(const TokenClassifier& model, const Corpus& dev) {
  if (dev.empty()) return std::nullopt;
  return evaluate(model, nullptr, dev).f1;
}

ModelConfig fine_model_config(const TrainPlan& plan) {
  ModelConfig c = plan.model;
  c.num_tags = plan.fine.schema.num_tags();
  c.seed = derive_seed(plan.seed, {kInitStream});
  return c;
}

Corpus subset(const Corpus& corpus, const std::vector<std::size_t>& indices, std::string name) {
  Corpus out;
  out.schema = corpus.schema;
  out.name = std::move(name);
  for (auto i : indices) out.sentences.push_back(corpus.sentences[i]);
  return out;
}

void hash_corpus(std::ostringstream& buf, const Corpus& c) {
  buf << "corpus:" << c.name << '\n';
  for (const auto& t : c.schema.entity_types()) buf << t << ' ';
  buf << '\n';
  format_conll(c, buf);
}

}  // namespace

void TrainPlan::validate() const {
  if (fine.empty()) throw ArgumentError("fine corpus is empty");
  if (fine.schema.num_types() == 0) throw ArgumentError("fine schema has no entity types");
  fine.validate();
  if (epochs.fine < 1 || epochs.joint < 1 || epochs.coarse_model < 1)
    throw ArgumentError("epoch counts must be >= 1");
  if (batch_size < 1) throw ArgumentError("batch size must be >= 1");
  if (!(dev_fraction >= 0.0 && dev_fraction < 1.0)) throw ArgumentError("dev fraction must lie in [0, 1)");
  if (topk && *topk == 0) throw ArgumentError("top-k must be >= 1");
  ModelConfig probe = model;
  probe.num_tags = fine.schema.num_tags();
  probe.validate();
  for (const auto& c : coarse) {
    if (c.empty()) throw ArgumentError("coarse corpus '" + c.name + "' is empty");
    c.validate();
    if (!(fine.schema.num_types() > c.schema.num_types()))
      throw ArgumentError("fine schema must have more entity types than coarse corpus '" + c.name + "'");
  }
  if (dev && !(dev->schema == fine.schema)) throw ArgumentError("dev corpus schema differs from fine schema");
  if (test && !(test->schema == fine.schema)) throw ArgumentError("test corpus schema differs from fine schema");
}

std::uint64_t TrainPlan::hash() const {
  std::ostringstream buf;
  buf << std::setprecision(17);
  hash_corpus(buf, fine);
  for (const auto& c : coarse) hash_corpus(buf, c);
  if (dev) hash_corpus(buf, *dev);
  if (test) hash_corpus(buf, *test);
  buf << model.vocab_size << ' ' << model.embed_dim << ' ' << model.window << ' ' << model.hidden_dim
      << ' ' << model.dropout << '\n';
  buf << optimizer.learning_rate << ' ' << optimizer.beta1 << ' ' << optimizer.beta2 << ' '
      << optimizer.epsilon << ' ' << optimizer.weight_decay << '\n';
  buf << epochs.coarse_model << ' ' << epochs.fine << ' ' << epochs.joint << ' ' << batch_size << ' '
      << dev_fraction << '\n';
  buf << no_filtering << no_coarse << learnable_matrix << fine_first << reset_optimizer
      << refilter_every_epoch << static_cast<int>(coarse_normalization) << ' ' << topk_name(topk);
  return fnv1a64(buf.str());
}

void TrainPlan::apply(const KeyValueConfig& cfg) {
  auto size = [&](const char* key, std::size_t fallback) {
    const auto v = cfg.get_int(key, static_cast<std::int64_t>(fallback));
    if (v < 0) throw ArgumentError(std::string("config key '") + key + "' must be non-negative");
    return static_cast<std::size_t>(v);
  };
  model.vocab_size = size("model.vocab_size", model.vocab_size);
  model.embed_dim = size("model.embed_dim", model.embed_dim);
  model.window = size("model.window", model.window);
  model.hidden_dim = size("model.hidden_dim", model.hidden_dim);
  model.dropout = cfg.get_double("model.dropout", model.dropout);

  optimizer.learning_rate = cfg.get_double("optim.lr", optimizer.learning_rate);
  optimizer.beta1 = cfg.get_double("optim.beta1", optimizer.beta1);
  optimizer.beta2 = cfg.get_double("optim.beta2", optimizer.beta2);
  optimizer.epsilon = cfg.get_double("optim.eps", optimizer.epsilon);
  optimizer.weight_decay = cfg.get_double("optim.weight_decay", optimizer.weight_decay);

  epochs.coarse_model = size("coarse_model.epochs", epochs.coarse_model);
  epochs.fine = size("fine.epochs", epochs.fine);
  epochs.joint = size("joint.epochs", epochs.joint);

  batch_size = size("train.batch_size", batch_size);
  seed = static_cast<std::uint64_t>(cfg.get_int("train.seed", static_cast<std::int64_t>(seed)));
  dev_fraction = cfg.get_double("train.dev_fraction", dev_fraction);

  no_filtering = cfg.get_bool("mode.no_filtering", no_filtering);
  no_coarse = cfg.get_bool("mode.no_coarse", no_coarse);
  learnable_matrix = cfg.get_bool("mode.learnable_matrix", learnable_matrix);
  fine_first = cfg.get_bool("mode.fine_first", fine_first);
  reset_optimizer = cfg.get_bool("mode.reset_optimizer", reset_optimizer);
  refilter_every_epoch = cfg.get_bool("mode.refilter_every_epoch", refilter_every_epoch);
  if (auto norm = cfg.get("mode.normalize")) {
    if (*norm == "all") coarse_normalization = CoarseNormalization::kAllTokens;
    else if (*norm == "surviving") coarse_normalization = CoarseNormalization::kSurviving;
    else throw ArgumentError("mode.normalize expects 'all' or 'surviving'");
  }
  if (auto k = cfg.get("f2c.topk")) topk = parse_topk(*k);
}

void write_metric_log(const std::vector<MetricRow>& rows, std::ostream& out) {
  out << "epoch\tstage\tcorpus\tloss\tdev_span_f1\n";
  out << std::fixed << std::setprecision(6);
  for (const auto& r : rows) {
    out << r.epoch << '\t' << r.stage << '\t' << r.corpus << '\t' << r.loss << '\t';
    if (r.dev_f1) out << *r.dev_f1;
    out << '\n';
  }
}

FineSplits split_fine(const TrainPlan& plan) {
  FineSplits s;
  if (plan.dev) {
    s.train = plan.fine;
    s.dev = *plan.dev;
    return s;
  }
  const std::size_t n = plan.fine.size();
  auto held = static_cast<std::size_t>(std::llround(plan.dev_fraction * static_cast<double>(n)));
  if (plan.dev_fraction > 0.0 && n >= 2) held = std::clamp<std::size_t>(held, 1, n - 1);
  else held = 0;
  std::vector<std::size_t> order(n);
  std::iota(order.begin(), order.end(), std::size_t{0});
  Rng rng = make_rng(plan.seed, {kSplitStream});
  std::shuffle(order.begin(), order.end(), rng);
  std::vector<std::size_t> dev_idx(order.begin(), order.begin() + static_cast<std::ptrdiff_t>(held));
  std::vector<std::size_t> train_idx(order.begin() + static_cast<std::ptrdiff_t>(held), order.end());
  std::sort(dev_idx.begin(), dev_idx.end());
  std::sort(train_idx.begin(), train_idx.end());
  s.train = subset(plan.fine, train_idx, plan.fine.name + ".train");
  s.dev = subset(plan.fine, dev_idx, plan.fine.name + ".dev");
  return s;
}

TrainingContext train_fine(const TrainPlan& plan, std::vector<MetricRow>* log) {
  if (plan.fine.empty()) throw ArgumentError("fine corpus is empty");
  const FineSplits splits = split_fine(plan);
  if (splits.train.empty()) throw ArgumentError("fine training split is empty");
  TrainingContext ctx{TokenClassifier(fine_model_config(plan)), OptimizerState(plan.optimizer), 0};
  const Encoded data = encode(splits.train, ctx.model.config());
  for (std::size_t e = 0; e < plan.epochs.fine; ++e) {
    Rng rng = make_rng(plan.seed, {kFinePassStream, ctx.fine_epochs_done});
    const auto r = supervised_pass(ctx, data, plan.batch_size, rng, nullptr, "fine training");
    check_accounting(r, data.features.size(), plan.batch_size);
    ++ctx.fine_epochs_done;
    if (log)
      log->push_back({"fine", e, plan.fine.name, r.loss, dev_f1(ctx.model, splits.dev), r.steps, r.skipped});
  }
  return ctx;
}

TokenClassifier train_coarse_model(const TrainPlan& plan, std::size_t index,
                                   std::vector<MetricRow>* log) {
  if (index >= plan.coarse.size()) throw ArgumentError("coarse corpus index out of range");
  const Corpus& corpus = plan.coarse[index];
  if (corpus.empty()) throw ArgumentError("coarse corpus '" + corpus.name + "' is empty");
  ModelConfig cfg = plan.model;
  cfg.num_tags = corpus.schema.num_tags();
  cfg.seed = derive_seed(plan.seed, {kCoarseModelInitStream, index});
  TrainingContext ctx{TokenClassifier(cfg), OptimizerState(plan.optimizer), 0};
  const Encoded data = encode(corpus, cfg);
  for (std::size_t e = 0; e < plan.epochs.coarse_model; ++e) {
    Rng rng = make_rng(plan.seed, {kCoarseModelStream, index, e});
    const auto r = supervised_pass(ctx, data, plan.batch_size, rng, nullptr, "coarse model training");
    check_accounting(r, data.features.size(), plan.batch_size);
    if (log) log->push_back({"coarse_model", e, corpus.name, r.loss, std::nullopt, r.steps, r.skipped});
  }
  return std::move(ctx.model);
}

F2CMatrix build_matrix_step(const TokenClassifier& coarse_model, const Corpus& fine_corpus,
                            const TagSchema& coarse_schema, const TopK& k) {
  if (coarse_model.config().num_tags != coarse_schema.num_tags())
    throw ArgumentError("coarse model head does not match the coarse schema");
  std::vector<std::vector<TagId>> predictions;
  predictions.reserve(fine_corpus.size());
  for (const auto& s : fine_corpus.sentences) predictions.push_back(predict_tags(coarse_model, s));
  const auto counts = count_cooccurrence(fine_corpus, predictions, coarse_schema);
  F2CMatrix m = normalize(refine_topk(counts, k));
  m.provenance = "coarse_model=" + checksum_hex(checkpoint_checksum(coarse_model)) +
                 ";fine=" + fine_corpus.name + ";k=" + topk_name(k);
  return m;
}

std::vector<CoarseArtifacts> prepare_coarse(const TrainPlan& plan, const TokenClassifier& step1,
                                            std::vector<MetricRow>* log) {
  const FineSplits splits = split_fine(plan);
  std::vector<CoarseArtifacts> out;
  for (std::size_t i = 0; i < plan.coarse.size(); ++i) {
    CoarseArtifacts a;
    a.name = plan.coarse[i].name;
    a.corpus_index = i;
    a.coarse_model = train_coarse_model(plan, i, log);
    a.matrix = build_matrix_step(*a.coarse_model, splits.train, plan.coarse[i].schema, plan.topk);
    a.mask = plan.no_filtering ? ConsistencyMask::all_true(plan.coarse[i])
                               : build_mask(step1, a.matrix, plan.coarse[i]);
    out.push_back(std::move(a));
  }
  return out;
}

TrainingContext train_joint(const TrainPlan& plan, TrainingContext ctx,
                            std::vector<CoarseArtifacts>& coarse, std::vector<MetricRow>* log) {
  const FineSplits splits = split_fine(plan);
  if (splits.train.empty()) throw ArgumentError("fine training split is empty");
  if (!plan.no_coarse)
    for (const auto& a : coarse) {
      if (a.corpus_index >= plan.coarse.size()) throw StateError("coarse artifact refers to a missing corpus");
      if (a.mask.keep.size() != plan.coarse[a.corpus_index].size())
        throw StateError("mask for '" + a.name + "' is missing or stale");
      if (a.matrix.tag_level.rows() != ctx.model.config().num_tags)
        throw StateError("F2C matrix for '" + a.name + "' is missing or does not match the model");
    }
  if (plan.reset_optimizer) ctx.optimizer.reset();

  const Encoded fine_data = encode(splits.train, ctx.model.config());
  std::vector<Encoded> coarse_data;
  std::vector<LearnableF2C<float>> learnables;
  if (!plan.no_coarse)
    for (const auto& a : coarse) {
      coarse_data.push_back(encode(plan.coarse[a.corpus_index], ctx.model.config()));
      learnables.emplace_back(a.matrix, plan.learnable_matrix);
    }

  for (std::size_t e = 0; e < plan.epochs.joint; ++e) {
    auto coarse_passes = [&] {
      for (std::size_t i = 0; i < coarse_data.size(); ++i) {
        auto& a = coarse[i];
        if (plan.refilter_every_epoch && !plan.no_filtering && e > 0)
          a.mask = build_mask(ctx.model, learnables[i].matrix(), plan.coarse[a.corpus_index]);
        Rng rng = make_rng(plan.seed, {kCoarsePassStream, a.corpus_index, e});
        const auto r = coarse_pass(ctx, coarse_data[i], learnables[i], a.mask, plan, rng, learnables);
        check_accounting(r, coarse_data[i].features.size(), plan.batch_size);
        if (log) log->push_back({"joint_coarse", e, a.name, r.loss, std::nullopt, r.steps, r.skipped});
      }
    };
    auto fine_pass = [&] {
      Rng rng = make_rng(plan.seed, {kFinePassStream, ctx.fine_epochs_done});
      const auto r = supervised_pass(ctx, fine_data, plan.batch_size, rng, &learnables, "joint fine pass");
      check_accounting(r, fine_data.features.size(), plan.batch_size);
      ++ctx.fine_epochs_done;
      if (log)
        log->push_back({"joint_fine", e, plan.fine.name, r.loss, dev_f1(ctx.model, splits.dev), r.steps, r.skipped});
    };
    if (plan.fine_first) {
      fine_pass();
      coarse_passes();
    } else {
      coarse_passes();
      fine_pass();
    }
  }
  if (plan.learnable_matrix)
    for (std::size_t i = 0; i < learnables.size(); ++i) coarse[i].matrix = learnables[i].matrix();
  return ctx;
}

RunArtifacts run_pipeline(const TrainPlan& plan) {
  plan.validate();
  RunArtifacts a;
  a.plan_hash = plan.hash();
  a.seed = plan.seed;
  TrainingContext ctx = train_fine(plan, &a.log);
  a.step1 = ctx.model;
  if (!plan.no_coarse) a.coarse = prepare_coarse(plan, ctx.model, &a.log);
  TrainingContext final_ctx = train_joint(plan, std::move(ctx), a.coarse, &a.log);
  a.final_model = std::move(final_ctx.model);
  const FineSplits splits = split_fine(plan);
  if (!splits.dev.empty()) a.dev_report = evaluate(a.final_model, nullptr, splits.dev);
  if (plan.test) a.test_report = evaluate(a.final_model, nullptr, *plan.test);
  return a;
}

AblationTable run_ablation(const TrainPlan& plan) {
  plan.validate();
  AblationTable table;
  const TrainingContext step1 = train_fine(plan);
  TrainPlan filtered = plan;
  filtered.no_filtering = false;
  filtered.no_coarse = false;
  std::vector<CoarseArtifacts> all;
  if (!plan.coarse.empty()) all = prepare_coarse(filtered, step1.model);
  const FineSplits splits = split_fine(plan);

  auto run_variant = [&](const std::string& name, TrainPlan variant, std::vector<CoarseArtifacts> coarse) {
    if (!table.rows.empty()) {
      ++table.step1_cache_hits;
      log::info("ablation: step-1 checkpoint cache hit for variant '" + name + "'");
    }
    const TrainingContext ctx = train_joint(variant, step1, coarse);
    AblationRow row;
    row.variant = name;
    if (!splits.dev.empty()) row.dev_f1 = evaluate(ctx.model, nullptr, splits.dev).f1;
    const Corpus& scored = plan.test ? *plan.test : splits.dev;
    if (!scored.empty()) {
      const auto rep = evaluate(ctx.model, nullptr, scored);
      row.test_f1 = rep.f1;
      row.precision = rep.precision;
      row.recall = rep.recall;
    }
    table.rows.push_back(row);
  };

  if (!all.empty()) {
    run_variant("full", filtered, all);
    TrainPlan nf = filtered;
    nf.no_filtering = true;
    auto unfiltered = all;
    for (auto& a : unfiltered) a.mask = ConsistencyMask::all_true(plan.coarse[a.corpus_index]);
    run_variant("no_filtering", nf, unfiltered);
    if (all.size() > 1)
      for (std::size_t drop = 0; drop < all.size(); ++drop) {
        std::vector<CoarseArtifacts> kept;
        for (std::size_t i = 0; i < all.size(); ++i)
          if (i != drop) kept.push_back(all[i]);
        run_variant("without_" + all[drop].name, filtered, kept);
      }
  }
  TrainPlan fine_only = plan;
  fine_only.no_coarse = true;
  run_variant("no_coarse", fine_only, {});
  return table;
}

void write_ablation_tsv(const AblationTable& table, std::ostream& out) {
  out << "variant\tdev_f1\ttest_f1\tprecision\trecall\n";
  out << std::fixed << std::setprecision(6);
  for (const auto& r : table.rows)
    out << r.variant << '\t' << r.dev_f1 << '\t' << r.test_f1 << '\t' << r.precision << '\t'
        << r.recall << '\n';
}

}  // namespace cofiner
