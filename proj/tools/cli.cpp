#include "cli.hpp"

#include <algorithm>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <iomanip>
#include <map>
#include <optional>
#include <sstream>
#include <string>
#include <unistd.h>
#include <vector>

#include "CLI11.hpp"
#include "cofiner/checkpoint.hpp"
#include "cofiner/config.hpp"
#include "cofiner/corpus.hpp"
#include "cofiner/error.hpp"
#include "cofiner/eval.hpp"
#include "cofiner/experiments.hpp"
#include "cofiner/f2c.hpp"
#include "cofiner/filtering.hpp"
#include "cofiner/log.hpp"
#include "cofiner/sampler.hpp"
#include "cofiner/synthetic.hpp"
#include "cofiner/trainer.hpp"

namespace fs = std::filesystem;

namespace cofiner::cli {
namespace {

// Bad invocation detected after parsing (existing run dir, missing input, ...).
class UsageError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// Flags that map one-to-one onto config keys. A flag given on the command line
// overrides the same key from --config.
struct Override {
  const char* flag;
  const char* key;
  const char* help;
  bool is_flag;
};

constexpr Override kOverrides[] = {
    {"--fine-epochs", "fine.epochs", "Step 1 epochs", false},
    {"--joint-epochs", "joint.epochs", "joint training epochs", false},
    {"--coarse-model-epochs", "coarse_model.epochs", "coarse reannotation model epochs", false},
    {"--batch-size", "train.batch_size", "sentences per optimizer step", false},
    {"--dev-fraction", "train.dev_fraction", "held-out share of the fine corpus when no dev set", false},
    {"--lr", "optim.lr", "AdamW learning rate", false},
    {"--weight-decay", "optim.weight_decay", "AdamW decoupled weight decay", false},
    {"--vocab-size", "model.vocab_size", "hashed embedding buckets", false},
    {"--embed-dim", "model.embed_dim", "embedding width", false},
    {"--hidden-dim", "model.hidden_dim", "hidden layer width", false},
    {"--window", "model.window", "context radius in tokens", false},
    {"--dropout", "model.dropout", "dropout on the hidden layer", false},
    {"--top-k", "f2c.topk", "coarse columns kept per fine row (integer or 'all')", false},
    {"--normalize", "mode.normalize", "coarse loss denominator: all | surviving", false},
    {"--learnable-matrix", "mode.learnable_matrix", "train the F2C matrix logits", true},
    {"--fine-first", "mode.fine_first", "run the fine pass before the coarse passes", true},
    {"--reset-optimizer", "mode.reset_optimizer", "fresh optimizer state for joint training", true},
    {"--refilter-every-epoch", "mode.refilter_every_epoch", "recompute masks every joint epoch", true},
};

struct PlanFlags {
  std::string config;
  std::uint64_t seed = 0;
  std::string fine;
  std::vector<std::string> coarse;
  std::string dev;
  std::string test;
  std::string mode;
  std::string run_dir;
  bool force = false;
  std::map<std::string, std::string> overrides;
};

void add_plan_flags(CLI::App* app, PlanFlags& f) {
  app->add_option("--config", f.config, "key = value config file")->check(CLI::ExistingFile);
  app->add_option("--seed", f.seed, "master seed")->required();
  app->add_option("--fine", f.fine, "fine-grained CoNLL corpus (overrides data.fine)");
  app->add_option("--coarse", f.coarse, "coarse CoNLL corpora (overrides data.coarse)");
  app->add_option("--dev", f.dev, "fine dev corpus (overrides data.dev)");
  app->add_option("--test", f.test, "fine test corpus (overrides data.test)");
  app->add_option("--mode", f.mode, "full | no-filtering | no-coarse")
      ->check(CLI::IsMember({"full", "no-filtering", "no-coarse"}));
  app->add_option("--run-dir", f.run_dir, "output directory (default $COFINER_RUN_DIR/<name>)");
  app->add_flag("--force", f.force, "replace an existing run directory");
  for (const auto& o : kOverrides) {
    const std::string key = o.key;
    if (o.is_flag)
      app->add_flag_callback(o.flag, [&f, key] { f.overrides[key] = "true"; }, o.help);
    else
      app->add_option_function<std::string>(o.flag, [&f, key](const std::string& v) { f.overrides[key] = v; },
                                            o.help);
  }
}

std::string stem_of(const fs::path& p) { return p.stem().string(); }

std::vector<std::string> split_list(const std::string& text) {
  std::vector<std::string> out;
  std::stringstream in(text);
  std::string item;
  while (std::getline(in, item, ','))
    if (!item.empty()) out.push_back(item);
  return out;
}

std::string join(const std::vector<std::string>& items) {
  std::string out;
  for (const auto& s : items) out += (out.empty() ? "" : ",") + s;
  return out;
}

struct Resolved {
  KeyValueConfig config;
  TrainPlan plan;
  fs::path fine_path;
  std::vector<fs::path> coarse_paths;
  std::optional<fs::path> dev_path;
  std::optional<fs::path> test_path;
};

Corpus load_corpus(const fs::path& path, const std::optional<TagSchema>& schema = std::nullopt) {
  ConllStats stats;
  Corpus c = read_conll(path, schema, &stats);
  c.name = stem_of(path);
  if (stats.repaired_tags > 0)
    log::warn(path.string() + ": repaired " + std::to_string(stats.repaired_tags) + " invalid BIO tags");
  return c;
}

// Config file, then flags. Corpus paths in a config file are relative to that file.
Resolved resolve(const PlanFlags& f) {
  Resolved r;
  fs::path base = fs::current_path();
  if (!f.config.empty()) {
    r.config = KeyValueConfig::load(f.config);
    base = fs::absolute(f.config).parent_path();
  }
  auto from_config = [&](const char* key) -> std::optional<fs::path> {
    if (auto v = r.config.get(key); v && !v->empty()) return base / *v;
    return std::nullopt;
  };
  if (!f.fine.empty()) r.fine_path = fs::absolute(f.fine);
  else if (auto p = from_config("data.fine")) r.fine_path = *p;
  else throw UsageError("no fine corpus: pass --fine or set data.fine in the config");

  if (!f.coarse.empty()) {
    for (const auto& c : f.coarse) r.coarse_paths.push_back(fs::absolute(c));
  } else if (auto v = r.config.get("data.coarse")) {
    for (const auto& c : split_list(*v)) r.coarse_paths.push_back(base / c);
  }
  if (!f.dev.empty()) r.dev_path = fs::absolute(f.dev);
  else r.dev_path = from_config("data.dev");
  if (!f.test.empty()) r.test_path = fs::absolute(f.test);
  else r.test_path = from_config("data.test");

  for (const auto& [key, value] : f.overrides) r.config.set(key, value);
  if (f.mode == "full") {
    r.config.set("mode.no_filtering", "false");
    r.config.set("mode.no_coarse", "false");
  } else if (f.mode == "no-filtering") {
    r.config.set("mode.no_filtering", "true");
  } else if (f.mode == "no-coarse") {
    r.config.set("mode.no_coarse", "true");
  }
  r.config.set("train.seed", std::to_string(f.seed));
  r.plan.apply(r.config);

  r.plan.fine = load_corpus(r.fine_path);
  for (const auto& p : r.coarse_paths) r.plan.coarse.push_back(load_corpus(p));
  if (r.dev_path) r.plan.dev = load_corpus(*r.dev_path, r.plan.fine.schema);
  if (r.test_path) r.plan.test = load_corpus(*r.test_path, r.plan.fine.schema);
  r.plan.validate();
  return r;
}

fs::path default_run_root() {
  if (const char* env = std::getenv("COFINER_RUN_DIR"); env && *env) return env;
  return "runs";
}

// Everything is written into a staging directory that is renamed into place on
// commit, so a run directory is either complete or absent.
class RunDir {
 public:
  RunDir(fs::path target, bool force) : target_(std::move(target)), force_(force) {
    if (fs::exists(target_) && !force_)
      throw UsageError("run directory " + target_.string() + " already exists (use --force to replace it)");
    if (!target_.parent_path().empty()) fs::create_directories(target_.parent_path());
    staging_ = target_;
    staging_ += ".partial-" + std::to_string(::getpid());
    fs::remove_all(staging_);
    for (const char* sub : {"checkpoints", "matrices", "masks", "reports", "data"})
      fs::create_directories(staging_ / sub);
  }
  RunDir(const RunDir&) = delete;
  RunDir& operator=(const RunDir&) = delete;
  ~RunDir() {
    if (!committed_) {
      std::error_code ec;
      fs::remove_all(staging_, ec);
    }
  }

  const fs::path& path() const { return staging_; }
  const fs::path& target() const { return target_; }

  void commit() {
    if (fs::exists(target_)) {
      if (!force_) throw IoError("run directory " + target_.string() + " appeared while running");
      fs::remove_all(target_);
    }
    fs::rename(staging_, target_);
    committed_ = true;
  }

 private:
  fs::path target_;
  fs::path staging_;
  bool force_ = false;
  bool committed_ = false;
};

fs::path run_path(const PlanFlags& f, const std::string& kind, const TrainPlan& plan) {
  if (!f.run_dir.empty()) return f.run_dir;
  return default_run_root() / (kind + "-" + checksum_hex(plan.hash()) + "-s" + std::to_string(plan.seed));
}

std::ofstream open_out(const fs::path& p) {
  std::ofstream out(p, std::ios::trunc);
  if (!out) throw IoError("cannot open " + p.string() + " for writing");
  return out;
}

std::string slurp(const fs::path& p) {
  std::ifstream in(p);
  if (!in) throw IoError("cannot open " + p.string());
  std::ostringstream s;
  s << in.rdbuf();
  return s.str();
}

// Copies the inputs into data/ and writes config-snapshot with paths relative to the run.
void snapshot(RunDir& run, const Resolved& r, const std::string& kind) {
  KeyValueConfig cfg = r.config;
  write_conll(r.plan.fine, run.path() / "data" / "fine.conll");
  cfg.set("data.fine", "data/fine.conll");
  std::vector<std::string> coarse;
  if (!r.plan.coarse.empty()) fs::create_directories(run.path() / "data" / "coarse");
  for (const auto& c : r.plan.coarse) {
    const std::string rel = "data/coarse/" + c.name + ".conll";
    write_conll(c, run.path() / rel);
    coarse.push_back(rel);
  }
  cfg.set("data.coarse", join(coarse));
  if (r.plan.dev) {
    write_conll(*r.plan.dev, run.path() / "data" / "dev.conll");
    cfg.set("data.dev", "data/dev.conll");
  }
  if (r.plan.test) {
    write_conll(*r.plan.test, run.path() / "data" / "test.conll");
    cfg.set("data.test", "data/test.conll");
  }
  cfg.set("run.kind", kind);
  cfg.set("run.plan_hash", checksum_hex(r.plan.hash()));
  auto out = open_out(run.path() / "config-snapshot");
  cfg.write(out);
}

void print_tsv_file(const fs::path& p, std::ostream& out) { out << slurp(p); }

// ---------------------------------------------------------------- train

template <typename F>
auto stage(const char* name, F&& fn) {
  try {
    return fn();
  } catch (const std::exception& e) {
    throw std::runtime_error(std::string("stage '") + name + "' failed: " + e.what());
  }
}

int cmd_train(const PlanFlags& f, const std::string& report_tsv, std::ostream& out) {
  const Resolved r = resolve(f);
  const TrainPlan& plan = r.plan;
  RunDir run(run_path(f, "train", plan), f.force);
  snapshot(run, r, "train");
  const fs::path dir = run.path();

  std::vector<MetricRow> metrics;
  TrainingContext ctx = stage("step1", [&] { return train_fine(plan, &metrics); });
  const TokenClassifier step1 = ctx.model;
  save_checkpoint(step1, dir / "checkpoints" / "step1.ckpt");
  const std::string step1_hex = checksum_hex(checkpoint_checksum(step1));

  std::vector<CoarseArtifacts> coarse;
  if (!plan.no_coarse) coarse = stage("coarse", [&] { return prepare_coarse(plan, step1, &metrics); });
  for (const auto& a : coarse) {
    if (a.coarse_model) save_checkpoint(*a.coarse_model, dir / "checkpoints" / ("coarse_" + a.name + ".ckpt"));
    write_matrix_tsv(a.matrix, dir / "matrices" / (a.name + ".tsv"));
    write_mask_cache(a.mask, step1_hex, a.matrix.provenance, dir / "masks" / (a.name + ".mask"));
    auto rep = open_out(dir / "reports" / ("filtering_" + a.name + ".tsv"));
    write_filtering_report(filtering_report(a.mask, plan.coarse[a.corpus_index]), rep);
  }

  ctx = stage("joint", [&] { return train_joint(plan, std::move(ctx), coarse, &metrics); });
  save_checkpoint(ctx.model, dir / "checkpoints" / "final.ckpt");
  if (plan.learnable_matrix)
    for (const auto& a : coarse) write_matrix_tsv(a.matrix, dir / "matrices" / (a.name + ".learned.tsv"));
  {
    auto log_out = open_out(dir / "reports" / "metrics.tsv");
    write_metric_log(metrics, log_out);
  }

  const FineSplits splits = split_fine(plan);
  std::optional<EvalReport> final_report;
  std::string scored_on;
  if (!splits.dev.empty()) {
    const auto rep = evaluate(ctx.model, nullptr, splits.dev);
    write_report_tsv(rep, dir / "reports" / "dev.tsv");
    final_report = rep;
    scored_on = "dev";
  }
  if (plan.test) {
    const auto rep = evaluate(ctx.model, nullptr, *plan.test);
    write_report_tsv(rep, dir / "reports" / "test.tsv");
    final_report = rep;
    scored_on = "test";
  }
  run.commit();
  out << "run: " << run.target().string() << '\n';
  out << "final checkpoint: " << checksum_hex(checkpoint_checksum(ctx.model)) << '\n';
  if (final_report) {
    print_report(*final_report, out);
    out << scored_on << " span F1: " << std::fixed << std::setprecision(4) << final_report->f1 << '\n';
    if (!report_tsv.empty()) write_report_tsv(*final_report, fs::path(report_tsv));
  } else {
    out << "no dev or test data to score\n";
  }
  return kExitOk;
}

// ---------------------------------------------------------------- loading a run

struct LoadedRun {
  fs::path dir;
  KeyValueConfig config;
  Corpus fine;
  std::vector<Corpus> coarse;
  std::optional<Corpus> dev;
  std::optional<Corpus> test;
};

LoadedRun load_run(const fs::path& dir) {
  if (!fs::is_regular_file(dir / "config-snapshot"))
    throw UsageError(dir.string() + " is not a run directory (no config-snapshot)");
  LoadedRun r;
  r.dir = dir;
  r.config = KeyValueConfig::load(dir / "config-snapshot");
  r.fine = load_corpus(dir / r.config.get_string("data.fine", "data/fine.conll"));
  for (const auto& c : split_list(r.config.get_string("data.coarse", "")))
    r.coarse.push_back(load_corpus(dir / c));
  if (auto p = r.config.get("data.dev")) r.dev = load_corpus(dir / *p, r.fine.schema);
  if (auto p = r.config.get("data.test")) r.test = load_corpus(dir / *p, r.fine.schema);
  return r;
}

std::vector<const Corpus*> select_coarse(const LoadedRun& run, const std::string& name) {
  std::vector<const Corpus*> out;
  for (const auto& c : run.coarse)
    if (name.empty() || c.name == name) out.push_back(&c);
  if (out.empty())
    throw UsageError(name.empty() ? "run has no coarse corpora" : "run has no coarse corpus named '" + name + "'");
  return out;
}

int cmd_matrix(const std::string& run_dir, const std::string& corpus, bool print, std::ostream& out) {
  const LoadedRun run = load_run(run_dir);
  const auto selected = select_coarse(run, corpus);
  for (const Corpus* c : selected) {
    const fs::path src = run.dir / "matrices" / (c->name + ".tsv");
    std::ifstream in(src);
    if (!in) throw IoError("cannot open " + src.string());
    const F2CMatrix m = read_matrix_tsv(in, run.fine.schema, c->schema);
    const fs::path dst = run.dir / "reports" / ("heatmap_" + c->name + ".tsv");
    write_matrix_tsv(m, dst);
    if (print) {
      if (selected.size() > 1) out << "# " << c->name << '\n';
      print_tsv_file(dst, out);
    } else {
      out << dst.string() << '\n';
    }
  }
  return kExitOk;
}

int cmd_audit(const std::string& run_dir, const std::string& corpus, std::ostream& out) {
  const LoadedRun run = load_run(run_dir);
  const auto step1 = load_checkpoint(run.dir / "checkpoints" / "step1.ckpt");
  const std::string expected = "checkpoint=" + checksum_hex(checkpoint_checksum(step1)) + " ";
  const auto selected = select_coarse(run, corpus);
  for (const Corpus* c : selected) {
    std::string header;
    const auto mask = read_mask_cache(run.dir / "masks" / (c->name + ".mask"), *c, &header);
    if (header.rfind(expected, 0) != 0)
      throw StateError("mask cache for '" + c->name + "' does not belong to this run's Step 1 checkpoint");
    if (mask.keep.size() != c->size())
      throw StateError("mask cache for '" + c->name + "' does not match the coarse corpus");
    const fs::path dst = run.dir / "reports" / ("filtering_" + c->name + ".tsv");
    {
      auto rep = open_out(dst);
      write_filtering_report(filtering_report(mask, *c), rep);
    }
    if (selected.size() > 1) out << "# " << c->name << '\n';
    print_tsv_file(dst, out);
  }
  return kExitOk;
}

int cmd_eval(const std::string& run_dir, const std::string& input, const std::string& which,
             const std::string& report_tsv, std::ostream& out) {
  const LoadedRun run = load_run(run_dir);
  Corpus corpus;
  if (!input.empty()) corpus = load_corpus(input, run.fine.schema);
  else if (run.test) corpus = *run.test;
  else if (run.dev) corpus = *run.dev;
  else throw UsageError("run has no test or dev corpus; pass --in");
  const auto model = load_checkpoint(run.dir / "checkpoints" / (which + ".ckpt"));
  const auto rep = evaluate(model, nullptr, corpus);
  print_report(rep, out);
  write_report_tsv(rep, run.dir / "reports" / ("eval_" + which + "_" + corpus.name + ".tsv"));
  if (!report_tsv.empty()) write_report_tsv(rep, fs::path(report_tsv));
  return kExitOk;
}

// ---------------------------------------------------------------- sample / generate

int cmd_sample(const std::string& in_path, int k, std::uint64_t seed, const std::string& out_path,
               std::string stats_path, std::ostream& out) {
  const Corpus corpus = load_corpus(in_path);
  const auto s = sample_kshot(corpus, k, seed);
  write_conll(s.corpus, out_path);
  if (stats_path.empty()) stats_path = out_path + ".stats.tsv";
  const auto available = count_entities(corpus);
  auto stats = open_out(stats_path);
  stats << "type\tcount\tstatus\n";
  for (std::size_t t = 0; t < s.counts.size(); ++t) {
    const auto id = static_cast<TypeId>(t);
    std::string status = "ok";
    if (available[t] == 0) status = "absent";
    else if (std::find(s.exhausted.begin(), s.exhausted.end(), id) != s.exhausted.end()) status = "exhausted";
    stats << corpus.schema.type_name(id) << '\t' << s.counts[t] << '\t' << status << '\n';
  }
  out << "sampled " << s.corpus.size() << " of " << corpus.size() << " sentences (K=" << k
      << ", range " << k << ".." << k + 5 << ")"
      << (s.normal_termination ? "" : "; some types exhausted below K") << '\n';
  return kExitOk;
}

struct GenerateFlags {
  std::uint64_t seed = 0;
  std::string out_dir;
  std::size_t fine = 200;
  std::size_t coarse = 1000;
  std::size_t test = 1000;
  double corruption = 0.0;
  bool force = false;
};

int cmd_generate(const GenerateFlags& g, std::ostream& out) {
  const fs::path dir = g.out_dir;
  if (fs::exists(dir) && !fs::is_empty(dir) && !g.force)
    throw UsageError(dir.string() + " is not empty (use --force to overwrite)");
  fs::create_directories(dir);
  auto spec = SyntheticSpec::standard();
  spec.fine_sentences = g.fine;
  spec.coarse_sentences = g.coarse;
  spec.corruption_rate = g.corruption;
  const auto data = generate_synthetic(spec, g.seed);
  auto test_spec = spec;
  test_spec.fine_sentences = g.test;
  test_spec.coarse_sentences = 0;
  const auto test = generate_synthetic(test_spec, derive_seed(g.seed, {0x7e57}));
  write_conll(data.fine, dir / "fine.conll");
  write_conll(data.coarse, dir / "coarse.conll");
  if (g.test > 0) write_conll(test.fine, dir / "test.conll");
  auto conf = open_out(dir / "cofiner.conf");
  conf << "# synthetic corpora, seed " << g.seed << '\n'
       << "data.fine = fine.conll\n"
       << "data.coarse = coarse.conll\n";
  if (g.test > 0) conf << "data.test = test.conll\n";
  conf << "train.dev_fraction = 0.1\n"
       << "fine.epochs = 30\n"
       << "coarse_model.epochs = 5\n"
       << "joint.epochs = 10\n";
  out << "wrote " << data.fine.size() << " fine, " << data.coarse.size() << " coarse, " << test.fine.size()
      << " test sentences to " << dir.string() << '\n';
  return kExitOk;
}

// ---------------------------------------------------------------- suite

std::vector<std::size_t> parse_sizes(const std::string& text) {
  std::vector<std::size_t> out;
  for (const auto& item : split_list(text)) {
    std::size_t pos = 0;
    long long v = 0;
    try {
      v = std::stoll(item, &pos);
    } catch (const std::exception&) {
      pos = 0;
    }
    if (pos != item.size() || v < 1) throw UsageError("expected a positive integer, got '" + item + "'");
    out.push_back(static_cast<std::size_t>(v));
  }
  if (out.empty()) throw UsageError("empty list");
  return out;
}

int cmd_suite_kshot(const PlanFlags& f, const std::string& ks, const std::string& seeds, std::size_t jobs,
                    const std::string& report_tsv, std::ostream& out) {
  const Resolved r = resolve(f);
  const auto k_list = parse_sizes(ks);
  std::vector<std::uint64_t> seed_list;
  if (seeds.empty()) seed_list.push_back(f.seed);
  else
    for (auto s : parse_sizes(seeds)) seed_list.push_back(s);
  RunDir run(run_path(f, "kshot", r.plan), f.force);
  snapshot(run, r, "suite-kshot");
  const auto curve = kshot_curve(r.plan, r.plan.fine, k_list, seed_list, jobs);
  const fs::path table = run.path() / "reports" / "kshot.tsv";
  {
    auto o = open_out(table);
    write_kshot_tsv(curve, o);
    auto cells = open_out(run.path() / "reports" / "kshot_cells.tsv");
    write_kshot_cells_tsv(curve, cells);
  }
  if (!report_tsv.empty()) fs::copy_file(table, report_tsv, fs::copy_options::overwrite_existing);
  print_tsv_file(table, out);
  run.commit();
  out << "run: " << run.target().string() << '\n';
  return kExitOk;
}

int cmd_suite_topk(const PlanFlags& f, const std::string& ks, const std::string& report_tsv, std::ostream& out) {
  const Resolved r = resolve(f);
  std::vector<TopK> k_list;
  for (const auto& item : split_list(ks)) k_list.push_back(parse_topk(item));
  if (k_list.empty()) throw UsageError("--k needs at least one value");
  RunDir run(run_path(f, "topk", r.plan), f.force);
  snapshot(run, r, "suite-topk");
  const auto points = topk_sweep(r.plan, k_list);
  const fs::path table = run.path() / "reports" / "topk.tsv";
  {
    auto o = open_out(table);
    write_topk_tsv(points, o);
  }
  if (!report_tsv.empty()) fs::copy_file(table, report_tsv, fs::copy_options::overwrite_existing);
  print_tsv_file(table, out);
  run.commit();
  out << "run: " << run.target().string() << '\n';
  return kExitOk;
}

int cmd_suite_ablation(const PlanFlags& f, const std::string& report_tsv, std::ostream& out) {
  const Resolved r = resolve(f);
  RunDir run(run_path(f, "ablation", r.plan), f.force);
  snapshot(run, r, "suite-ablation");
  const auto table = run_ablation(r.plan);
  const fs::path path = run.path() / "reports" / "ablation.tsv";
  {
    auto o = open_out(path);
    write_ablation_tsv(table, o);
  }
  if (!report_tsv.empty()) fs::copy_file(path, report_tsv, fs::copy_options::overwrite_existing);
  print_tsv_file(path, out);
  run.commit();
  out << "step-1 cache hits: " << table.step1_cache_hits << '\n';
  out << "run: " << run.target().string() << '\n';
  return kExitOk;
}

}  // namespace

int run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err) {
  CLI::App app{"Few-shot NER with coarse-grained corpora and a fine-to-coarse mapping"};
  app.name(args.empty() ? "cofiner" : fs::path(args[0]).filename().string());
  app.require_subcommand(1);
  bool quiet = false;
  bool verbose = false;
  app.add_flag("--quiet", quiet, "only warnings and errors on stderr");
  app.add_flag("--verbose", verbose, "debug logging");

  auto* sample = app.add_subcommand("sample", "draw a K~(K+5) few-shot subset of a CoNLL corpus");
  std::string sample_in, sample_out, sample_stats;
  int sample_k = 0;
  std::uint64_t sample_seed = 0;
  sample->add_option("--in", sample_in, "input CoNLL corpus")->required()->check(CLI::ExistingFile);
  sample->add_option("--k", sample_k, "target mentions per type")->required()->check(CLI::PositiveNumber);
  sample->add_option("--seed", sample_seed, "sampling seed")->required();
  sample->add_option("--out", sample_out, "output CoNLL path")->required();
  sample->add_option("--stats", sample_stats, "per-type counts TSV (default <out>.stats.tsv)");

  auto* generate = app.add_subcommand("generate", "write synthetic fine/coarse/test corpora and a config");
  GenerateFlags gen;
  generate->add_option("--seed", gen.seed, "generator seed")->required();
  generate->add_option("--out-dir", gen.out_dir, "output directory")->required();
  generate->add_option("--fine-sentences", gen.fine, "fine corpus size");
  generate->add_option("--coarse-sentences", gen.coarse, "coarse corpus size");
  generate->add_option("--test-sentences", gen.test, "fine test corpus size");
  generate->add_option("--corruption", gen.corruption, "fraction of coarse spans relabeled")
      ->check(CLI::Range(0.0, 1.0));
  generate->add_flag("--force", gen.force, "overwrite a non-empty directory");

  auto* train = app.add_subcommand("train", "run Steps 1-4 and write a run directory");
  PlanFlags train_flags;
  std::string train_report;
  add_plan_flags(train, train_flags);
  train->add_option("--report-tsv", train_report, "also write the final report TSV here");

  auto* matrix = app.add_subcommand("matrix", "render the F2C matrices of a run as TSV");
  std::string matrix_run, matrix_corpus;
  bool matrix_print = false;
  matrix->add_option("--run", matrix_run, "run directory")->required();
  matrix->add_option("--corpus", matrix_corpus, "only this coarse corpus");
  matrix->add_flag("--print", matrix_print, "write the heatmap TSV to stdout");

  auto* audit = app.add_subcommand("audit", "per-type filtering proportions of a run");
  std::string audit_run, audit_corpus;
  audit->add_option("--run", audit_run, "run directory")->required();
  audit->add_option("--corpus", audit_corpus, "only this coarse corpus");

  auto* eval = app.add_subcommand("eval", "span-level evaluation of a run checkpoint");
  std::string eval_run, eval_in, eval_model = "final", eval_report;
  eval->add_option("--run", eval_run, "run directory")->required();
  eval->add_option("--in", eval_in, "CoNLL corpus (default: the run's test, then dev)");
  eval->add_option("--model", eval_model, "final | step1")->check(CLI::IsMember({"final", "step1"}));
  eval->add_option("--report-tsv", eval_report, "also write the report TSV here");

  auto* suite = app.add_subcommand("suite", "experiment suites");
  suite->require_subcommand(1);
  auto* kshot = suite->add_subcommand("kshot", "K-shot curve: CoFiNER vs fine-only per K");
  PlanFlags kshot_flags;
  std::string kshot_ks = "10,20,40,80,100", kshot_seeds, kshot_report;
  std::size_t kshot_jobs = 1;
  add_plan_flags(kshot, kshot_flags);
  kshot->add_option("--k", kshot_ks, "comma-separated K values");
  kshot->add_option("--seeds", kshot_seeds, "comma-separated sampling/training seeds (default --seed)");
  kshot->add_option("--jobs", kshot_jobs, "parallel workers")->check(CLI::PositiveNumber);
  kshot->add_option("--report-tsv", kshot_report, "also write the table here");

  auto* topk = suite->add_subcommand("topk", "sweep the top-k refinement of the F2C matrix");
  PlanFlags topk_flags;
  std::string topk_ks = "1,2,3,all", topk_report;
  add_plan_flags(topk, topk_flags);
  topk->add_option("--k", topk_ks, "comma-separated k values ('all' keeps every column)");
  topk->add_option("--report-tsv", topk_report, "also write the table here");

  auto* ablation = suite->add_subcommand("ablation", "full vs no-filtering vs per-corpus vs no-coarse");
  PlanFlags ablation_flags;
  std::string ablation_report;
  add_plan_flags(ablation, ablation_flags);
  ablation->add_option("--report-tsv", ablation_report, "also write the table here");

  std::vector<const char*> argv;
  for (const auto& a : args) argv.push_back(a.c_str());
  if (argv.empty()) argv.push_back("cofiner");
  try {
    app.parse(static_cast<int>(argv.size()), argv.data());
  } catch (const CLI::ParseError& e) {
    return app.exit(e, out, err) == 0 ? kExitOk : kExitUsage;
  }

  if (quiet) log::set_level(log::Level::kWarn);
  if (verbose) log::set_level(log::Level::kDebug);

  const std::string prog = app.get_name();
  try {
    if (*sample) return cmd_sample(sample_in, sample_k, sample_seed, sample_out, sample_stats, out);
    if (*generate) return cmd_generate(gen, out);
    if (*train) return cmd_train(train_flags, train_report, out);
    if (*matrix) return cmd_matrix(matrix_run, matrix_corpus, matrix_print, out);
    if (*audit) return cmd_audit(audit_run, audit_corpus, out);
    if (*eval) return cmd_eval(eval_run, eval_in, eval_model, eval_report, out);
    if (*kshot) return cmd_suite_kshot(kshot_flags, kshot_ks, kshot_seeds, kshot_jobs, kshot_report, out);
    if (*topk) return cmd_suite_topk(topk_flags, topk_ks, topk_report, out);
    if (*ablation) return cmd_suite_ablation(ablation_flags, ablation_report, out);
  } catch (const UsageError& e) {
    err << prog << ": " << e.what() << '\n';
    return kExitUsage;
  } catch (const ArgumentError& e) {
    err << prog << ": " << e.what() << '\n';
    return kExitUsage;
  } catch (const std::exception& e) {
    err << prog << ": " << e.what() << '\n';
    return kExitRuntime;
  }
  return kExitUsage;
}

}  // namespace cofiner::cli
