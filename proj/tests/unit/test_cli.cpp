#include <filesystem>
#include <fstream>
#include <sstream>

#include "cli.hpp"
#include "cofiner/checkpoint.hpp"
#include "cofiner/config.hpp"
#include "cofiner/corpus.hpp"
#include "cofiner/trainer.hpp"
#include "doctest.h"

namespace fs = std::filesystem;
using namespace cofiner;

namespace {

struct Result {
  int code = -1;
  std::string out;
  std::string err;
};

Result invoke(std::vector<std::string> args) {
  args.insert(args.begin(), "cofiner");
  std::ostringstream out, err;
  Result r;
  r.code = cli::run(args, out, err);
  r.out = out.str();
  r.err = err.str();
  return r;
}

std::string slurp(const fs::path& p) {
  std::ifstream in(p);
  std::ostringstream s;
  s << in.rdbuf();
  return s.str();
}

// Fresh scratch directory per test case.
struct Scratch {
  fs::path dir;
  explicit Scratch(const std::string& name) : dir(fs::temp_directory_path() / ("cofiner_cli_" + name)) {
    fs::remove_all(dir);
    fs::create_directories(dir);
  }
  ~Scratch() {
    std::error_code ec;
    fs::remove_all(dir, ec);
  }
  std::string operator/(const std::string& leaf) const { return (dir / leaf).string(); }
};

// Small synthetic inputs plus a config that keeps training cheap.
void make_data(const Scratch& s, std::size_t fine = 80) {
  REQUIRE(invoke({"--quiet", "generate", "--seed", "5", "--out-dir", s / "data", "--fine-sentences",
               std::to_string(fine), "--coarse-sentences", "120", "--test-sentences", "40"})
              .code == 0);
  std::ofstream conf(s / "data/cofiner.conf", std::ios::app);
  conf << "model.vocab_size = 512\nmodel.embed_dim = 8\nmodel.hidden_dim = 16\nmodel.window = 1\n"
       << "fine.epochs = 2\ncoarse_model.epochs = 1\njoint.epochs = 2\ntrain.batch_size = 8\n";
}

}  // namespace

TEST_CASE("usage errors exit 2") {
  CHECK(invoke({}).code == 2);
  CHECK(invoke({"frobnicate"}).code == 2);
  CHECK(invoke({"train"}).code == 2);  // --seed is mandatory
  CHECK(invoke({"sample", "--in", "/nonexistent.conll", "--k", "3", "--seed", "1", "--out", "x"}).code == 2);
  CHECK(invoke({"--help"}).code == 0);
}

TEST_CASE("sample writes corpus and stats deterministically") {
  Scratch s("sample");
  make_data(s, 400);
  const auto a = invoke({"--quiet", "sample", "--in", s / "data/fine.conll", "--k", "3", "--seed", "7", "--out", s / "a.conll"});
  const auto b = invoke({"--quiet", "sample", "--in", s / "data/fine.conll", "--k", "3", "--seed", "7", "--out", s / "b.conll"});
  REQUIRE(a.code == 0);
  REQUIRE(b.code == 0);
  CHECK(slurp(s / "a.conll") == slurp(s / "b.conll"));
  CHECK(slurp(s / "a.conll.stats.tsv") == slurp(s / "b.conll.stats.tsv"));

  std::istringstream stats(slurp(s / "a.conll.stats.tsv"));
  std::string line;
  std::getline(stats, line);
  CHECK(line == "type\tcount\tstatus");
  std::size_t rows = 0;
  while (std::getline(stats, line)) {
    ++rows;
    const auto t1 = line.find('\t');
    const auto t2 = line.find('\t', t1 + 1);
    const auto count = std::stoul(line.substr(t1 + 1, t2 - t1 - 1));
    const auto status = line.substr(t2 + 1);
    CHECK(count <= 8);
    if (status == "ok") CHECK(count >= 3);
  }
  CHECK(rows == 12);

  CHECK(invoke({"sample", "--in", s / "missing.conll", "--k", "3", "--seed", "7", "--out", s / "c.conll"}).code == 2);
}

TEST_CASE("train writes the run directory layout and refuses to overwrite") {
  Scratch s("train");
  make_data(s);
  const std::string run = s / "run";
  const auto r = invoke({"--quiet", "train", "--config", s / "data/cofiner.conf", "--seed", "3", "--run-dir", run,
                      "--report-tsv", s / "final.tsv"});
  REQUIRE_MESSAGE(r.code == 0, r.err);
  CHECK(r.out.find("test span F1") != std::string::npos);
  for (const char* p : {"config-snapshot", "checkpoints/step1.ckpt", "checkpoints/final.ckpt",
                        "checkpoints/coarse_coarse.ckpt", "matrices/coarse.tsv", "masks/coarse.mask",
                        "reports/metrics.tsv", "reports/test.tsv", "reports/dev.tsv",
                        "reports/filtering_coarse.tsv", "data/fine.conll", "data/coarse/coarse.conll"})
    CHECK_MESSAGE(fs::exists(fs::path(run) / p), p);
  CHECK(fs::exists(s / "final.tsv"));
  CHECK(slurp(fs::path(run) / "reports/metrics.tsv").rfind("epoch\tstage\tcorpus\tloss\tdev_span_f1\n", 0) == 0);
  // No staging leftovers.
  for (const auto& e : fs::directory_iterator(s.dir))
    CHECK(e.path().filename().string().find(".partial-") == std::string::npos);

  const auto again = invoke({"--quiet", "train", "--config", s / "data/cofiner.conf", "--seed", "3", "--run-dir", run});
  CHECK(again.code == 2);
  CHECK(again.err.find("--force") != std::string::npos);

  const auto forced = invoke({"--quiet", "train", "--config", s / "data/cofiner.conf", "--seed", "3", "--run-dir", run,
                           "--force"});
  CHECK(forced.code == 0);
  // Deterministic given flags and seed.
  CHECK(forced.out == r.out);

  SUBCASE("matrix, audit and eval read the run") {
    const auto m = invoke({"matrix", "--run", run, "--print"});
    REQUIRE(m.code == 0);
    CHECK(m.out.rfind("fine\t", 0) == 0);
    CHECK(fs::exists(fs::path(run) / "reports/heatmap_coarse.tsv"));

    const auto a = invoke({"audit", "--run", run});
    REQUIRE(a.code == 0);
    CHECK(a.out.rfind("coarse_type\ttokens\tfiltered\tproportion\tdelta_f1\n", 0) == 0);

    const auto e = invoke({"--quiet", "eval", "--run", run, "--model", "step1", "--report-tsv", s / "e.tsv"});
    REQUIRE(e.code == 0);
    CHECK(fs::exists(s / "e.tsv"));
    CHECK(fs::exists(fs::path(run) / "reports/eval_step1_test.tsv"));

    CHECK(invoke({"matrix", "--run", s / "nope"}).code == 2);
    CHECK(invoke({"audit", "--run", run, "--corpus", "other"}).code == 2);
  }

  SUBCASE("a stale mask cache is reported as a runtime error") {
    std::ofstream mask(fs::path(run) / "masks/coarse.mask");
    mask << "# checkpoint=0000000000000000 matrix=x\n";
    const auto a = invoke({"audit", "--run", run});
    CHECK(a.code == 1);
  }
}

TEST_CASE("train resolves flags over config and maps --mode") {
  Scratch s("modes");
  make_data(s);
  const std::string conf = s / "data/cofiner.conf";
  const auto r = invoke({"--quiet", "train", "--config", conf, "--seed", "4", "--run-dir", s / "nc", "--mode",
                      "no-coarse", "--joint-epochs", "3"});
  REQUIRE_MESSAGE(r.code == 0, r.err);
  const auto snap = KeyValueConfig::load(fs::path(s / "nc") / "config-snapshot");
  CHECK(snap.get_bool("mode.no_coarse", false));
  CHECK(snap.get_int("joint.epochs", 0) == 3);
  CHECK(snap.get_int("train.seed", 0) == 4);
  CHECK_FALSE(fs::exists(fs::path(s / "nc") / "masks/coarse.mask"));

  // no-coarse equals a fine-only run for the summed epochs.
  TrainPlan plan;
  plan.apply(snap);
  plan.fine = read_conll(fs::path(s / "nc") / "data/fine.conll");
  plan.fine.name = "fine";
  plan.epochs.fine += plan.epochs.joint;
  const auto ctx = train_fine(plan);
  const auto final_model = load_checkpoint(fs::path(s / "nc") / "checkpoints/final.ckpt");
  CHECK(checkpoint_checksum(final_model) == checkpoint_checksum(ctx.model));

  CHECK(invoke({"--quiet", "train", "--config", conf, "--seed", "4", "--run-dir", s / "bad", "--mode", "other"}).code == 2);
  CHECK(invoke({"--quiet", "train", "--config", conf, "--seed", "4", "--run-dir", s / "bad", "--batch-size", "x"}).code == 2);
  CHECK(invoke({"--quiet", "train", "--config", conf, "--seed", "4", "--run-dir", s / "bad", "--fine", s / "none.conll"})
            .code == 1);
  CHECK_FALSE(fs::exists(s / "bad"));
}

TEST_CASE("COFINER_RUN_DIR is the default run root") {
  Scratch s("envroot");
  make_data(s);
  ::setenv("COFINER_RUN_DIR", (s / "root").c_str(), 1);
  const auto r = invoke({"--quiet", "train", "--config", s / "data/cofiner.conf", "--seed", "1", "--mode", "no-coarse"});
  ::unsetenv("COFINER_RUN_DIR");
  REQUIRE_MESSAGE(r.code == 0, r.err);
  REQUIRE(fs::exists(s / "root"));
  std::size_t runs = 0;
  for (const auto& e : fs::directory_iterator(s / "root")) {
    ++runs;
    CHECK(e.path().filename().string().rfind("train-", 0) == 0);
  }
  CHECK(runs == 1);
}

TEST_CASE("suite commands emit table-shaped TSV") {
  Scratch s("suite");
  make_data(s, 300);
  const std::string conf = s / "data/cofiner.conf";
  const auto k = invoke({"--quiet", "suite", "kshot", "--config", conf, "--seed", "2", "--run-dir", s / "ks", "--k",
                      "1,2", "--jobs", "2"});
  REQUIRE_MESSAGE(k.code == 0, k.err);
  CHECK(k.out.rfind("method\t1-shot\t2-shot\n", 0) == 0);
  CHECK(fs::exists(fs::path(s / "ks") / "reports/kshot_cells.tsv"));

  const auto t = invoke({"--quiet", "suite", "topk", "--config", conf, "--seed", "2", "--run-dir", s / "tk", "--k",
                      "1,all"});
  REQUIRE_MESSAGE(t.code == 0, t.err);
  CHECK(t.out.rfind("k\tseed\tf1\tprecision\trecall\n", 0) == 0);

  const auto a = invoke({"--quiet", "suite", "ablation", "--config", conf, "--seed", "2", "--run-dir", s / "ab"});
  REQUIRE_MESSAGE(a.code == 0, a.err);
  CHECK(a.out.find("no_filtering") != std::string::npos);
  CHECK(a.out.find("step-1 cache hits: 2") != std::string::npos);

  CHECK(invoke({"suite", "kshot", "--config", conf, "--seed", "2", "--run-dir", s / "x", "--k", "0"}).code == 2);
  CHECK(invoke({"suite"}).code == 2);
}
