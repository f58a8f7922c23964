#include <benchmark/benchmark.h>

#include <random>
#include <string>
#include <vector>

#include "cofiner/eval.hpp"
#include "cofiner/f2c.hpp"
#include "cofiner/filtering.hpp"
#include "cofiner/log.hpp"
#include "cofiner/losses.hpp"
#include "cofiner/model.hpp"
#include "cofiner/synthetic.hpp"

using namespace cofiner;

namespace {

std::vector<std::string> tokens(std::size_t n) {
  std::vector<std::string> out;
  for (std::size_t i = 0; i < n; ++i) out.push_back("tok" + std::to_string(i * 7919 % 1000));
  return out;
}

ModelConfig default_config(std::size_t num_tags) {
  ModelConfig cfg;
  cfg.num_tags = num_tags;
  cfg.seed = 1;
  return cfg;
}

Matrix<float> uniform_tag_matrix(std::size_t fine_types, std::size_t coarse_types) {
  F2CMatrix m;
  std::vector<std::string> f, c;
  for (std::size_t i = 0; i < fine_types; ++i) f.push_back("f" + std::to_string(i));
  for (std::size_t i = 0; i < coarse_types; ++i) c.push_back("c" + std::to_string(i));
  Matrix<double> type(fine_types, coarse_types);
  for (auto& x : type.flat()) x = 1.0 / static_cast<double>(coarse_types);
  return matrix_cast<float>(build_tag_level(type, TagSchema(f), TagSchema(c)));
}

}  // namespace

static void BM_Featurize(benchmark::State& state) {
  const auto toks = tokens(static_cast<std::size_t>(state.range(0)));
  const auto cfg = default_config(25);
  for (auto _ : state) benchmark::DoNotOptimize(featurize(std::span<const std::string>(toks), cfg));
  state.SetItemsProcessed(state.iterations() * state.range(0));
}
BENCHMARK(BM_Featurize)->Arg(16)->Arg(64);

static void BM_Forward(benchmark::State& state) {
  const auto toks = tokens(static_cast<std::size_t>(state.range(0)));
  const TokenClassifier model(default_config(25));
  const auto feats = featurize(std::span<const std::string>(toks), model.config());
  for (auto _ : state) benchmark::DoNotOptimize(predict_probs(model, feats));
  state.SetItemsProcessed(state.iterations() * state.range(0));
}
BENCHMARK(BM_Forward)->Arg(16)->Arg(64);

static void BM_ForwardBackwardFine(benchmark::State& state) {
  const auto n = static_cast<std::size_t>(state.range(0));
  const auto toks = tokens(n);
  TokenClassifier model(default_config(25));
  const auto feats = featurize(std::span<const std::string>(toks), model.config());
  std::vector<TagId> gold(n);
  for (std::size_t i = 0; i < n; ++i) gold[i] = static_cast<TagId>(i % 25);
  Rng rng(3);
  for (auto _ : state) {
    const auto cache = forward_train(model, feats, rng);
    const auto loss = fine_loss(cache.out.probs, std::span<const TagId>(gold));
    backward(model, cache, loss.grad_probs);
  }
  state.SetItemsProcessed(state.iterations() * state.range(0));
}
BENCHMARK(BM_ForwardBackwardFine)->Arg(16)->Arg(64);

static void BM_CoarseLoss(benchmark::State& state) {
  const auto n = static_cast<std::size_t>(state.range(0));
  const auto m_tag = uniform_tag_matrix(12, 4);
  Matrix<float> probs(n, m_tag.rows());
  for (auto& x : probs.flat()) x = 1.0f / static_cast<float>(m_tag.rows());
  std::vector<TagId> gold(n);
  std::vector<std::uint8_t> mask(n);
  for (std::size_t i = 0; i < n; ++i) {
    gold[i] = static_cast<TagId>(i % m_tag.cols());
    mask[i] = i % 3 != 0;
  }
  for (auto _ : state)
    benchmark::DoNotOptimize(coarse_loss(probs, m_tag, std::span<const TagId>(gold),
                                         std::span<const std::uint8_t>(mask)));
  state.SetItemsProcessed(state.iterations() * state.range(0));
}
BENCHMARK(BM_CoarseLoss)->Arg(16)->Arg(64);

static void BM_RefineNormalize(benchmark::State& state) {
  const auto fine_types = static_cast<std::size_t>(state.range(0));
  CooccurrenceMatrix c;
  std::vector<std::string> f, co;
  for (std::size_t i = 0; i < fine_types; ++i) f.push_back("f" + std::to_string(i));
  for (int i = 0; i < 18; ++i) co.push_back("c" + std::to_string(i));
  c.fine = TagSchema(f);
  c.coarse = TagSchema(co);
  c.counts = Matrix<std::uint64_t>(fine_types, co.size() + 1);
  std::mt19937_64 rng(5);
  for (auto& x : c.counts.flat()) x = rng() % 50;
  for (auto _ : state) benchmark::DoNotOptimize(normalize(refine_topk(c, std::size_t{3})));
}
BENCHMARK(BM_RefineNormalize)->Arg(66)->Arg(200);

static void BM_BuildMask(benchmark::State& state) {
  log::set_level(log::Level::kError);
  auto spec = SyntheticSpec::standard();
  spec.fine_sentences = 10;
  spec.coarse_sentences = static_cast<std::size_t>(state.range(0));
  const auto data = generate_synthetic(spec, 2);
  const TokenClassifier model(default_config(data.fine.schema.num_tags()));
  F2CMatrix m;
  m.fine = data.fine.schema;
  m.coarse = data.coarse.schema;
  m.type_level = Matrix<double>(m.fine.num_types(), m.coarse.num_types());
  for (std::size_t l = 0; l < data.hierarchy.size(); ++l) m.type_level(l, data.hierarchy[l]) = 1.0;
  m.tag_level = build_tag_level(m.type_level, m.fine, m.coarse);
  for (auto _ : state) benchmark::DoNotOptimize(build_mask(model, m, data.coarse));
  state.SetItemsProcessed(state.iterations() * state.range(0));
}
BENCHMARK(BM_BuildMask)->Arg(200);

static void BM_Evaluate(benchmark::State& state) {
  log::set_level(log::Level::kError);
  auto spec = SyntheticSpec::standard();
  spec.fine_sentences = static_cast<std::size_t>(state.range(0));
  spec.coarse_sentences = 0;
  const auto data = generate_synthetic(spec, 4);
  const TokenClassifier model(default_config(data.fine.schema.num_tags()));
  for (auto _ : state) benchmark::DoNotOptimize(evaluate(model, nullptr, data.fine));
  state.SetItemsProcessed(state.iterations() * state.range(0));
}
BENCHMARK(BM_Evaluate)->Arg(200);

BENCHMARK_MAIN();
