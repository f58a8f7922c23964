#pragma once

#include <array>
#include <cmath>
#include <cstddef>
#include <cstdint>
#include <random>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "cofiner/corpus.hpp"
#include "cofiner/error.hpp"
#include "cofiner/matrix.hpp"
#include "cofiner/rng.hpp"

namespace cofiner {

struct ModelConfig {
  std::size_t vocab_size = 4096;  // hashed buckets; bucket 0 doubles as the boundary pad
  std::size_t embed_dim = 32;
  std::size_t window = 2;  // radius
  std::size_t hidden_dim = 64;
  std::size_t num_tags = 3;
  double dropout = 0.1;
  std::uint64_t seed = 0;

  std::size_t window_slots() const noexcept { return 2 * window + 1; }
  std::size_t input_dim() const noexcept { return window_slots() * embed_dim; }
  void validate() const;

  friend bool operator==(const ModelConfig&, const ModelConfig&) = default;
};

inline constexpr std::uint32_t kBoundaryBucket = 0;

std::uint64_t fnv1a64(std::string_view bytes);
// FNV-1a of the ASCII-lowercased token, modulo vocab_size.
std::uint32_t token_bucket(std::string_view token, std::size_t vocab_size);

// Window bucket ids, token-major: ids[t * slots + j] for offset j - window.
struct SentenceFeatures {
  std::size_t num_tokens = 0;
  std::size_t slots = 0;
  std::vector<std::uint32_t> ids;

  std::span<const std::uint32_t> window(std::size_t t) const {
    return {ids.data() + t * slots, slots};
  }
};

SentenceFeatures featurize(std::span<const std::string> tokens, const ModelConfig& config);
inline SentenceFeatures featurize(const TaggedSentence& sentence, const ModelConfig& config) {
  return featurize(std::span<const std::string>(sentence.tokens), config);
}

template <typename T>
struct Parameter {
  Matrix<T> value;
  Matrix<T> grad;

  Parameter() = default;
  Parameter(std::size_t rows, std::size_t cols) : value(rows, cols), grad(rows, cols) {}
};

// Trainable tensor view handed to the optimizer.
template <typename T>
struct ParamRef {
  std::span<T> value;
  std::span<T> grad;
};

// Hashed-embedding window encoder with one ReLU hidden layer and a softmax head.
template <typename T>
class BasicTokenClassifier {
 public:
  BasicTokenClassifier() = default;

  // Random init drawn from config.seed.
  explicit BasicTokenClassifier(const ModelConfig& config) : BasicTokenClassifier(config, false) {}

  static BasicTokenClassifier zeros(const ModelConfig& config) {
    return BasicTokenClassifier(config, true);
  }

  const ModelConfig& config() const noexcept { return config_; }

  Parameter<T> embedding;  // [vocab × embed]
  Parameter<T> w1;         // [hidden × slots·embed]
  Parameter<T> b1;         // [1 × hidden]
  Parameter<T> w2;         // [tags × hidden]
  Parameter<T> b2;         // [1 × tags]

  std::array<Parameter<T>*, 5> parameters() { return {&embedding, &w1, &b1, &w2, &b2}; }
  std::array<const Parameter<T>*, 5> parameters() const {
    return {&embedding, &w1, &b1, &w2, &b2};
  }

  std::vector<ParamRef<T>> param_refs() {
    std::vector<ParamRef<T>> refs;
    for (auto* p : parameters()) refs.push_back({p->value.flat(), p->grad.flat()});
    return refs;
  }

  void zero_grad() {
    for (auto* p : parameters()) p->grad.fill(T{0});
  }

  bool all_finite() const {
    for (const auto* p : parameters()) {
      for (T x : p->value.flat())
        if (!std::isfinite(x)) return false;
      for (T x : p->grad.flat())
        if (!std::isfinite(x)) return false;
    }
    return true;
  }

  // Incremented whenever parameter values change; forward caches record it.
  std::uint64_t version() const noexcept { return version_; }
  void touch() noexcept { ++version_; }

  template <typename U>
  BasicTokenClassifier<U> cast() const {
    BasicTokenClassifier<U> out = BasicTokenClassifier<U>::zeros(config_);
    auto src = parameters();
    auto dst = out.parameters();
    for (std::size_t i = 0; i < src.size(); ++i) dst[i]->value = matrix_cast<U>(src[i]->value);
    return out;
  }

  friend bool operator==(const BasicTokenClassifier& a, const BasicTokenClassifier& b) {
    if (!(a.config_ == b.config_)) return false;
    auto pa = a.parameters();
    auto pb = b.parameters();
    for (std::size_t i = 0; i < pa.size(); ++i)
      if (!(pa[i]->value == pb[i]->value)) return false;
    return true;
  }

 private:
  BasicTokenClassifier(const ModelConfig& config, bool zero) : config_(config) {
    config_.validate();
    const std::size_t in = config_.input_dim();
    embedding = Parameter<T>(config_.vocab_size, config_.embed_dim);
    w1 = Parameter<T>(config_.hidden_dim, in);
    b1 = Parameter<T>(1, config_.hidden_dim);
    w2 = Parameter<T>(config_.num_tags, config_.hidden_dim);
    b2 = Parameter<T>(1, config_.num_tags);
    if (zero) return;
    Rng rng = make_rng(config_.seed, {0x696e6974ULL});
    auto init = [&rng](Matrix<T>& m, double scale) {
      std::uniform_real_distribution<double> dist(-scale, scale);
      for (auto& x : m.flat()) x = static_cast<T>(dist(rng));
    };
    init(embedding.value, 0.5);
    init(w1.value, std::sqrt(6.0 / static_cast<double>(in + config_.hidden_dim)));
    init(w2.value, std::sqrt(6.0 / static_cast<double>(config_.hidden_dim + config_.num_tags)));
  }

  ModelConfig config_;
  std::uint64_t version_ = 0;
};

using TokenClassifier = BasicTokenClassifier<float>;

// Per-sentence tag distributions. Row t is p^F for token t of `sentence`.
template <typename T>
struct ProbBatch {
  Matrix<T> probs;
  std::size_t sentence = 0;

  std::size_t num_tokens() const noexcept { return probs.rows(); }
};

template <typename T>
struct ForwardCache {
  const void* owner = nullptr;
  std::uint64_t version = 0;
  SentenceFeatures features;
  Matrix<T> input;        // [n × slots·embed]
  Matrix<T> pre;          // hidden pre-activation
  Matrix<T> hidden;       // after ReLU and dropout
  Matrix<T> drop_scale;   // empty in eval mode
  ProbBatch<T> out;

  bool valid() const noexcept { return owner != nullptr; }
};

namespace detail {

// Eight independent partial sums keep the reduction order fixed and let the
// compiler vectorise across lanes.
template <typename T>
inline T dot(const T* a, const T* b, std::size_t n) {
  T acc[8] = {};
  std::size_t i = 0;
  for (; i + 8 <= n; i += 8)
    for (std::size_t j = 0; j < 8; ++j) acc[j] += a[i + j] * b[i + j];
  T s = ((acc[0] + acc[1]) + (acc[2] + acc[3])) + ((acc[4] + acc[5]) + (acc[6] + acc[7]));
  for (; i < n; ++i) s += a[i] * b[i];
  return s;
}

template <typename T>
inline void axpy(T alpha, const T* x, T* y, std::size_t n) {
  for (std::size_t i = 0; i < n; ++i) y[i] += alpha * x[i];
}

template <typename T>
inline void softmax_row(std::span<T> row) {
  T mx = row[0];
  for (T v : row) mx = v > mx ? v : mx;
  T sum = 0;
  for (auto& v : row) {
    v = std::exp(v - mx);
    sum += v;
  }
  const T inv = T{1} / sum;
  for (auto& v : row) v *= inv;
}

template <typename T>
void forward_impl(const BasicTokenClassifier<T>& model, const SentenceFeatures& feats,
                  Rng* dropout_rng, ForwardCache<T>& cache) {
  const auto& cfg = model.config();
  const std::size_t n = feats.num_tokens;
  const std::size_t slots = cfg.window_slots();
  const std::size_t ed = cfg.embed_dim;
  const std::size_t in = cfg.input_dim();
  const std::size_t hd = cfg.hidden_dim;
  const std::size_t nt = cfg.num_tags;
  if (feats.slots != slots) throw ArgumentError("features built for a different window size");

  cache.owner = &model;
  cache.version = model.version();
  cache.features = feats;
  cache.input = Matrix<T>(n, in);
  cache.pre = Matrix<T>(n, hd);
  cache.hidden = Matrix<T>(n, hd);
  cache.drop_scale = Matrix<T>();
  cache.out.probs = Matrix<T>(n, nt);

  const bool use_dropout = dropout_rng != nullptr && cfg.dropout > 0.0;
  if (use_dropout) cache.drop_scale = Matrix<T>(n, hd);
  const T keep_scale = static_cast<T>(1.0 / (1.0 - cfg.dropout));
  std::uniform_real_distribution<double> unit(0.0, 1.0);

  for (std::size_t t = 0; t < n; ++t) {
    T* x = cache.input.row(t).data();
    auto ids = feats.window(t);
    for (std::size_t j = 0; j < slots; ++j) {
      if (ids[j] >= cfg.vocab_size) throw ArgumentError("feature index out of vocabulary range");
      const T* e = model.embedding.value.row(ids[j]).data();
      std::copy(e, e + ed, x + j * ed);
    }
    T* pre = cache.pre.row(t).data();
    T* h = cache.hidden.row(t).data();
    for (std::size_t k = 0; k < hd; ++k) {
      pre[k] = dot(model.w1.value.row(k).data(), x, in) + model.b1.value(0, k);
      h[k] = pre[k] > T{0} ? pre[k] : T{0};
    }
    if (use_dropout) {
      T* scale = cache.drop_scale.row(t).data();
      for (std::size_t k = 0; k < hd; ++k) {
        scale[k] = unit(*dropout_rng) < cfg.dropout ? T{0} : keep_scale;
        h[k] *= scale[k];
      }
    }
    auto logits = cache.out.probs.row(t);
    for (std::size_t c = 0; c < nt; ++c)
      logits[c] = dot(model.w2.value.row(c).data(), h, hd) + model.b2.value(0, c);
    softmax_row(logits);
  }
}

}  // namespace detail

// Training-mode forward pass (inverted dropout drawn from `rng`), caching what backward needs.
template <typename T>
ForwardCache<T> forward_train(const BasicTokenClassifier<T>& model, const SentenceFeatures& feats,
                              Rng& rng) {
  ForwardCache<T> cache;
  detail::forward_impl(model, feats, &rng, cache);
  return cache;
}

// Eval-mode forward pass (no dropout) that still records a cache.
template <typename T>
ForwardCache<T> forward_cached(const BasicTokenClassifier<T>& model, const SentenceFeatures& feats) {
  ForwardCache<T> cache;
  detail::forward_impl(model, feats, nullptr, cache);
  return cache;
}

// Eval-mode tag distributions only. Read-only on the model.
template <typename T>
Matrix<T> predict_probs(const BasicTokenClassifier<T>& model, const SentenceFeatures& feats) {
  return forward_cached(model, feats).out.probs;
}

// Accumulates dL/dparams given dL/dprobs for the cached forward pass.
template <typename T>
void backward(BasicTokenClassifier<T>& model, const ForwardCache<T>& cache,
              const Matrix<T>& grad_probs) {
  if (!cache.valid()) throw StateError("backward called without a forward cache");
  if (cache.owner != &model || cache.version != model.version())
    throw StateError("forward cache is stale for this model");
  const auto& cfg = model.config();
  const std::size_t n = cache.features.num_tokens;
  const std::size_t slots = cfg.window_slots();
  const std::size_t ed = cfg.embed_dim;
  const std::size_t in = cfg.input_dim();
  const std::size_t hd = cfg.hidden_dim;
  const std::size_t nt = cfg.num_tags;
  if (grad_probs.rows() != n || grad_probs.cols() != nt)
    throw ArgumentError("gradient shape does not match forward cache");

  std::vector<T> dlogit(nt);
  std::vector<T> dh(hd);
  std::vector<T> dx(in);
  for (std::size_t t = 0; t < n; ++t) {
    const auto p = cache.out.probs.row(t);
    const auto g = grad_probs.row(t);
    T inner = 0;
    for (std::size_t c = 0; c < nt; ++c) inner += g[c] * p[c];
    bool any = false;
    for (std::size_t c = 0; c < nt; ++c) {
      dlogit[c] = p[c] * (g[c] - inner);
      any = any || dlogit[c] != T{0};
    }
    if (!any) continue;

    const T* h = cache.hidden.row(t).data();
    std::fill(dh.begin(), dh.end(), T{0});
    for (std::size_t c = 0; c < nt; ++c) {
      if (dlogit[c] == T{0}) continue;
      detail::axpy(dlogit[c], h, model.w2.grad.row(c).data(), hd);
      model.b2.grad(0, c) += dlogit[c];
      detail::axpy(dlogit[c], model.w2.value.row(c).data(), dh.data(), hd);
    }
    const T* pre = cache.pre.row(t).data();
    const T* scale = cache.drop_scale.empty() ? nullptr : cache.drop_scale.row(t).data();
    for (std::size_t k = 0; k < hd; ++k) {
      T d = dh[k];
      if (scale) d *= scale[k];
      dh[k] = pre[k] > T{0} ? d : T{0};
    }
    const T* x = cache.input.row(t).data();
    std::fill(dx.begin(), dx.end(), T{0});
    for (std::size_t k = 0; k < hd; ++k) {
      if (dh[k] == T{0}) continue;
      detail::axpy(dh[k], x, model.w1.grad.row(k).data(), in);
      model.b1.grad(0, k) += dh[k];
      detail::axpy(dh[k], model.w1.value.row(k).data(), dx.data(), in);
    }
    auto ids = cache.features.window(t);
    for (std::size_t j = 0; j < slots; ++j)
      detail::axpy(T{1}, dx.data() + j * ed, model.embedding.grad.row(ids[j]).data(), ed);
  }
}

// Argmax with ties to the lowest index.
template <typename T>
std::size_t argmax(std::span<const T> row) {
  std::size_t best = 0;
  for (std::size_t i = 1; i < row.size(); ++i)
    if (row[i] > row[best]) best = i;
  return best;
}

}  // namespace cofiner
