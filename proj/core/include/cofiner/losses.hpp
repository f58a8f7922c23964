#pragma once

#include <cmath>
#include <cstdint>
#include <span>

#include "cofiner/corpus.hpp"
#include "cofiner/error.hpp"
#include "cofiner/matrix.hpp"

namespace cofiner {

// Probabilities below this are clamped inside log(); the clamped region has zero gradient.
inline constexpr double kLogFloor = 1e-12;

// Denominator of the masked coarse loss.
enum class CoarseNormalization {
  kAllTokens,  // 1/m over every token of the sentence
  kSurviving,  // 1/(number of unmasked tokens)
};

template <typename T>
struct LossResult {
  double loss = 0.0;
  Matrix<T> grad_probs;   // dL/dp^F
  Matrix<T> grad_coarse;  // dL/dp^C (coarse loss only)
};

// Mean token cross-entropy against fine gold tags.
template <typename T>
LossResult<T> fine_loss(const Matrix<T>& probs, std::span<const TagId> gold) {
  const std::size_t n = probs.rows();
  if (gold.size() != n) throw ArgumentError("gold length does not match number of tokens");
  LossResult<T> r;
  r.grad_probs = Matrix<T>(n, probs.cols());
  if (n == 0) return r;
  const T inv_n = T{1} / static_cast<T>(n);
  double sum = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    const TagId g = gold[i];
    if (g < 0 || static_cast<std::size_t>(g) >= probs.cols())
      throw ArgumentError("gold tag index out of range");
    const T p = probs(i, static_cast<std::size_t>(g));
    if (static_cast<double>(p) < kLogFloor) {
      sum += std::log(kLogFloor);
      continue;
    }
    sum += static_cast<double>(std::log(p));
    r.grad_probs(i, static_cast<std::size_t>(g)) = -inv_n / p;
  }
  r.loss = -sum / static_cast<double>(n);
  return r;
}

// Masked cross-entropy on p^C = p^F · M (M is tag level, fine tags × coarse tags).
// Masked-out tokens contribute nothing; the gradient flows back through M.
template <typename T>
LossResult<T> coarse_loss(const Matrix<T>& probs, const Matrix<T>& m_tag,
                          std::span<const TagId> gold, std::span<const std::uint8_t> mask,
                          CoarseNormalization norm = CoarseNormalization::kAllTokens) {
  const std::size_t n = probs.rows();
  const std::size_t nf = probs.cols();
  const std::size_t nc = m_tag.cols();
  if (m_tag.rows() != nf) throw ArgumentError("F2C matrix rows do not match fine tag count");
  if (gold.size() != n || mask.size() != n)
    throw ArgumentError("gold/mask length does not match number of tokens");
  LossResult<T> r;
  r.grad_probs = Matrix<T>(n, nf);
  r.grad_coarse = Matrix<T>(n, nc);
  if (n == 0) return r;

  std::size_t denom = n;
  if (norm == CoarseNormalization::kSurviving) {
    denom = 0;
    for (auto m : mask) denom += m ? 1 : 0;
    if (denom == 0) return r;
  }
  const T inv = T{1} / static_cast<T>(denom);
  double sum = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    const TagId g = gold[i];
    if (g < 0 || static_cast<std::size_t>(g) >= nc) throw ArgumentError("coarse gold tag out of range");
    if (!mask[i]) continue;
    const auto gs = static_cast<std::size_t>(g);
    T pc = 0;
    for (std::size_t l = 0; l < nf; ++l) pc += probs(i, l) * m_tag(l, gs);
    if (static_cast<double>(pc) < kLogFloor) {
      sum += std::log(kLogFloor);
      continue;
    }
    sum += static_cast<double>(std::log(pc));
    const T gc = -inv / pc;
    r.grad_coarse(i, gs) = gc;
    for (std::size_t l = 0; l < nf; ++l) r.grad_probs(i, l) = m_tag(l, gs) * gc;
  }
  r.loss = -sum / static_cast<double>(denom);
  return r;
}

}  // namespace cofiner
