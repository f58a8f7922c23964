#pragma once

#include <cmath>
#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "cofiner/corpus.hpp"
#include "cofiner/error.hpp"
#include "cofiner/matrix.hpp"
#include "cofiner/model.hpp"

namespace cofiner {

// Number of coarse columns kept per fine row; nullopt keeps all of them.
using TopK = std::optional<std::size_t>;
inline constexpr TopK kTopKAll = std::nullopt;

std::string topk_name(const TopK& k);
TopK parse_topk(const std::string& text);  // "all" or a positive integer

// counts[ℓ][s]: tokens of fine type ℓ predicted as coarse type s. The last column
// collects tokens predicted as coarse O.
struct CooccurrenceMatrix {
  Matrix<std::uint64_t> counts;
  TagSchema fine;
  TagSchema coarse;
  TopK k_applied = kTopKAll;  // set by refine_topk

  std::size_t o_column() const noexcept { return coarse.num_types(); }
};

CooccurrenceMatrix count_cooccurrence(const Corpus& fine_corpus,
                                      const std::vector<std::vector<TagId>>& coarse_predictions,
                                      const TagSchema& coarse_schema);

// Zeroes the O column, then keeps the k largest coarse-type counts per row
// (ties go to the lower column index).
CooccurrenceMatrix refine_topk(const CooccurrenceMatrix& c, const TopK& k);

struct F2CMatrix {
  Matrix<double> type_level;  // [fine types × coarse types], rows sum to 1
  Matrix<double> tag_level;   // [fine tags × coarse tags]
  TagSchema fine;
  TagSchema coarse;
  TopK k_used = 1;
  std::vector<TypeId> fallback_rows;  // rows that had no counts and went uniform
  std::string provenance;

  template <typename T>
  Matrix<T> tag_level_as() const {
    return matrix_cast<T>(tag_level);
  }
};

// B-ℓ→B-s and I-ℓ→I-s carry type_level[ℓ][s]; O→O is 1; everything else 0.
Matrix<double> build_tag_level(const Matrix<double>& type_level, const TagSchema& fine,
                               const TagSchema& coarse);

// Row-normalizes the entity-type columns. All-zero rows fall back to uniform with a warning.
F2CMatrix normalize(const CooccurrenceMatrix& refined);

// Identity mapping between two identical schemas.
F2CMatrix identity_f2c(const TagSchema& schema);

// TSV: header "fine" + coarse names, then one row per fine type, 9 decimals.
void write_matrix_tsv(const F2CMatrix& m, std::ostream& out);
void write_matrix_tsv(const F2CMatrix& m, const std::filesystem::path& path);
F2CMatrix read_matrix_tsv(std::istream& in, const TagSchema& fine, const TagSchema& coarse);

// Learnable variant: type_level = row-softmax(logits); gradients reach the logits
// through p^C = p^F · M_tag and the softmax Jacobian. Disabled by default.
template <typename T>
class LearnableF2C {
 public:
  LearnableF2C() = default;

  LearnableF2C(const F2CMatrix& init, bool enabled) : base_(init), enabled_(enabled) {
    const std::size_t rows = init.type_level.rows();
    const std::size_t cols = init.type_level.cols();
    logits_ = Matrix<T>(rows, cols);
    grad_ = Matrix<T>(rows, cols);
    for (std::size_t r = 0; r < rows; ++r)
      for (std::size_t c = 0; c < cols; ++c)
        logits_(r, c) = static_cast<T>(std::log(std::max(init.type_level(r, c), kInitFloor)));
    if (enabled_) {
      refresh();
    } else {
      tag_cache_ = init.tag_level_as<T>();
    }
  }

  bool enabled() const noexcept { return enabled_; }
  const F2CMatrix& matrix() const noexcept { return base_; }
  const Matrix<T>& tag_level() const noexcept { return tag_cache_; }
  Matrix<T>& logits() noexcept { return logits_; }
  const Matrix<T>& grad() const noexcept { return grad_; }

  ParamRef<T> param() {
    if (!enabled_) throw StateError("learnable F2C mode is disabled");
    return {logits_.flat(), grad_.flat()};
  }

  // dL/dlogits += softmax-Jacobian( dL/dM ), with dL/dM_tag = p^Fᵀ · dL/dp^C.
  void accumulate(const Matrix<T>& fine_probs, const Matrix<T>& grad_coarse) {
    if (!enabled_) throw StateError("learnable F2C mode is disabled");
    const std::size_t nf = tag_cache_.rows();
    const std::size_t nc = tag_cache_.cols();
    if (fine_probs.cols() != nf || grad_coarse.cols() != nc || fine_probs.rows() != grad_coarse.rows())
      throw ArgumentError("learnable F2C gradient shapes do not match");
    Matrix<T> d_tag(nf, nc);
    for (std::size_t i = 0; i < fine_probs.rows(); ++i)
      for (std::size_t s = 0; s < nc; ++s) {
        const T g = grad_coarse(i, s);
        if (g == T{0}) continue;
        for (std::size_t l = 0; l < nf; ++l) d_tag(l, s) += fine_probs(i, l) * g;
      }
    const std::size_t rows = logits_.rows();
    const std::size_t cols = logits_.cols();
    std::vector<T> d_type(cols);
    for (std::size_t r = 0; r < rows; ++r) {
      const auto b = static_cast<std::size_t>(TagSchema::begin_tag(static_cast<TypeId>(r)));
      const auto in = static_cast<std::size_t>(TagSchema::inside_tag(static_cast<TypeId>(r)));
      T inner = 0;
      for (std::size_t c = 0; c < cols; ++c) {
        const auto cb = static_cast<std::size_t>(TagSchema::begin_tag(static_cast<TypeId>(c)));
        const auto ci = static_cast<std::size_t>(TagSchema::inside_tag(static_cast<TypeId>(c)));
        d_type[c] = d_tag(b, cb) + d_tag(in, ci);
        inner += d_type[c] * static_cast<T>(base_.type_level(r, c));
      }
      for (std::size_t c = 0; c < cols; ++c)
        grad_(r, c) += static_cast<T>(base_.type_level(r, c)) * (d_type[c] - inner);
    }
  }

  // Re-derives type_level and tag_level from the logits (after an optimizer step).
  void refresh() {
    if (!enabled_) throw StateError("learnable F2C mode is disabled");
    for (std::size_t r = 0; r < logits_.rows(); ++r) {
      T mx = logits_(r, 0);
      for (std::size_t c = 1; c < logits_.cols(); ++c) mx = std::max(mx, logits_(r, c));
      T sum = 0;
      std::vector<T> e(logits_.cols());
      for (std::size_t c = 0; c < logits_.cols(); ++c) {
        e[c] = std::exp(logits_(r, c) - mx);
        sum += e[c];
      }
      for (std::size_t c = 0; c < logits_.cols(); ++c)
        base_.type_level(r, c) = static_cast<double>(e[c] / sum);
    }
    base_.tag_level = build_tag_level(base_.type_level, base_.fine, base_.coarse);
    tag_cache_ = base_.tag_level_as<T>();
  }

 private:
  static constexpr double kInitFloor = 1e-3;

  F2CMatrix base_;
  Matrix<T> logits_;
  Matrix<T> grad_;
  Matrix<T> tag_cache_;
  bool enabled_ = false;
};

}  // namespace cofiner
