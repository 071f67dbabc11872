/// @file quantizer.hpp
/// @brief Compositional codebook, indicator codes and the stacked encoder.
///
/// A database item i is represented as z_i = sum_t C_t[:, a_t(i)], one atom
/// per stage. Encoding is greedy over stages: stage t quantizes the residual
/// left by stages < t. All scoring runs in the K-dimensional latent space
/// through a K x K metric and per-item K-vector targets, so the N x N
/// similarity and residual matrices never exist.

#pragma once

#include <cstdint>
#include <span>
#include <vector>

#include "acqh/core.hpp"

namespace acqh {

using AtomIndex = std::uint16_t;

/// m stages of n atoms each, stored as one K x (m n) matrix.
class Codebook {
 public:
  Codebook() = default;
  Codebook(Matrix atoms, Index stages);

  Index dim() const { return atoms_.rows(); }
  Index stages() const { return stages_; }
  Index atoms_per_stage() const { return stages_ == 0 ? 0 : atoms_.cols() / stages_; }

  auto stage(Index t) const { return atoms_.middleCols(t * atoms_per_stage(), atoms_per_stage()); }
  const Matrix& matrix() const { return atoms_; }

 private:
  Matrix atoms_;
  Index stages_ = 0;
};

/// Per-item atom indices, item-major: the m atoms of item i are contiguous.
class IndicatorCodes {
 public:
  IndicatorCodes() = default;
  IndicatorCodes(Index stages, Index items, Index atoms_per_stage);
  /// Adopts `raw` (size stages * items, item-major) after range checking.
  IndicatorCodes(Index stages, Index items, Index atoms_per_stage, std::vector<AtomIndex> raw);

  Index stages() const { return stages_; }
  Index items() const { return items_; }
  Index atoms_per_stage() const { return atoms_; }

  AtomIndex operator()(Index stage, Index item) const {
    return codes_[static_cast<std::size_t>(item * stages_ + stage)];
  }
  void set(Index stage, Index item, AtomIndex atom);

  std::span<const AtomIndex> item(Index i) const {
    return {codes_.data() + i * stages_, static_cast<std::size_t>(stages_)};
  }
  std::span<AtomIndex> item(Index i) {
    return {codes_.data() + i * stages_, static_cast<std::size_t>(stages_)};
  }
  const std::vector<AtomIndex>& raw() const { return codes_; }

  friend bool operator==(const IndicatorCodes&, const IndicatorCodes&) = default;

 private:
  Index stages_ = 0;
  Index items_ = 0;
  Index atoms_ = 0;
  std::vector<AtomIndex> codes_;
};

/// Column i is sum_t C_t[:, codes(t, i)].
Matrix reconstruct(const Codebook& codebook, const IndicatorCodes& codes);

/// Selection matrix of one stage, C_t^T H C_t with H = G_x + G_y + lambda I.
struct StageGram {
  Matrix gram;  // n x n
  Vector diag;  // length n
};

StageGram stage_gram(const Eigen::Ref<const Matrix>& stage, const Matrix& gram_x,
                     const Matrix& gram_y, double lambda);
/// Same construction from a precombined K x K metric H.
StageGram stage_gram(const Eigen::Ref<const Matrix>& stage, const Matrix& metric);

/// Smallest j minimizing diag[j] - 2 h[j].
AtomIndex select_atom(std::span<const double> diag, std::span<const double> h);
AtomIndex select_atom(const Vector& diag, const Vector& h);

/// Partial reconstruction of the stages processed so far for one column.
class ResidualAccumulator {
 public:
  explicit ResidualAccumulator(Index dim) : z_(Vector::Zero(dim)) {}

  const Vector& partial() const { return z_; }
  Index stage() const { return stage_; }
  void add(const Eigen::Ref<const Vector>& atom) {
    z_ += atom;
    ++stage_;
  }

 private:
  Vector z_;
  Index stage_ = 0;
};

/// Factorized products shared by every column of one encoding pass.
///
/// For column i the stage-t linear term is
///   h = C_t^T [ target_i - metric * z ],
/// with target_i = (F_x + F_y) l_i + lambda (M^T l_i + t_i e_K),
/// metric = G_x + G_y + lambda I, F = E L^T, G = E E^T, E = W^T X.
struct EncodeContext {
  Matrix metric;   // K x K
  Matrix targets;  // K x N

  /// Full A-step context.
  static EncodeContext full(const Matrix& embed_x, const Matrix& embed_y, const LabelMatrix& labels,
                            const LabelRegressor& regressor, double lambda);
  /// Label-term-only context with unit weight: nearest-neighbour residual
  /// search of P = M^T L + e_K t^T in the codebook.
  static EncodeContext label_only(const LabelMatrix& labels, const LabelRegressor& regressor);
};

/// Builds the m stage Grams for `codebook` under `metric`.
std::vector<StageGram> stage_grams(const Codebook& codebook, const Matrix& metric);

/// Greedy stage-by-stage encoding of one column. Writes m atoms into `out`.
void encode_column(const Eigen::Ref<const Vector>& target, const Matrix& metric,
                   const Codebook& codebook, std::span<const StageGram> grams,
                   std::span<AtomIndex> out);
std::vector<AtomIndex> encode_column(const Eigen::Ref<const Vector>& target, const Matrix& metric,
                                     const Codebook& codebook, std::span<const StageGram> grams);

/// Encodes every column of `context.targets`. Columns are independent; any
/// thread count yields the same codes.
IndicatorCodes encode_all(const EncodeContext& context, const Codebook& codebook, int threads = 1);

}  // namespace acqh
