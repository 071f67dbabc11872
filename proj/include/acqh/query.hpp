/// @file query.hpp
/// @brief Asymmetric lookup-table scoring of a real-valued query against
/// the quantized database.
///
/// A query q is embedded as q_hat = W^T q. The table T(t, j) = q_hat^T C_t[:, j]
/// costs O(K m n); scoring item i is then sum_t T(t, a_t(i)), m table reads per
/// item regardless of K.

#pragma once

#include <cstdint>
#include <vector>

#include "acqh/model.hpp"

namespace acqh {

struct QueryEmbedding {
  Vector q_hat;
  Modality modality = Modality::kImage;
};

/// Row-major m x n table of query/atom inner products.
class LookupTable {
 public:
  LookupTable(Index stages, Index atoms) : stages_(stages), atoms_(atoms), values_(stages * atoms) {}

  Index stages() const { return stages_; }
  Index atoms_per_stage() const { return atoms_; }
  double operator()(Index stage, Index atom) const { return values_[stage * atoms_ + atom]; }
  double& operator()(Index stage, Index atom) { return values_[stage * atoms_ + atom]; }
  const double* data() const { return values_.data(); }

 private:
  Index stages_;
  Index atoms_;
  Vector values_;
};

/// Counters for the database scan.
struct ScanStats {
  std::uint64_t table_reads = 0;
  std::uint64_t additions = 0;
};

struct Hit {
  Index item = 0;
  double score = 0.0;

  friend bool operator==(const Hit&, const Hit&) = default;
};

QueryEmbedding embed_query(const Matrix& projection, const Eigen::Ref<const Vector>& query,
                           Modality modality = Modality::kImage);

LookupTable build_lookup_table(const QueryEmbedding& query, const Codebook& codebook);

/// Scores every database item. When `stats` is non-null each table read
/// and addition is counted.
Vector score_all(const LookupTable& table, const IndicatorCodes& codes, ScanStats* stats = nullptr);

/// k best items by descending score, ties by ascending item id.
std::vector<Hit> top_k(const Vector& scores, Index k);

/// Full descending ranking of item ids under the same tie rule.
std::vector<Index> rank_all(const Vector& scores);

/// Read-only query front end over a trained model. Safe for concurrent use.
class QueryEngine {
 public:
  explicit QueryEngine(const AcqhModel& model);

  /// Applies the model's feature centering (if any) and the modality's
  /// projection.
  QueryEmbedding embed(const Eigen::Ref<const Vector>& query, Modality modality) const;
  Vector scores(const Eigen::Ref<const Vector>& query, Modality modality,
                ScanStats* stats = nullptr) const;
  std::vector<Hit> search(const Eigen::Ref<const Vector>& query, Modality modality, Index k) const;

  const AcqhModel& model() const { return model_; }

 private:
  const AcqhModel& model_;
};

}  // namespace acqh
