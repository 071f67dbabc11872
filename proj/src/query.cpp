#include "acqh/query.hpp"

#include <algorithm>
#include <numeric>
#include <string>

namespace acqh {
namespace {

template <bool kCount>
void scan(const LookupTable& table, const IndicatorCodes& codes, Vector& out, ScanStats* stats) {
  const Index m = codes.stages();
  const Index n = table.atoms_per_stage();
  const double* values = table.data();
  const AtomIndex* atoms = codes.raw().data();
  std::uint64_t reads = 0;
  std::uint64_t adds = 0;
  for (Index i = 0; i < codes.items(); ++i) {
    const AtomIndex* a = atoms + i * m;
    double s = values[a[0]];
    if constexpr (kCount) ++reads;
    for (Index t = 1; t < m; ++t) {
      s += values[t * n + a[t]];
      if constexpr (kCount) {
        ++reads;
        ++adds;
      }
    }
    out[i] = s;
  }
  if constexpr (kCount) {
    stats->table_reads += reads;
    stats->additions += adds;
  }
}

bool ranks_before(const Vector& scores, Index a, Index b) {
  if (scores[a] != scores[b]) return scores[a] > scores[b];
  return a < b;
}

}  // namespace

QueryEmbedding embed_query(const Matrix& projection, const Eigen::Ref<const Vector>& query,
                           Modality modality) {
  require_dim(query.size(), projection.rows(), "embed_query feature length");
  return QueryEmbedding{projection.transpose() * query, modality};
}

LookupTable build_lookup_table(const QueryEmbedding& query, const Codebook& codebook) {
  require_dim(query.q_hat.size(), codebook.dim(), "build_lookup_table embedding length");
  const Index m = codebook.stages();
  const Index n = codebook.atoms_per_stage();
  LookupTable table(m, n);
  const Eigen::RowVectorXd products = query.q_hat.transpose() * codebook.matrix();
  for (Index t = 0; t < m; ++t) {
    for (Index j = 0; j < n; ++j) table(t, j) = products[t * n + j];
  }
  return table;
}

Vector score_all(const LookupTable& table, const IndicatorCodes& codes, ScanStats* stats) {
  require_dim(codes.stages(), table.stages(), "score_all stage count");
  if (codes.atoms_per_stage() > table.atoms_per_stage()) {
    throw CodeError("score_all: codes address atoms beyond the table width");
  }
  Vector out(codes.items());
  if (codes.items() == 0) return out;
  if (stats != nullptr) {
    scan<true>(table, codes, out, stats);
  } else {
    scan<false>(table, codes, out, nullptr);
  }
  return out;
}

std::vector<Hit> top_k(const Vector& scores, Index k) {
  if (k < 1 || k > scores.size()) {
    throw ArgumentError("top_k: k=" + std::to_string(k) + " outside [1, " +
                        std::to_string(scores.size()) + "]");
  }
  std::vector<Index> ids(static_cast<std::size_t>(scores.size()));
  std::iota(ids.begin(), ids.end(), Index{0});
  std::partial_sort(ids.begin(), ids.begin() + k, ids.end(),
                    [&](Index a, Index b) { return ranks_before(scores, a, b); });
  std::vector<Hit> hits;
  hits.reserve(static_cast<std::size_t>(k));
  for (Index r = 0; r < k; ++r) {
    const Index id = ids[static_cast<std::size_t>(r)];
    hits.push_back(Hit{id, scores[id]});
  }
  return hits;
}

std::vector<Index> rank_all(const Vector& scores) {
  std::vector<Index> ids(static_cast<std::size_t>(scores.size()));
  std::iota(ids.begin(), ids.end(), Index{0});
  std::sort(ids.begin(), ids.end(), [&](Index a, Index b) { return ranks_before(scores, a, b); });
  return ids;
}

QueryEngine::QueryEngine(const AcqhModel& model) : model_(model) { model_.validate(); }

QueryEmbedding QueryEngine::embed(const Eigen::Ref<const Vector>& query, Modality modality) const {
  const Matrix& w = model_.projections.for_modality(modality);
  if (model_.centering.enabled()) {
    const Vector& mean = model_.centering.for_modality(modality);
    require_dim(query.size(), mean.size(), "QueryEngine feature length");
    return embed_query(w, query - mean, modality);
  }
  return embed_query(w, query, modality);
}

Vector QueryEngine::scores(const Eigen::Ref<const Vector>& query, Modality modality,
                           ScanStats* stats) const {
  const LookupTable table = build_lookup_table(embed(query, modality), model_.codebook);
  return score_all(table, model_.codes, stats);
}

std::vector<Hit> QueryEngine::search(const Eigen::Ref<const Vector>& query, Modality modality,
                                     Index k) const {
  return top_k(scores(query, modality), k);
}

}  // namespace acqh
