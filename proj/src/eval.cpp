#include "acqh/eval.hpp"

#include <algorithm>
#include <string>

#include "acqh/query.hpp"

namespace acqh {
namespace {

void check_ranking(std::span<const Index> ranking, std::size_t universe) {
  std::vector<bool> seen(universe, false);
  for (const Index id : ranking) {
    if (id < 0 || static_cast<std::size_t>(id) >= universe) {
      throw ArgumentError("ranking: item id " + std::to_string(id) + " out of range");
    }
    if (seen[static_cast<std::size_t>(id)]) {
      throw ArgumentError("ranking: duplicate item id " + std::to_string(id));
    }
    seen[static_cast<std::size_t>(id)] = true;
  }
}

void check_split(const FeatureMatrix& queries, const LabelMatrix& query_labels,
                 const AcqhModel& model, const LabelMatrix& db_labels, Direction direction) {
  require_dim(query_labels.size(), queries.size(), "evaluation query labels");
  require_dim(query_labels.classes(), db_labels.classes(), "evaluation class count");
  require_dim(db_labels.size(), model.dims.items, "evaluation database size");
  const Index expected_dim =
      query_modality(direction) == Modality::kImage ? model.dims.dx : model.dims.dy;
  require_dim(queries.dim(), expected_dim, "evaluation query feature dim");
}

}  // namespace

const char* to_string(Direction direction) {
  return direction == Direction::kImageToText ? "I2T" : "T2I";
}

Modality query_modality(Direction direction) {
  return direction == Direction::kImageToText ? Modality::kImage : Modality::kText;
}

std::vector<std::uint8_t> relevance(const Eigen::Ref<const Vector>& query_labels,
                                    const LabelMatrix& db_labels) {
  require_dim(query_labels.size(), db_labels.classes(), "relevance class count");
  std::vector<std::uint8_t> rel(static_cast<std::size_t>(db_labels.size()), 0);
  for (Index i = 0; i < db_labels.size(); ++i) {
    rel[static_cast<std::size_t>(i)] = similarity_entry(query_labels, db_labels.column(i)) >= 1;
  }
  return rel;
}

double average_precision(std::span<const Index> ranking, std::span<const std::uint8_t> rel) {
  check_ranking(ranking, rel.size());
  double sum = 0.0;
  std::size_t hits = 0;
  for (std::size_t r = 0; r < ranking.size(); ++r) {
    if (rel[static_cast<std::size_t>(ranking[r])]) {
      ++hits;
      sum += static_cast<double>(hits) / static_cast<double>(r + 1);
    }
  }
  return hits == 0 ? 0.0 : sum / static_cast<double>(hits);
}

std::vector<TopNPoint> topn_precision_curve(std::span<const Index> ranking,
                                            std::span<const std::uint8_t> rel, Index points) {
  check_ranking(ranking, rel.size());
  if (points < 1) throw ArgumentError("topn_precision_curve: points must be >= 1");
  const auto len = static_cast<Index>(ranking.size());
  std::vector<TopNPoint> curve;
  if (len == 0) return curve;

  std::vector<Index> prefix(ranking.size() + 1, 0);
  for (std::size_t r = 0; r < ranking.size(); ++r) {
    prefix[r + 1] = prefix[r] + (rel[static_cast<std::size_t>(ranking[r])] ? 1 : 0);
  }
  for (Index p = 1; p <= points; ++p) {
    const Index cut = std::max<Index>(1, (p * len + points / 2) / points);
    if (!curve.empty() && curve.back().n >= cut) continue;
    curve.push_back(TopNPoint{cut, static_cast<double>(prefix[static_cast<std::size_t>(cut)]) /
                                       static_cast<double>(cut)});
  }
  return curve;
}

std::vector<PrPoint> precision_recall_curve(std::span<const Index> ranking,
                                            std::span<const std::uint8_t> rel) {
  check_ranking(ranking, rel.size());
  const auto total = static_cast<double>(std::count(rel.begin(), rel.end(), std::uint8_t{1}));
  std::vector<PrPoint> curve;
  if (total == 0.0) return curve;
  std::size_t hits = 0;
  for (std::size_t r = 0; r < ranking.size(); ++r) {
    if (rel[static_cast<std::size_t>(ranking[r])]) {
      ++hits;
      curve.push_back(PrPoint{static_cast<double>(hits) / total,
                              static_cast<double>(hits) / static_cast<double>(r + 1)});
    }
  }
  return curve;
}

double mean_average_precision(const FeatureMatrix& queries, const LabelMatrix& query_labels,
                              const AcqhModel& model, const LabelMatrix& db_labels,
                              Direction direction) {
  check_split(queries, query_labels, model, db_labels, direction);
  const QueryEngine engine(model);
  const Modality modality = query_modality(direction);
  double sum = 0.0;
  for (Index q = 0; q < queries.size(); ++q) {
    const std::vector<Index> ranking = rank_all(engine.scores(queries.data().col(q), modality));
    sum += average_precision(ranking, relevance(query_labels.column(q), db_labels));
  }
  return sum / static_cast<double>(queries.size());
}

RetrievalReport evaluate_retrieval(const FeatureMatrix& queries, const LabelMatrix& query_labels,
                                   const AcqhModel& model, const LabelMatrix& db_labels,
                                   Direction direction, Index topn_points) {
  check_split(queries, query_labels, model, db_labels, direction);
  const QueryEngine engine(model);
  const Modality modality = query_modality(direction);

  RetrievalReport report;
  report.direction = direction;
  constexpr int kRecallLevels = 11;
  std::vector<double> pr_sum(kRecallLevels, 0.0);
  std::vector<double> topn_sum;

  for (Index q = 0; q < queries.size(); ++q) {
    const std::vector<Index> ranking = rank_all(engine.scores(queries.data().col(q), modality));
    const std::vector<std::uint8_t> rel = relevance(query_labels.column(q), db_labels);
    report.map += average_precision(ranking, rel);

    const std::vector<TopNPoint> topn = topn_precision_curve(ranking, rel, topn_points);
    if (report.topn.empty()) {
      report.topn = topn;
      topn_sum.assign(topn.size(), 0.0);
    }
    for (std::size_t p = 0; p < topn.size(); ++p) topn_sum[p] += topn[p].precision;

    // Interpolated precision: best precision at any recall >= level.
    const std::vector<PrPoint> pr = precision_recall_curve(ranking, rel);
    for (int level = 0; level < kRecallLevels; ++level) {
      const double r = level / 10.0;
      double best = 0.0;
      for (const PrPoint& pt : pr) {
        if (pt.recall + 1e-12 >= r) best = std::max(best, pt.precision);
      }
      pr_sum[static_cast<std::size_t>(level)] += best;
    }
  }

  const auto count = static_cast<double>(queries.size());
  report.map /= count;
  for (std::size_t p = 0; p < report.topn.size(); ++p) report.topn[p].precision = topn_sum[p] / count;
  for (int level = 0; level < kRecallLevels; ++level) {
    report.pr.push_back(PrPoint{level / 10.0, pr_sum[static_cast<std::size_t>(level)] / count});
  }
  return report;
}

}  // namespace acqh
