/// @file eval.hpp
/// @brief Ranked-retrieval metrics: MAP, topN-precision and precision-recall.
///
/// Relevance is label overlap: database item i is relevant to a query iff
/// they share at least one class. Metrics consume rankings (already tie-broken
/// by ascending item id), never raw scores.

#pragma once

#include <cstdint>
#include <span>
#include <vector>

#include "acqh/model.hpp"

namespace acqh {

enum class Direction { kImageToText, kTextToImage };

const char* to_string(Direction direction);

/// Modality of the query features for a retrieval direction.
Modality query_modality(Direction direction);

std::vector<std::uint8_t> relevance(const Eigen::Ref<const Vector>& query_labels,
                                    const LabelMatrix& db_labels);

/// AP over the full ranking; 0 when nothing relevant is retrieved.
double average_precision(std::span<const Index> ranking, std::span<const std::uint8_t> rel);

struct TopNPoint {
  Index n = 0;
  double precision = 0.0;
};

/// precision@N on an evenly spaced grid of `points` cut-offs ending at the
/// ranking length (duplicates removed).
std::vector<TopNPoint> topn_precision_curve(std::span<const Index> ranking,
                                            std::span<const std::uint8_t> rel, Index points);

struct PrPoint {
  double recall = 0.0;
  double precision = 0.0;
};

/// One point per rank at which a relevant item appears.
std::vector<PrPoint> precision_recall_curve(std::span<const Index> ranking,
                                            std::span<const std::uint8_t> rel);

/// Mean AP over every query in the split, each ranking the whole database.
double mean_average_precision(const FeatureMatrix& queries, const LabelMatrix& query_labels,
                              const AcqhModel& model, const LabelMatrix& db_labels,
                              Direction direction);

struct RetrievalReport {
  Direction direction = Direction::kImageToText;
  double map = 0.0;
  std::vector<TopNPoint> topn;  // averaged over queries
  std::vector<PrPoint> pr;      // 11-point interpolated, averaged over queries
};

RetrievalReport evaluate_retrieval(const FeatureMatrix& queries, const LabelMatrix& query_labels,
                                   const AcqhModel& model, const LabelMatrix& db_labels,
                                   Direction direction, Index topn_points = 20);

}  // namespace acqh
