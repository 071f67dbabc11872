/// @file model.hpp
/// @brief The trained artifact and the training objective.

#pragma once

#include "acqh/core.hpp"
#include "acqh/quantizer.hpp"

namespace acqh {

struct Dims {
  Index dx = 0;
  Index dy = 0;
  Index classes = 0;
  Index items = 0;

  friend bool operator==(const Dims&, const Dims&) = default;
};

/// Optional per-modality mean subtracted from features before projection.
/// Empty vectors mean no centering.
struct FeatureCentering {
  Vector mean_x;
  Vector mean_y;

  bool enabled() const { return mean_x.size() > 0; }
  const Vector& for_modality(Modality modality) const {
    return modality == Modality::kImage ? mean_x : mean_y;
  }
};

struct AcqhModel {
  Hyperparams hyper;
  Dims dims;
  Projections projections;
  Codebook codebook;
  IndicatorCodes codes;
  LabelRegressor regressor;
  FeatureCentering centering;

  /// Throws DimensionError if any block disagrees with dims/hyper.
  void validate() const;
};

/// Per-term breakdown of
///   ||(W_x^T X)^T CA - S||^2 + ||(W_y^T Y)^T CA - S||^2
///   + lambda ||CA - M^T L - e_K t^T||^2 + mu ||M||^2,   S = L^T L.
struct ObjectiveTerms {
  double image = 0.0;
  double text = 0.0;
  double label = 0.0;       // already multiplied by lambda
  double regularizer = 0.0; // already multiplied by mu

  double total() const { return image + text + label + regularizer; }
};

/// Evaluates the objective in factorized form; cost is O(N (K^2 + KC + dK))
/// and S is never formed.
ObjectiveTerms objective_terms(const FeatureMatrix& x, const FeatureMatrix& y,
                               const LabelMatrix& labels, const AcqhModel& model);

double objective(const FeatureMatrix& x, const FeatureMatrix& y, const LabelMatrix& labels,
                 const AcqhModel& model);

/// ||E^T Z - L^T L||_F^2 from K x K and K x C products only.
double similarity_fit(const Matrix& embed, const Matrix& recon, const Matrix& labels);

}  // namespace acqh
