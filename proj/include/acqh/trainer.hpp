/// @file trainer.hpp
/// @brief Alternating optimization of projections, regressor, drift,
/// codebook and indicator codes.
///
/// One outer iteration runs, in order:
///   W_x, W_y  closed-form least squares against S = L^T L
///   M         ridge regression of CA - e_K t^T on L (skipped when lambda = 0)
///   t         per-item mean of CA - M^T L (skipped when lambda = 0)
///   C         closed-form codebook given A
///   A         greedy stacked encoding
/// Every matrix inverse carries a trace-scaled ridge so rank-deficient Grams
/// (N < d, unused atoms, collinear labels) stay solvable. A closed-form
/// result that would raise the objective is discarded, so the first four
/// steps never increase it.

#pragma once

#include <functional>
#include <optional>
#include <vector>

#include "acqh/model.hpp"

namespace acqh {

/// ridge_eps * trace(gram) / dim, or ridge_eps when the trace is zero.
double effective_ridge(const Matrix& gram, double ridge_eps);

/// W = (F F^T + e1 I)^{-1} (F L^T)(L Z^T) (Z Z^T + e2 I)^{-1}.
Matrix update_projection(const FeatureMatrix& features, const LabelMatrix& labels,
                         const Matrix& recon, double ridge_eps);

/// M = (L L^T + (mu/lambda) I)^{-1} L (Z - e_K t^T)^T. Returns nullopt when
/// lambda = 0 (the step is skipped). A ridge is added only when mu = 0.
std::optional<Matrix> update_regressor(const LabelMatrix& labels, const Matrix& recon,
                                       const Vector& drift, double lambda, double mu,
                                       double ridge_eps);

/// t_i = mean over the K coordinates of column i of (Z - M^T L).
Vector update_drift(const Matrix& recon, const Matrix& regression, const LabelMatrix& labels);

/// One-hot co-occurrence A A^T (mn x mn) assembled from atom indices.
Matrix code_cooccurrence(const IndicatorCodes& codes);

/// C = (G_x + G_y + lambda I + e1 I)^{-1} R A^T (A A^T + e2 I)^{-1},
/// R A^T = (F_x + F_y + lambda M^T)(L A^T) + lambda e_K (A t)^T.
Codebook update_codebook(const Matrix& embed_x, const Matrix& embed_y, const LabelMatrix& labels,
                         const IndicatorCodes& codes, const LabelRegressor& regressor,
                         double lambda, double ridge_eps);

/// Random M and C (standard normal, seeded, M first), t = 0, A by residual
/// nearest-neighbour search of a standard normal K x N target drawn next,
/// then one projection update for each modality.
AcqhModel init_model(const FeatureMatrix& x, const FeatureMatrix& y, const LabelMatrix& labels,
                     const Hyperparams& hyper);

enum class Block { kProjectionX, kProjectionY, kRegressor, kDrift, kCodebook, kCodes };

const char* to_string(Block block);

struct TraceRecord {
  int iteration = 0;  // 0 is the initialized model
  ObjectiveTerms terms;
  double relative_change = 0.0;  // vs the previous record; 0 for iteration 0
};

/// Called after every block update with the model in its updated state.
using StepObserver = std::function<void(int iteration, Block block, const AcqhModel& model)>;

struct TrainOptions {
  bool center = false;
  int threads = 1;
  StepObserver observer;
};

struct TrainResult {
  AcqhModel model;
  std::vector<TraceRecord> trace;
  bool converged = false;
};

/// Runs init_model and up to hyper.max_iters outer iterations, stopping once
/// the relative objective change drops below hyper.tol.
TrainResult train(const FeatureMatrix& x, const FeatureMatrix& y, const LabelMatrix& labels,
                  const Hyperparams& hyper, const TrainOptions& options = {});

}  // namespace acqh
