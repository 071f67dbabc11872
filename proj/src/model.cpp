#include "acqh/model.hpp"

#include <algorithm>
#include <cmath>

namespace acqh {

void AcqhModel::validate() const {
  const Index k = hyper.bits;
  require_dim(projections.wx.rows(), dims.dx, "model W_x rows");
  require_dim(projections.wx.cols(), k, "model W_x cols");
  require_dim(projections.wy.rows(), dims.dy, "model W_y rows");
  require_dim(projections.wy.cols(), k, "model W_y cols");
  require_dim(codebook.dim(), k, "model codebook dim");
  require_dim(codebook.stages(), hyper.codebooks, "model codebook stages");
  require_dim(codebook.atoms_per_stage(), hyper.atoms, "model codebook atoms");
  require_dim(codes.stages(), hyper.codebooks, "model code stages");
  require_dim(codes.items(), dims.items, "model code items");
  require_dim(codes.atoms_per_stage(), hyper.atoms, "model code atoms");
  require_dim(regressor.m.rows(), dims.classes, "model M rows");
  require_dim(regressor.m.cols(), k, "model M cols");
  require_dim(regressor.drift.size(), dims.items, "model drift length");
  if (centering.enabled()) {
    require_dim(centering.mean_x.size(), dims.dx, "model image mean length");
    require_dim(centering.mean_y.size(), dims.dy, "model text mean length");
  }
}

double similarity_fit(const Matrix& embed, const Matrix& recon, const Matrix& labels) {
  // ||E^T Z||^2 = <E E^T, Z Z^T>,  <E^T Z, L^T L> = <E L^T, Z L^T>,
  // ||L^T L||^2 = ||L L^T||^2.
  const Matrix gram_e = embed * embed.transpose();
  const Matrix gram_z = recon * recon.transpose();
  const Matrix label_gram = labels * labels.transpose();
  const double fit = gram_e.cwiseProduct(gram_z).sum();
  const double cross = (embed * labels.transpose()).cwiseProduct(recon * labels.transpose()).sum();
  const double target = label_gram.squaredNorm();
  return std::max(0.0, fit - 2.0 * cross + target);
}

ObjectiveTerms objective_terms(const FeatureMatrix& x, const FeatureMatrix& y,
                               const LabelMatrix& labels, const AcqhModel& model) {
  model.validate();
  require_dim(x.dim(), model.dims.dx, "objective image dim");
  require_dim(y.dim(), model.dims.dy, "objective text dim");
  require_dim(x.size(), model.dims.items, "objective image items");
  require_dim(y.size(), model.dims.items, "objective text items");
  require_dim(labels.size(), model.dims.items, "objective label items");
  require_dim(labels.classes(), model.dims.classes, "objective classes");

  const Matrix recon = reconstruct(model.codebook, model.codes);
  const Matrix embed_x = model.projections.wx.transpose() * x.data();
  const Matrix embed_y = model.projections.wy.transpose() * y.data();

  ObjectiveTerms terms;
  terms.image = similarity_fit(embed_x, recon, labels.data());
  terms.text = similarity_fit(embed_y, recon, labels.data());
  if (model.hyper.lambda != 0.0) {
    Matrix residual = recon - model.regressor.m.transpose() * labels.data();
    residual.rowwise() -= model.regressor.drift.transpose();
    terms.label = model.hyper.lambda * residual.squaredNorm();
  }
  terms.regularizer = model.hyper.mu * model.regressor.m.squaredNorm();

  const double total = terms.total();
  if (!std::isfinite(total)) throw NumericError("objective: non-finite value");
  return terms;
}

double objective(const FeatureMatrix& x, const FeatureMatrix& y, const LabelMatrix& labels,
                 const AcqhModel& model) {
  return objective_terms(x, y, labels, model).total();
}

}  // namespace acqh
