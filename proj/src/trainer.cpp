#include "acqh/trainer.hpp"

#include <cmath>
#include <limits>
#include <random>
#include <string>
#include <utility>

namespace acqh {
namespace {

Matrix ridged(Matrix gram, double ridge_eps) {
  gram.diagonal().array() += effective_ridge(gram, ridge_eps);
  return gram;
}

// Solves sym * X = rhs for symmetric positive definite `sym`.
Matrix spd_solve(const Matrix& sym, const Matrix& rhs, const char* what) {
  Eigen::LDLT<Matrix> ldlt(sym);
  if (ldlt.info() != Eigen::Success) {
    throw NumericError(std::string(what) + ": factorization failed");
  }
  Matrix out = ldlt.solve(rhs);
  require_finite(out, what);
  return out;
}

template <typename Fn>
auto with_context(const std::string& context, Fn&& fn) -> decltype(fn()) {
  try {
    return fn();
  } catch (const NumericError& e) {
    throw NumericError(context + ": " + e.what());
  } catch (const DimensionError& e) {
    throw DimensionError(context + ": " + e.what());
  } catch (const CodeError& e) {
    throw CodeError(context + ": " + e.what());
  }
}

}  // namespace

double effective_ridge(const Matrix& gram, double ridge_eps) {
  const double trace = gram.trace();
  if (gram.rows() == 0 || !(trace > 0.0)) return ridge_eps;
  return ridge_eps * trace / static_cast<double>(gram.rows());
}

Matrix update_projection(const FeatureMatrix& features, const LabelMatrix& labels,
                         const Matrix& recon, double ridge_eps) {
  const Matrix& f = features.data();
  require_dim(labels.size(), f.cols(), "update_projection label items");
  require_dim(recon.cols(), f.cols(), "update_projection reconstruction items");

  const Matrix feat_gram = ridged(f * f.transpose(), ridge_eps);
  const Matrix recon_gram = ridged(recon * recon.transpose(), ridge_eps);
  // F S Z^T with S = L^T L, grouped as (F L^T)(L Z^T).
  const Matrix cross = (f * labels.data().transpose()) * (labels.data() * recon.transpose());
  const Matrix left = spd_solve(feat_gram, cross, "update_projection");
  // left * recon_gram^{-1}; recon_gram is symmetric.
  return spd_solve(recon_gram, left.transpose(), "update_projection").transpose();
}

std::optional<Matrix> update_regressor(const LabelMatrix& labels, const Matrix& recon,
                                       const Vector& drift, double lambda, double mu,
                                       double ridge_eps) {
  if (lambda == 0.0) return std::nullopt;
  require_dim(recon.cols(), labels.size(), "update_regressor reconstruction items");
  require_dim(drift.size(), labels.size(), "update_regressor drift length");

  const Matrix& l = labels.data();
  Matrix system = l * l.transpose();
  if (mu == 0.0) {
    system = ridged(std::move(system), ridge_eps);
  } else {
    system.diagonal().array() += mu / lambda;
  }
  Matrix shifted = recon;
  shifted.rowwise() -= drift.transpose();
  return spd_solve(system, l * shifted.transpose(), "update_regressor");
}

Vector update_drift(const Matrix& recon, const Matrix& regression, const LabelMatrix& labels) {
  require_dim(regression.cols(), recon.rows(), "update_drift latent dim");
  require_dim(regression.rows(), labels.classes(), "update_drift classes");
  require_dim(recon.cols(), labels.size(), "update_drift items");
  const Matrix residual = recon - regression.transpose() * labels.data();
  return residual.colwise().mean().transpose();
}

Matrix code_cooccurrence(const IndicatorCodes& codes) {
  const Index m = codes.stages();
  const Index n = codes.atoms_per_stage();
  Matrix co = Matrix::Zero(m * n, m * n);
  for (Index i = 0; i < codes.items(); ++i) {
    const auto atoms = codes.item(i);
    for (Index s = 0; s < m; ++s) {
      const Index row = s * n + atoms[static_cast<std::size_t>(s)];
      for (Index u = 0; u < m; ++u) {
        co(row, u * n + atoms[static_cast<std::size_t>(u)]) += 1.0;
      }
    }
  }
  return co;
}

Codebook update_codebook(const Matrix& embed_x, const Matrix& embed_y, const LabelMatrix& labels,
                         const IndicatorCodes& codes, const LabelRegressor& regressor,
                         double lambda, double ridge_eps) {
  const Index k = embed_x.rows();
  const Index m = codes.stages();
  const Index n = codes.atoms_per_stage();
  const Index items = labels.size();
  require_dim(embed_y.rows(), k, "update_codebook latent dim");
  require_dim(embed_x.cols(), items, "update_codebook image items");
  require_dim(embed_y.cols(), items, "update_codebook text items");
  require_dim(codes.items(), items, "update_codebook code items");

  const Matrix& l = labels.data();

  // L A^T (C x mn) and A t (mn), accumulated from atom indices.
  Matrix label_code = Matrix::Zero(l.rows(), m * n);
  Vector drift_code = Vector::Zero(m * n);
  const bool use_label_term = lambda != 0.0;
  if (use_label_term) {
    require_dim(regressor.m.cols(), k, "update_codebook regressor latent dim");
    require_dim(regressor.drift.size(), items, "update_codebook drift length");
  }
  for (Index i = 0; i < items; ++i) {
    const auto atoms = codes.item(i);
    for (Index s = 0; s < m; ++s) {
      const Index col = s * n + atoms[static_cast<std::size_t>(s)];
      label_code.col(col) += l.col(i);
      if (use_label_term) drift_code[col] += regressor.drift[i];
    }
  }

  Matrix left_factor = (embed_x + embed_y) * l.transpose();  // F_x + F_y
  if (use_label_term) left_factor += lambda * regressor.m.transpose();
  Matrix rhs = left_factor * label_code;
  if (use_label_term) rhs.rowwise() += lambda * drift_code.transpose();

  Matrix metric = embed_x * embed_x.transpose() + embed_y * embed_y.transpose();
  metric.diagonal().array() += lambda;
  const Matrix left = spd_solve(ridged(std::move(metric), ridge_eps), rhs, "update_codebook");
  const Matrix co = ridged(code_cooccurrence(codes), ridge_eps);
  Matrix atoms = spd_solve(co, left.transpose(), "update_codebook").transpose();
  return Codebook(std::move(atoms), m);
}

AcqhModel init_model(const FeatureMatrix& x, const FeatureMatrix& y, const LabelMatrix& labels,
                     const Hyperparams& hyper) {
  hyper.validate(x.dim(), y.dim());
  require_dim(y.size(), x.size(), "init_model text items");
  require_dim(labels.size(), x.size(), "init_model label items");

  const Index k = hyper.bits;
  const Index m = hyper.codebooks;
  const Index n = hyper.atoms;

  AcqhModel model;
  model.hyper = hyper;
  model.dims = Dims{x.dim(), y.dim(), labels.classes(), x.size()};

  std::mt19937_64 rng(hyper.seed);
  std::normal_distribution<double> normal(0.0, 1.0);
  auto draw = [&](Index rows, Index cols) {
    Matrix out(rows, cols);
    for (Index r = 0; r < rows; ++r) {
      for (Index c = 0; c < cols; ++c) out(r, c) = normal(rng);
    }
    return out;
  };
  model.regressor.m = draw(labels.classes(), k);
  model.codebook = Codebook(draw(k, m * n), m);
  model.regressor.drift = Vector::Zero(x.size());

  // Codes come from a nearest-neighbour search of one random target per
  // item. Encoding M^T L instead hands every item of a class the same target,
  // and two classes whose targets land on the same atoms stay merged for the
  // rest of training.
  const EncodeContext seed_targets{Matrix::Identity(k, k), draw(k, x.size())};
  model.codes = encode_all(seed_targets, model.codebook);
  const Matrix recon = reconstruct(model.codebook, model.codes);
  model.projections.wx = update_projection(x, labels, recon, hyper.ridge_eps);
  model.projections.wy = update_projection(y, labels, recon, hyper.ridge_eps);
  return model;
}

const char* to_string(Block block) {
  switch (block) {
    case Block::kProjectionX: return "W_x";
    case Block::kProjectionY: return "W_y";
    case Block::kRegressor: return "M";
    case Block::kDrift: return "t";
    case Block::kCodebook: return "C";
    case Block::kCodes: return "A";
  }
  return "?";
}

TrainResult train(const FeatureMatrix& x_in, const FeatureMatrix& y_in, const LabelMatrix& labels,
                  const Hyperparams& hyper, const TrainOptions& options) {
  FeatureCentering centering;
  std::optional<FeatureMatrix> x_centered;
  std::optional<FeatureMatrix> y_centered;
  if (options.center) {
    centering.mean_x = x_in.data().rowwise().mean();
    centering.mean_y = y_in.data().rowwise().mean();
    x_centered.emplace(x_in.data().colwise() - centering.mean_x, x_in.modality());
    y_centered.emplace(y_in.data().colwise() - centering.mean_y, y_in.modality());
  }
  const FeatureMatrix& x = x_centered ? *x_centered : x_in;
  const FeatureMatrix& y = y_centered ? *y_centered : y_in;

  TrainResult result;
  AcqhModel& model = result.model;
  model = with_context("initialization", [&] { return init_model(x, y, labels, hyper); });
  model.centering = std::move(centering);

  const auto observe = [&](int it, Block block) {
    if (options.observer) options.observer(it, block, model);
  };

  ObjectiveTerms terms = objective_terms(x, y, labels, model);
  result.trace.push_back(TraceRecord{0, terms, 0.0});
  double previous = terms.total();

  const double lambda = hyper.lambda;
  for (int it = 1; it <= hyper.max_iters; ++it) {
    with_context("iteration " + std::to_string(it), [&] {
      const Matrix recon = reconstruct(model.codebook, model.codes);
      double value = previous;

      // The ridge biases each closed form slightly. When a Gram is nearly
      // singular that bias can exceed the gain of the step, so a candidate
      // that raises the objective is dropped and the block keeps its value.
      const auto accept = [&](auto& slot, auto candidate, Block block) {
        auto old = std::move(slot);
        slot = std::move(candidate);
        const double now = objective(x, y, labels, model);
        if (now > value) {
          slot = std::move(old);
        } else {
          value = now;
        }
        observe(it, block);
      };

      accept(model.projections.wx, update_projection(x, labels, recon, hyper.ridge_eps),
             Block::kProjectionX);
      accept(model.projections.wy, update_projection(y, labels, recon, hyper.ridge_eps),
             Block::kProjectionY);

      if (auto m = update_regressor(labels, recon, model.regressor.drift, lambda, hyper.mu,
                                    hyper.ridge_eps)) {
        accept(model.regressor.m, std::move(*m), Block::kRegressor);
        accept(model.regressor.drift, update_drift(recon, model.regressor.m, labels), Block::kDrift);
      }

      const Matrix embed_x = model.projections.wx.transpose() * x.data();
      const Matrix embed_y = model.projections.wy.transpose() * y.data();
      accept(model.codebook,
             update_codebook(embed_x, embed_y, labels, model.codes, model.regressor, lambda,
                             hyper.ridge_eps),
             Block::kCodebook);

      const EncodeContext ctx = EncodeContext::full(embed_x, embed_y, labels, model.regressor, lambda);
      model.codes = encode_all(ctx, model.codebook, options.threads);
      observe(it, Block::kCodes);
    });

    terms = objective_terms(x, y, labels, model);
    const double current = terms.total();
    const double denom = std::max(std::abs(previous), std::numeric_limits<double>::min());
    const double change = std::abs(current - previous) / denom;
    result.trace.push_back(TraceRecord{it, terms, change});
    previous = current;
    if (change < hyper.tol) {
      result.converged = true;
      break;
    }
  }
  return result;
}

}  // namespace acqh
