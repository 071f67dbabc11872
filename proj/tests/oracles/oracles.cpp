#include "oracles.hpp"

#include <cmath>
#include <string>

namespace acqh::oracle {
namespace {

void guard_items(Index items) {
  if (items > kMaxItems) {
    throw OracleSizeError("oracle refuses N=" + std::to_string(items) + " > " +
                          std::to_string(kMaxItems));
  }
}

struct DenseProducts {
  Matrix s;   // N x N
  Matrix cx;  // N x mn
  Matrix cy;  // N x mn
  Matrix p;   // K x N
};

DenseProducts dense_products(const DenseInstance& inst) {
  guard_items(inst.labels.cols());
  DenseProducts d;
  d.s = inst.labels.transpose() * inst.labels;
  d.cx = (inst.wx.transpose() * inst.x).transpose() * inst.codebook;
  d.cy = (inst.wy.transpose() * inst.y).transpose() * inst.codebook;
  d.p = inst.regression.transpose() * inst.labels;
  for (Index i = 0; i < d.p.cols(); ++i) d.p.col(i).array() += inst.drift[i];
  return d;
}

}  // namespace

Matrix one_hot(const IndicatorCodes& codes) {
  const Index n = codes.atoms_per_stage();
  Matrix a = Matrix::Zero(codes.stages() * n, codes.items());
  for (Index i = 0; i < codes.items(); ++i) {
    for (Index t = 0; t < codes.stages(); ++t) a(t * n + codes(t, i), i) = 1.0;
  }
  return a;
}

DenseInstance DenseInstance::from(const FeatureMatrix& x, const FeatureMatrix& y,
                                  const LabelMatrix& labels, const AcqhModel& model) {
  DenseInstance inst;
  inst.x = x.data();
  inst.y = y.data();
  inst.labels = labels.data();
  inst.wx = model.projections.wx;
  inst.wy = model.projections.wy;
  inst.codebook = model.codebook.matrix();
  inst.stages = model.hyper.codebooks;
  inst.regression = model.regressor.m;
  inst.drift = model.regressor.drift;
  inst.lambda = model.hyper.lambda;
  inst.mu = model.hyper.mu;
  return inst;
}

double dense_objective(const DenseInstance& inst, const Matrix& one_hot_codes) {
  const DenseProducts d = dense_products(inst);
  const Matrix ca = inst.codebook * one_hot_codes;
  const Matrix pred_x = (inst.wx.transpose() * inst.x).transpose() * ca;
  const Matrix pred_y = (inst.wy.transpose() * inst.y).transpose() * ca;
  double total = 0.0;
  for (Index i = 0; i < d.s.rows(); ++i) {
    for (Index j = 0; j < d.s.cols(); ++j) {
      const double ex = pred_x(i, j) - d.s(i, j);
      const double ey = pred_y(i, j) - d.s(i, j);
      total += ex * ex + ey * ey;
    }
  }
  double label = 0.0;
  for (Index k = 0; k < ca.rows(); ++k) {
    for (Index i = 0; i < ca.cols(); ++i) {
      const double e = ca(k, i) - d.p(k, i);
      label += e * e;
    }
  }
  double reg = 0.0;
  for (Index c = 0; c < inst.regression.rows(); ++c) {
    for (Index k = 0; k < inst.regression.cols(); ++k) reg += inst.regression(c, k) * inst.regression(c, k);
  }
  return total + inst.lambda * label + inst.mu * reg;
}

std::vector<std::vector<AtomIndex>> dense_encode(const DenseInstance& inst) {
  DenseProducts d = dense_products(inst);
  const Index n = inst.atoms();
  const Index items = inst.labels.cols();
  Matrix rx = d.s;
  Matrix ry = d.s;
  Matrix r = d.p;
  std::vector<std::vector<AtomIndex>> codes(static_cast<std::size_t>(items));

  for (Index t = 0; t < inst.stages; ++t) {
    const Matrix ctx = d.cx.middleCols(t * n, n);
    const Matrix cty = d.cy.middleCols(t * n, n);
    const Matrix ct = inst.codebook.middleCols(t * n, n);
    const Matrix select = ctx.transpose() * ctx + cty.transpose() * cty + inst.lambda * ct.transpose() * ct;
    Matrix at = Matrix::Zero(n, items);
    for (Index i = 0; i < items; ++i) {
      const Vector h = ctx.transpose() * rx.col(i) + cty.transpose() * ry.col(i) +
                       inst.lambda * (ct.transpose() * r.col(i));
      Index best = 0;
      for (Index j = 1; j < n; ++j) {
        if (select(j, j) - 2.0 * h[j] < select(best, best) - 2.0 * h[best]) best = j;
      }
      at(best, i) = 1.0;
      codes[static_cast<std::size_t>(i)].push_back(static_cast<AtomIndex>(best));
    }
    rx -= ctx * at;
    ry -= cty * at;
    r -= ct * at;
  }
  return codes;
}

std::vector<double> stage_objectives(const DenseInstance& inst, Index item, Index stage,
                                     const std::vector<AtomIndex>& prefix) {
  const DenseProducts d = dense_products(inst);
  const Index n = inst.atoms();
  Vector rx = d.s.col(item);
  Vector ry = d.s.col(item);
  Vector r = d.p.col(item);
  for (Index s = 0; s < stage; ++s) {
    const Index col = s * n + prefix[static_cast<std::size_t>(s)];
    rx -= d.cx.col(col);
    ry -= d.cy.col(col);
    r -= inst.codebook.col(col);
  }
  std::vector<double> out;
  for (Index j = 0; j < n; ++j) {
    const Index col = stage * n + j;
    out.push_back((d.cx.col(col) - rx).squaredNorm() + (d.cy.col(col) - ry).squaredNorm() +
                  inst.lambda * (inst.codebook.col(col) - r).squaredNorm());
  }
  return out;
}

std::vector<AtomIndex> exhaustive_encode(const DenseInstance& inst, Index item) {
  const Index n = inst.atoms();
  if (inst.stages > 2 || n > 8) throw OracleSizeError("exhaustive_encode: needs m <= 2, n <= 8");
  const DenseProducts d = dense_products(inst);

  Index total = 1;
  for (Index s = 0; s < inst.stages; ++s) total *= n;
  std::vector<AtomIndex> best;
  double best_value = 0.0;
  for (Index code = 0; code < total; ++code) {
    std::vector<AtomIndex> atoms;
    Index rest = code;
    Vector fx = Vector::Zero(d.cx.rows());
    Vector fy = Vector::Zero(d.cy.rows());
    Vector z = Vector::Zero(inst.codebook.rows());
    for (Index s = 0; s < inst.stages; ++s) {
      const Index a = rest % n;
      rest /= n;
      atoms.push_back(static_cast<AtomIndex>(a));
      fx += d.cx.col(s * n + a);
      fy += d.cy.col(s * n + a);
      z += inst.codebook.col(s * n + a);
    }
    const double value = (fx - d.s.col(item)).squaredNorm() + (fy - d.s.col(item)).squaredNorm() +
                         inst.lambda * (z - d.p.col(item)).squaredNorm();
    if (best.empty() || value < best_value) {
      best = atoms;
      best_value = value;
    }
  }
  return best;
}

Matrix dense_stage_gram(const DenseInstance& inst, Index stage) {
  const DenseProducts d = dense_products(inst);
  const Index n = inst.atoms();
  const Matrix ctx = d.cx.middleCols(stage * n, n);
  const Matrix cty = d.cy.middleCols(stage * n, n);
  const Matrix ct = inst.codebook.middleCols(stage * n, n);
  return ctx.transpose() * ctx + cty.transpose() * cty + inst.lambda * ct.transpose() * ct;
}

Vector ridge_least_squares(const Matrix& design, const Vector& rhs, double rho) {
  if (design.cols() > 2048 || design.rows() > 65536) {
    throw OracleSizeError("ridge_least_squares: system too large");
  }
  const Index p = design.cols();
  Matrix stacked(design.rows() + p, p);
  stacked << design, std::sqrt(rho) * Matrix::Identity(p, p);
  Vector target(design.rows() + p);
  target << rhs, Vector::Zero(p);
  return stacked.colPivHouseholderQr().solve(target);
}

double naive_precision_at(const std::vector<Index>& ranking, const std::vector<std::uint8_t>& rel,
                          Index n) {
  Index hits = 0;
  for (Index r = 0; r < n; ++r) hits += rel[static_cast<std::size_t>(ranking[static_cast<std::size_t>(r)])];
  return static_cast<double>(hits) / static_cast<double>(n);
}

double naive_average_precision(const std::vector<Index>& ranking,
                               const std::vector<std::uint8_t>& rel) {
  double sum = 0.0;
  Index relevant = 0;
  for (std::size_t k = 0; k < ranking.size(); ++k) {
    if (!rel[static_cast<std::size_t>(ranking[k])]) continue;
    ++relevant;
    sum += naive_precision_at(ranking, rel, static_cast<Index>(k + 1));
  }
  return relevant == 0 ? 0.0 : sum / static_cast<double>(relevant);
}

}  // namespace acqh::oracle
