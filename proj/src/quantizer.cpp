#include "acqh/quantizer.hpp"

#include <algorithm>
#include <exception>
#include <mutex>
#include <string>
#include <thread>
#include <utility>

namespace acqh {

Codebook::Codebook(Matrix atoms, Index stages) : atoms_(std::move(atoms)), stages_(stages) {
  if (stages_ < 1 || atoms_.cols() % stages_ != 0 || atoms_.cols() / stages_ < 1) {
    throw DimensionError("Codebook: " + std::to_string(atoms_.cols()) +
                         " columns do not split into " + std::to_string(stages_) + " stages");
  }
  require_finite(atoms_, "Codebook");
}

IndicatorCodes::IndicatorCodes(Index stages, Index items, Index atoms_per_stage)
    : stages_(stages),
      items_(items),
      atoms_(atoms_per_stage),
      codes_(static_cast<std::size_t>(stages * items), 0) {
  if (stages < 1 || items < 0 || atoms_per_stage < 1 || atoms_per_stage > 65536) {
    throw DimensionError("IndicatorCodes: invalid shape");
  }
}

IndicatorCodes::IndicatorCodes(Index stages, Index items, Index atoms_per_stage,
                               std::vector<AtomIndex> raw)
    : IndicatorCodes(stages, items, atoms_per_stage) {
  if (raw.size() != codes_.size()) {
    throw DimensionError("IndicatorCodes: raw size " + std::to_string(raw.size()) +
                         " != stages * items " + std::to_string(codes_.size()));
  }
  for (std::size_t k = 0; k < raw.size(); ++k) {
    if (raw[k] >= atoms_) {
      throw CodeError("IndicatorCodes: atom " + std::to_string(raw[k]) + " at slot " +
                      std::to_string(k) + " out of range");
    }
  }
  codes_ = std::move(raw);
}

void IndicatorCodes::set(Index stage, Index item, AtomIndex atom) {
  if (atom >= atoms_) {
    throw CodeError("IndicatorCodes::set: atom " + std::to_string(atom) + " out of range");
  }
  codes_[static_cast<std::size_t>(item * stages_ + stage)] = atom;
}

Matrix reconstruct(const Codebook& codebook, const IndicatorCodes& codes) {
  require_dim(codes.stages(), codebook.stages(), "reconstruct: stage count");
  const Index n = codebook.atoms_per_stage();
  if (codes.atoms_per_stage() > n) {
    throw CodeError("reconstruct: codes address more atoms than the codebook holds");
  }
  Matrix z = Matrix::Zero(codebook.dim(), codes.items());
  for (Index i = 0; i < codes.items(); ++i) {
    const auto atoms = codes.item(i);
    for (Index t = 0; t < codes.stages(); ++t) {
      const Index a = atoms[static_cast<std::size_t>(t)];
      if (a >= n) throw CodeError("reconstruct: atom index out of range");
      z.col(i) += codebook.matrix().col(t * n + a);
    }
  }
  return z;
}

StageGram stage_gram(const Eigen::Ref<const Matrix>& stage, const Matrix& metric) {
  require_dim(metric.rows(), stage.rows(), "stage_gram metric rows");
  require_dim(metric.cols(), stage.rows(), "stage_gram metric cols");
  StageGram out;
  out.gram = stage.transpose() * (metric * stage);
  out.diag = out.gram.diagonal();
  return out;
}

StageGram stage_gram(const Eigen::Ref<const Matrix>& stage, const Matrix& gram_x,
                     const Matrix& gram_y, double lambda) {
  require_dim(gram_x.rows(), gram_y.rows(), "stage_gram Gram shapes");
  require_dim(gram_x.cols(), gram_y.cols(), "stage_gram Gram shapes");
  Matrix metric = gram_x + gram_y;
  metric.diagonal().array() += lambda;
  return stage_gram(stage, metric);
}

AtomIndex select_atom(std::span<const double> diag, std::span<const double> h) {
  if (diag.empty()) throw ArgumentError("select_atom: empty candidate set");
  require_dim(static_cast<Index>(h.size()), static_cast<Index>(diag.size()), "select_atom h length");
  std::size_t best = 0;
  double best_score = diag[0] - 2.0 * h[0];
  for (std::size_t j = 1; j < diag.size(); ++j) {
    const double score = diag[j] - 2.0 * h[j];
    if (score < best_score) {
      best_score = score;
      best = j;
    }
  }
  return static_cast<AtomIndex>(best);
}

AtomIndex select_atom(const Vector& diag, const Vector& h) {
  return select_atom(std::span<const double>(diag.data(), static_cast<std::size_t>(diag.size())),
                     std::span<const double>(h.data(), static_cast<std::size_t>(h.size())));
}

EncodeContext EncodeContext::full(const Matrix& embed_x, const Matrix& embed_y,
                                  const LabelMatrix& labels, const LabelRegressor& regressor,
                                  double lambda) {
  const Index k = embed_x.rows();
  require_dim(embed_y.rows(), k, "EncodeContext: latent dim of text embedding");
  require_dim(embed_x.cols(), labels.size(), "EncodeContext: image items");
  require_dim(embed_y.cols(), labels.size(), "EncodeContext: text items");

  EncodeContext ctx;
  ctx.metric = embed_x * embed_x.transpose() + embed_y * embed_y.transpose();
  ctx.metric.diagonal().array() += lambda;

  // (F_x + F_y) l_i for all i, with F = E L^T (K x C).
  const Matrix label_proj = embed_x * labels.data().transpose() + embed_y * labels.data().transpose();
  ctx.targets = label_proj * labels.data();
  if (lambda != 0.0) {
    require_dim(regressor.m.cols(), k, "EncodeContext: regressor latent dim");
    require_dim(regressor.drift.size(), labels.size(), "EncodeContext: drift length");
    ctx.targets.noalias() += lambda * (regressor.m.transpose() * labels.data());
    ctx.targets.rowwise() += lambda * regressor.drift.transpose();
  }
  return ctx;
}

EncodeContext EncodeContext::label_only(const LabelMatrix& labels, const LabelRegressor& regressor) {
  require_dim(regressor.drift.size(), labels.size(), "EncodeContext: drift length");
  require_dim(regressor.m.rows(), labels.classes(), "EncodeContext: regressor classes");
  EncodeContext ctx;
  const Index k = regressor.m.cols();
  ctx.metric = Matrix::Identity(k, k);
  ctx.targets = regressor.m.transpose() * labels.data();
  ctx.targets.rowwise() += regressor.drift.transpose();
  return ctx;
}

std::vector<StageGram> stage_grams(const Codebook& codebook, const Matrix& metric) {
  std::vector<StageGram> grams;
  grams.reserve(static_cast<std::size_t>(codebook.stages()));
  for (Index t = 0; t < codebook.stages(); ++t) {
    grams.push_back(stage_gram(codebook.stage(t), metric));
  }
  return grams;
}

void encode_column(const Eigen::Ref<const Vector>& target, const Matrix& metric,
                   const Codebook& codebook, std::span<const StageGram> grams,
                   std::span<AtomIndex> out) {
  const Index m = codebook.stages();
  const Index k = codebook.dim();
  require_dim(target.size(), k, "encode_column target length");
  require_dim(static_cast<Index>(grams.size()), m, "encode_column stage Gram count");
  require_dim(static_cast<Index>(out.size()), m, "encode_column output length");

  ResidualAccumulator acc(k);
  Vector residual(k);
  Vector h(codebook.atoms_per_stage());
  for (Index t = 0; t < m; ++t) {
    const auto stage = codebook.stage(t);
    residual.noalias() = target - metric * acc.partial();
    h.noalias() = stage.transpose() * residual;
    if (!h.allFinite()) {
      throw NumericError("encode_column: non-finite linear term at stage " + std::to_string(t));
    }
    const AtomIndex atom = select_atom(grams[static_cast<std::size_t>(t)].diag, h);
    out[static_cast<std::size_t>(t)] = atom;
    acc.add(stage.col(atom));
  }
}

std::vector<AtomIndex> encode_column(const Eigen::Ref<const Vector>& target, const Matrix& metric,
                                     const Codebook& codebook, std::span<const StageGram> grams) {
  std::vector<AtomIndex> out(static_cast<std::size_t>(codebook.stages()));
  encode_column(target, metric, codebook, grams, out);
  return out;
}

IndicatorCodes encode_all(const EncodeContext& context, const Codebook& codebook, int threads) {
  require_dim(context.targets.rows(), codebook.dim(), "encode_all target rows");
  require_dim(context.metric.rows(), codebook.dim(), "encode_all metric size");
  const Index items = context.targets.cols();
  const std::vector<StageGram> grams = stage_grams(codebook, context.metric);
  IndicatorCodes codes(codebook.stages(), items, codebook.atoms_per_stage());

  auto run = [&](Index begin, Index end) {
    for (Index i = begin; i < end; ++i) {
      try {
        encode_column(context.targets.col(i), context.metric, codebook, grams, codes.item(i));
      } catch (const NumericError& e) {
        throw NumericError("column " + std::to_string(i) + ": " + e.what());
      }
    }
  };

  const Index workers = std::clamp<Index>(threads, 1, std::max<Index>(items, 1));
  if (workers == 1) {
    run(0, items);
    return codes;
  }

  std::exception_ptr failure;
  std::mutex failure_mutex;
  {
    std::vector<std::jthread> pool;
    const Index chunk = (items + workers - 1) / workers;
    for (Index w = 0; w < workers; ++w) {
      const Index begin = w * chunk;
      const Index end = std::min(items, begin + chunk);
      if (begin >= end) break;
      pool.emplace_back([&, begin, end] {
        try {
          run(begin, end);
        } catch (...) {
          std::lock_guard lock(failure_mutex);
          if (!failure) failure = std::current_exception();
        }
      });
    }
  }
  if (failure) std::rethrow_exception(failure);
  return codes;
}

}  // namespace acqh
