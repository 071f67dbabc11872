#include "acqh/core.hpp"

#include <cmath>
#include <utility>

namespace acqh {

const char* to_string(Modality modality) {
  return modality == Modality::kImage ? "image" : "text";
}

void require_finite(const Eigen::Ref<const Matrix>& values, const std::string& what) {
  if (!values.allFinite()) {
    throw NumericError(what + ": non-finite entry");
  }
}

void require_dim(Index actual, Index expected, const std::string& what) {
  if (actual != expected) {
    throw DimensionError(what + ": expected " + std::to_string(expected) + ", got " +
                         std::to_string(actual));
  }
}

FeatureMatrix::FeatureMatrix(Matrix data, Modality modality)
    : data_(std::move(data)), modality_(modality) {
  if (data_.rows() < 1 || data_.cols() < 1) {
    throw DimensionError("FeatureMatrix: needs at least one row and one item");
  }
  require_finite(data_, std::string("FeatureMatrix(") + to_string(modality_) + ")");
}

LabelMatrix::LabelMatrix(Matrix data) : data_(std::move(data)) {
  if (data_.rows() < 1 || data_.cols() < 1) {
    throw DimensionError("LabelMatrix: needs at least one class and one item");
  }
  for (Index i = 0; i < data_.cols(); ++i) {
    bool labeled = false;
    for (Index c = 0; c < data_.rows(); ++c) {
      const double v = data_(c, i);
      if (v != 0.0 && v != 1.0) {
        throw LabelDomainError("LabelMatrix: entry (" + std::to_string(c) + ", " +
                               std::to_string(i) + ") is not in {0,1}");
      }
      labeled = labeled || v == 1.0;
    }
    if (!labeled) {
      throw LabelDomainError("LabelMatrix: item " + std::to_string(i) + " has no label");
    }
  }
}

std::int64_t similarity_entry(const Eigen::Ref<const Vector>& li,
                              const Eigen::Ref<const Vector>& lj) {
  require_dim(lj.size(), li.size(), "similarity_entry label length");
  std::int64_t shared = 0;
  for (Index c = 0; c < li.size(); ++c) {
    if (li[c] != 0.0 && lj[c] != 0.0) ++shared;
  }
  return shared;
}

void Hyperparams::validate(Index dx, Index dy) const {
  if (bits < 1) throw ArgumentError("Hyperparams: K must be >= 1");
  if (bits > dx || bits > dy) {
    throw ArgumentError("Hyperparams: K=" + std::to_string(bits) +
                        " exceeds a feature dimension (d_x=" + std::to_string(dx) +
                        ", d_y=" + std::to_string(dy) + ")");
  }
  if (codebooks < 1) throw ArgumentError("Hyperparams: m must be >= 1");
  if (atoms < 2 || atoms > 65536) throw ArgumentError("Hyperparams: n must be in [2, 65536]");
  if (!(lambda >= 0.0) || !std::isfinite(lambda)) throw ArgumentError("Hyperparams: lambda must be >= 0");
  if (!(mu >= 0.0) || !std::isfinite(mu)) throw ArgumentError("Hyperparams: mu must be >= 0");
  if (!(ridge_eps > 0.0)) throw ArgumentError("Hyperparams: ridge_eps must be > 0");
  if (!(tol > 0.0)) throw ArgumentError("Hyperparams: tol must be > 0");
  if (max_iters < 0) throw ArgumentError("Hyperparams: max_iters must be >= 0");
}

}  // namespace acqh
