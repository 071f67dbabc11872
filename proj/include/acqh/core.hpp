/// @file core.hpp
/// @brief Shared domain types for the asymmetric correlation quantization model.
///
/// Dimension conventions used throughout the library:
///   X : d_x x N   image features, one item per column
///   Y : d_y x N   text features
///   L : C x N     multi-hot labels; pairwise similarity is S = L^T L and is
///                 never materialized
///   W_x : d_x x K, W_y : d_y x K; latent embeddings are W^T X, W^T q

#pragma once

#include <cstdint>
#include <stdexcept>
#include <string>

#include <Eigen/Dense>

namespace acqh {

using Matrix = Eigen::MatrixXd;
using Vector = Eigen::VectorXd;
using Index = Eigen::Index;

// ---------------------------------------------------------------------------
// Errors
// ---------------------------------------------------------------------------

class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Shapes of two operands are inconsistent.
class DimensionError : public Error {
 public:
  using Error::Error;
};

/// A NaN or Inf appeared in an input or intermediate.
class NumericError : public Error {
 public:
  using Error::Error;
};

/// An indicator code references an atom outside [0, n).
class CodeError : public Error {
 public:
  using Error::Error;
};

/// Invalid argument value (hyperparameter, k, duplicate ids, ...).
class ArgumentError : public Error {
 public:
  using Error::Error;
};

/// A label entry outside {0, 1}, or an unlabeled item.
class LabelDomainError : public Error {
 public:
  using Error::Error;
};

/// Corrupt or truncated binary payload.
class FormatError : public Error {
 public:
  using Error::Error;
};

/// Missing or unreadable file.
class FileError : public Error {
 public:
  using Error::Error;
};

// ---------------------------------------------------------------------------
// Feature and label data
// ---------------------------------------------------------------------------

enum class Modality : std::uint8_t { kImage = 0, kText = 1 };

const char* to_string(Modality modality);

/// Dense per-modality feature matrix, d rows by N items.
class FeatureMatrix {
 public:
  FeatureMatrix(Matrix data, Modality modality);

  const Matrix& data() const { return data_; }
  Modality modality() const { return modality_; }
  Index dim() const { return data_.rows(); }
  Index size() const { return data_.cols(); }

 private:
  Matrix data_;
  Modality modality_;
};

/// Binary multi-hot label matrix, C rows by N items. Every item carries at
/// least one label.
class LabelMatrix {
 public:
  explicit LabelMatrix(Matrix data);

  const Matrix& data() const { return data_; }
  Index classes() const { return data_.rows(); }
  Index size() const { return data_.cols(); }
  auto column(Index i) const { return data_.col(i); }

 private:
  Matrix data_;
};

/// l_i^T l_j, the number of shared labels.
std::int64_t similarity_entry(const Eigen::Ref<const Vector>& li,
                              const Eigen::Ref<const Vector>& lj);

// ---------------------------------------------------------------------------
// Hyperparameters and learned blocks
// ---------------------------------------------------------------------------

struct Hyperparams {
  Index bits = 32;          // K, latent dimension
  Index codebooks = 4;      // m
  Index atoms = 256;        // n
  double lambda = 1e-4;
  double mu = 1e-2;
  int max_iters = 50;
  double tol = 1e-5;
  double ridge_eps = 1e-8;
  std::uint64_t seed = 0;

  /// Throws ArgumentError when a field is out of range or K exceeds a
  /// feature dimension.
  void validate(Index dx, Index dy) const;
};

struct Projections {
  Matrix wx;  // d_x x K
  Matrix wy;  // d_y x K

  const Matrix& for_modality(Modality modality) const {
    return modality == Modality::kImage ? wx : wy;
  }
};

/// Label regression block: CA ~ M^T L + e_K t^T.
struct LabelRegressor {
  Matrix m;      // C x K
  Vector drift;  // t, length N
};

/// Throws NumericError naming `what` when any entry is NaN or Inf.
void require_finite(const Eigen::Ref<const Matrix>& values, const std::string& what);

/// Throws DimensionError unless `actual` equals `expected`.
void require_dim(Index actual, Index expected, const std::string& what);

}  // namespace acqh
