/// @file io.hpp
/// @brief Dataset ingestion, model persistence and CSV emitters.
///
/// Matrix file (".acqd"), all integers little-endian:
///   "ACQD" | u32 version=1 | u32 rows | u32 cols | payload
/// payload is rows*cols row-major f64 for features, u8 for labels.
///
/// Model file (".acqh"):
///   "ACQH" | u32 version=1 | u32 d_x d_y C N K m n
///   | f64 lambda mu tol ridge_eps | u32 max_iters | u64 seed
///   | u8 centered [| f64 mean_x[d_x] | f64 mean_y[d_y]]
///   | f64 W_x (d_x x K) | W_y (d_y x K) | C (K x mn) | M (C x K) | t (N)
///   | codes: N*m atom indices, item-major, u8 when n <= 256 else u16
/// Matrices are row-major f64.

#pragma once

#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "acqh/eval.hpp"
#include "acqh/model.hpp"
#include "acqh/query.hpp"
#include "acqh/trainer.hpp"

namespace acqh {

inline constexpr std::uint32_t kMatrixFormatVersion = 1;
inline constexpr std::uint32_t kModelFormatVersion = 1;

struct QuerySplit {
  FeatureMatrix x;
  FeatureMatrix y;
  LabelMatrix labels;
};

struct DatasetBundle {
  FeatureMatrix x;
  FeatureMatrix y;
  LabelMatrix labels;
  std::optional<QuerySplit> queries;

  /// Throws DimensionError unless X, Y, L share N and the split shares C and
  /// feature dims.
  void validate() const;
};

enum class DataFormat { kBinary, kCsv };

DataFormat parse_format(std::string_view name);
const char* file_extension(DataFormat format);

// Byte-level matrix codecs.
std::string encode_matrix(const Matrix& values);
Matrix decode_matrix(std::string_view bytes);
std::string encode_labels(const Matrix& labels);
/// Returns the raw 0/1 entries; LabelMatrix performs domain validation.
Matrix decode_labels(std::string_view bytes);

/// One CSV line per matrix row, shortest round-trip decimal form.
std::string matrix_to_csv(const Matrix& values);
Matrix matrix_from_csv(std::string_view text);

std::string read_file(const std::filesystem::path& path);
/// Writes to a temporary sibling and renames over `path`.
void write_file_atomic(const std::filesystem::path& path, std::string_view bytes);

Matrix read_features(const std::filesystem::path& path, DataFormat format);
Matrix read_labels(const std::filesystem::path& path, DataFormat format);

/// Files in `dir`: X, Y, L and optionally Xq, Yq, Lq, each with the format's
/// extension.
DatasetBundle load_dataset(const std::filesystem::path& dir, DataFormat format);
void save_dataset(const DatasetBundle& bundle, const std::filesystem::path& dir, DataFormat format);

std::string save_model(const AcqhModel& model);
AcqhModel load_model(std::string_view bytes);
void write_model_file(const std::filesystem::path& path, const AcqhModel& model);
AcqhModel read_model_file(const std::filesystem::path& path);

/// Byte layout of a serialized model.
struct ModelFileLayout {
  std::size_t header_bytes = 0;    // magic through centering means
  std::size_t real_bytes = 0;      // W_x, W_y, C, M, t
  std::size_t codes_offset = 0;
  std::size_t codes_bytes = 0;     // N * m * (1 or 2)
  std::size_t total_bytes = 0;
  double bits_per_item = 0.0;      // m * log2(n)
};

ModelFileLayout model_file_layout(const AcqhModel& model);

// CSV emitters.
void write_trace_csv(std::ostream& out, const std::vector<TraceRecord>& trace);
void write_topn_csv(std::ostream& out, const std::vector<TopNPoint>& curve);
void write_pr_csv(std::ostream& out, const std::vector<PrPoint>& curve);
/// query_id,rank,item_id,score
void write_results_csv(std::ostream& out, Index query_id, const std::vector<Hit>& hits,
                       bool header);

}  // namespace acqh
