#include "acqh/io.hpp"

#include <bit>
#include <charconv>
#include <cmath>
#include <fstream>
#include <ostream>
#include <sstream>
#include <system_error>
#include <utility>

namespace acqh {
namespace {

constexpr std::string_view kMatrixMagic = "ACQD";
constexpr std::string_view kModelMagic = "ACQH";
constexpr std::size_t kMatrixHeaderBytes = 16;

class ByteWriter {
 public:
  void bytes(std::string_view b) { buf_.append(b); }
  void u8(std::uint8_t v) { buf_.push_back(static_cast<char>(v)); }
  void u16(std::uint16_t v) { uint_le(v, 2); }
  void u32(std::uint32_t v) { uint_le(v, 4); }
  void u64(std::uint64_t v) { uint_le(v, 8); }
  void f64(double v) { uint_le(std::bit_cast<std::uint64_t>(v), 8); }

  void matrix(const Matrix& m) {
    for (Index r = 0; r < m.rows(); ++r) {
      for (Index c = 0; c < m.cols(); ++c) f64(m(r, c));
    }
  }

  std::string take() { return std::move(buf_); }

 private:
  void uint_le(std::uint64_t v, int width) {
    for (int b = 0; b < width; ++b) buf_.push_back(static_cast<char>((v >> (8 * b)) & 0xffu));
  }
  std::string buf_;
};

class ByteReader {
 public:
  explicit ByteReader(std::string_view data) : data_(data) {}

  std::string_view bytes(std::size_t n) {
    need(n);
    auto out = data_.substr(pos_, n);
    pos_ += n;
    return out;
  }
  std::uint8_t u8() { return static_cast<std::uint8_t>(uint_le(1)); }
  std::uint16_t u16() { return static_cast<std::uint16_t>(uint_le(2)); }
  std::uint32_t u32() { return static_cast<std::uint32_t>(uint_le(4)); }
  std::uint64_t u64() { return uint_le(8); }
  double f64() { return std::bit_cast<double>(uint_le(8)); }

  Matrix matrix(Index rows, Index cols) {
    Matrix m(rows, cols);
    for (Index r = 0; r < rows; ++r) {
      for (Index c = 0; c < cols; ++c) m(r, c) = f64();
    }
    return m;
  }

  std::size_t remaining() const { return data_.size() - pos_; }

 private:
  void need(std::size_t n) const {
    if (data_.size() - pos_ < n) throw FormatError("truncated payload");
  }
  std::uint64_t uint_le(int width) {
    need(static_cast<std::size_t>(width));
    std::uint64_t v = 0;
    for (int b = 0; b < width; ++b) {
      v |= static_cast<std::uint64_t>(static_cast<unsigned char>(data_[pos_ + b])) << (8 * b);
    }
    pos_ += static_cast<std::size_t>(width);
    return v;
  }

  std::string_view data_;
  std::size_t pos_ = 0;
};

std::uint32_t checked_u32(Index v, const char* what) {
  if (v < 0 || v > static_cast<Index>(UINT32_MAX)) {
    throw DimensionError(std::string(what) + " does not fit in 32 bits");
  }
  return static_cast<std::uint32_t>(v);
}

void write_matrix_header(ByteWriter& w, const Matrix& m) {
  w.bytes(kMatrixMagic);
  w.u32(kMatrixFormatVersion);
  w.u32(checked_u32(m.rows(), "matrix rows"));
  w.u32(checked_u32(m.cols(), "matrix cols"));
}

std::pair<Index, Index> read_matrix_header(ByteReader& r, std::size_t entry_bytes,
                                           std::size_t total) {
  if (r.bytes(4) != kMatrixMagic) throw FormatError("matrix file: bad magic");
  const std::uint32_t version = r.u32();
  if (version != kMatrixFormatVersion) {
    throw FormatError("matrix file: unsupported version " + std::to_string(version));
  }
  const std::uint64_t rows = r.u32();
  const std::uint64_t cols = r.u32();
  const std::uint64_t expected = kMatrixHeaderBytes + rows * cols * entry_bytes;
  if (total < expected) throw FormatError("matrix file: truncated payload");
  if (total > expected) throw FormatError("matrix file: trailing bytes after payload");
  return {static_cast<Index>(rows), static_cast<Index>(cols)};
}

std::filesystem::path dataset_file(const std::filesystem::path& dir, const char* stem,
                                   DataFormat format) {
  return dir / (std::string(stem) + file_extension(format));
}

std::string format_double(double v) {
  char buf[64];
  const auto res = std::to_chars(buf, buf + sizeof(buf), v);
  return std::string(buf, res.ptr);
}

std::size_t code_width(Index atoms) { return atoms <= 256 ? 1 : 2; }

}  // namespace

void DatasetBundle::validate() const {
  require_dim(y.size(), x.size(), "dataset text items");
  require_dim(labels.size(), x.size(), "dataset label items");
  if (queries) {
    require_dim(queries->x.dim(), x.dim(), "query split image dim");
    require_dim(queries->y.dim(), y.dim(), "query split text dim");
    require_dim(queries->y.size(), queries->x.size(), "query split text items");
    require_dim(queries->labels.size(), queries->x.size(), "query split label items");
    require_dim(queries->labels.classes(), labels.classes(), "query split classes");
  }
}

DataFormat parse_format(std::string_view name) {
  if (name == "bin" || name == "binary" || name == "acqd") return DataFormat::kBinary;
  if (name == "csv") return DataFormat::kCsv;
  throw ArgumentError("unknown data format '" + std::string(name) + "' (expected bin or csv)");
}

const char* file_extension(DataFormat format) {
  return format == DataFormat::kBinary ? ".acqd" : ".csv";
}

std::string encode_matrix(const Matrix& values) {
  ByteWriter w;
  write_matrix_header(w, values);
  w.matrix(values);
  return w.take();
}

Matrix decode_matrix(std::string_view bytes) {
  ByteReader r(bytes);
  const auto [rows, cols] = read_matrix_header(r, 8, bytes.size());
  return r.matrix(rows, cols);
}

std::string encode_labels(const Matrix& labels) {
  ByteWriter w;
  write_matrix_header(w, labels);
  for (Index r = 0; r < labels.rows(); ++r) {
    for (Index c = 0; c < labels.cols(); ++c) {
      const double v = labels(r, c);
      if (v != 0.0 && v != 1.0) throw LabelDomainError("encode_labels: entry not in {0,1}");
      w.u8(v == 1.0 ? 1 : 0);
    }
  }
  return w.take();
}

Matrix decode_labels(std::string_view bytes) {
  ByteReader r(bytes);
  const auto [rows, cols] = read_matrix_header(r, 1, bytes.size());
  Matrix out(rows, cols);
  for (Index i = 0; i < rows; ++i) {
    for (Index j = 0; j < cols; ++j) out(i, j) = r.u8();
  }
  return out;
}

std::string matrix_to_csv(const Matrix& values) {
  std::string out;
  for (Index r = 0; r < values.rows(); ++r) {
    for (Index c = 0; c < values.cols(); ++c) {
      if (c > 0) out.push_back(',');
      out += format_double(values(r, c));
    }
    out.push_back('\n');
  }
  return out;
}

Matrix matrix_from_csv(std::string_view text) {
  std::vector<std::vector<double>> rows;
  std::size_t line_no = 0;
  while (!text.empty()) {
    const std::size_t eol = text.find('\n');
    std::string_view line = text.substr(0, eol);
    text = eol == std::string_view::npos ? std::string_view{} : text.substr(eol + 1);
    ++line_no;
    if (!line.empty() && line.back() == '\r') line.remove_suffix(1);
    if (line.find_first_not_of(" \t") == std::string_view::npos) continue;

    std::vector<double> row;
    while (true) {
      const std::size_t comma = line.find(',');
      std::string_view cell = line.substr(0, comma);
      while (!cell.empty() && (cell.front() == ' ' || cell.front() == '\t')) cell.remove_prefix(1);
      while (!cell.empty() && (cell.back() == ' ' || cell.back() == '\t')) cell.remove_suffix(1);
      double v = 0.0;
      const auto res = std::from_chars(cell.data(), cell.data() + cell.size(), v);
      if (cell.empty() || res.ec != std::errc() || res.ptr != cell.data() + cell.size()) {
        throw FormatError("csv line " + std::to_string(line_no) + ": cannot parse '" +
                          std::string(cell) + "'");
      }
      row.push_back(v);
      if (comma == std::string_view::npos) break;
      line.remove_prefix(comma + 1);
    }
    if (!rows.empty() && row.size() != rows.front().size()) {
      throw FormatError("csv line " + std::to_string(line_no) + ": expected " +
                        std::to_string(rows.front().size()) + " columns, got " +
                        std::to_string(row.size()));
    }
    rows.push_back(std::move(row));
  }
  if (rows.empty()) throw FormatError("csv: no data rows");
  Matrix out(static_cast<Index>(rows.size()), static_cast<Index>(rows.front().size()));
  for (Index r = 0; r < out.rows(); ++r) {
    for (Index c = 0; c < out.cols(); ++c) {
      out(r, c) = rows[static_cast<std::size_t>(r)][static_cast<std::size_t>(c)];
    }
  }
  return out;
}

std::string read_file(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw FileError("cannot open " + path.string());
  std::ostringstream ss;
  ss << in.rdbuf();
  if (in.bad()) throw FileError("read failed: " + path.string());
  return std::move(ss).str();
}

void write_file_atomic(const std::filesystem::path& path, std::string_view bytes) {
  std::filesystem::path tmp = path;
  tmp += ".tmp";
  {
    std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
    if (!out) throw FileError("cannot open " + tmp.string() + " for writing");
    out.write(bytes.data(), static_cast<std::streamsize>(bytes.size()));
    out.flush();
    if (!out) throw FileError("write failed: " + tmp.string());
  }
  std::error_code ec;
  std::filesystem::rename(tmp, path, ec);
  if (ec) {
    std::filesystem::remove(tmp, ec);
    throw FileError("cannot move " + tmp.string() + " to " + path.string());
  }
}

Matrix read_features(const std::filesystem::path& path, DataFormat format) {
  const std::string bytes = read_file(path);
  try {
    return format == DataFormat::kBinary ? decode_matrix(bytes) : matrix_from_csv(bytes);
  } catch (const FormatError& e) {
    throw FormatError(path.string() + ": " + e.what());
  }
}

Matrix read_labels(const std::filesystem::path& path, DataFormat format) {
  const std::string bytes = read_file(path);
  try {
    return format == DataFormat::kBinary ? decode_labels(bytes) : matrix_from_csv(bytes);
  } catch (const FormatError& e) {
    throw FormatError(path.string() + ": " + e.what());
  }
}

DatasetBundle load_dataset(const std::filesystem::path& dir, DataFormat format) {
  const auto file = [&](const char* stem) {
    const auto p = dataset_file(dir, stem, format);
    if (!std::filesystem::exists(p)) throw FileError("missing dataset file " + p.string());
    return p;
  };
  const auto labels = [&](const char* stem) {
    const auto p = file(stem);
    try {
      return LabelMatrix(read_labels(p, format));
    } catch (const LabelDomainError& e) {
      throw LabelDomainError(p.string() + ": " + e.what());
    }
  };

  DatasetBundle bundle{FeatureMatrix(read_features(file("X"), format), Modality::kImage),
                       FeatureMatrix(read_features(file("Y"), format), Modality::kText),
                       labels("L"), std::nullopt};
  if (std::filesystem::exists(dataset_file(dir, "Xq", format))) {
    bundle.queries.emplace(QuerySplit{
        FeatureMatrix(read_features(file("Xq"), format), Modality::kImage),
        FeatureMatrix(read_features(file("Yq"), format), Modality::kText), labels("Lq")});
  }
  bundle.validate();
  return bundle;
}

void save_dataset(const DatasetBundle& bundle, const std::filesystem::path& dir, DataFormat format) {
  bundle.validate();
  std::filesystem::create_directories(dir);
  const auto put_features = [&](const char* stem, const Matrix& m) {
    write_file_atomic(dataset_file(dir, stem, format),
                      format == DataFormat::kBinary ? encode_matrix(m) : matrix_to_csv(m));
  };
  const auto put_labels = [&](const char* stem, const Matrix& m) {
    write_file_atomic(dataset_file(dir, stem, format),
                      format == DataFormat::kBinary ? encode_labels(m) : matrix_to_csv(m));
  };
  put_features("X", bundle.x.data());
  put_features("Y", bundle.y.data());
  put_labels("L", bundle.labels.data());
  if (bundle.queries) {
    put_features("Xq", bundle.queries->x.data());
    put_features("Yq", bundle.queries->y.data());
    put_labels("Lq", bundle.queries->labels.data());
  }
}

ModelFileLayout model_file_layout(const AcqhModel& model) {
  const auto& d = model.dims;
  const auto& h = model.hyper;
  ModelFileLayout layout;
  layout.header_bytes = 4 + 4 + 7 * 4 + 4 * 8 + 4 + 8 + 1;
  if (model.centering.enabled()) layout.header_bytes += 8 * static_cast<std::size_t>(d.dx + d.dy);
  layout.real_bytes = 8 * static_cast<std::size_t>(d.dx * h.bits + d.dy * h.bits +
                                                   h.bits * h.codebooks * h.atoms +
                                                   d.classes * h.bits + d.items);
  layout.codes_offset = layout.header_bytes + layout.real_bytes;
  layout.codes_bytes = static_cast<std::size_t>(d.items * h.codebooks) * code_width(h.atoms);
  layout.total_bytes = layout.codes_offset + layout.codes_bytes;
  layout.bits_per_item = static_cast<double>(h.codebooks) * std::log2(static_cast<double>(h.atoms));
  return layout;
}

std::string save_model(const AcqhModel& model) {
  model.validate();
  const auto& d = model.dims;
  const auto& h = model.hyper;
  ByteWriter w;
  w.bytes(kModelMagic);
  w.u32(kModelFormatVersion);
  w.u32(checked_u32(d.dx, "d_x"));
  w.u32(checked_u32(d.dy, "d_y"));
  w.u32(checked_u32(d.classes, "C"));
  w.u32(checked_u32(d.items, "N"));
  w.u32(checked_u32(h.bits, "K"));
  w.u32(checked_u32(h.codebooks, "m"));
  w.u32(checked_u32(h.atoms, "n"));
  w.f64(h.lambda);
  w.f64(h.mu);
  w.f64(h.tol);
  w.f64(h.ridge_eps);
  w.u32(checked_u32(h.max_iters, "max_iters"));
  w.u64(h.seed);
  w.u8(model.centering.enabled() ? 1 : 0);
  if (model.centering.enabled()) {
    w.matrix(model.centering.mean_x.transpose());
    w.matrix(model.centering.mean_y.transpose());
  }
  w.matrix(model.projections.wx);
  w.matrix(model.projections.wy);
  w.matrix(model.codebook.matrix());
  w.matrix(model.regressor.m);
  w.matrix(model.regressor.drift.transpose());
  const bool narrow = code_width(h.atoms) == 1;
  for (const AtomIndex a : model.codes.raw()) {
    if (narrow) {
      w.u8(static_cast<std::uint8_t>(a));
    } else {
      w.u16(a);
    }
  }
  return w.take();
}

AcqhModel load_model(std::string_view bytes) {
  ByteReader r(bytes);
  if (r.bytes(4) != kModelMagic) throw FormatError("model file: bad magic");
  const std::uint32_t version = r.u32();
  if (version != kModelFormatVersion) {
    throw FormatError("model file: unsupported version " + std::to_string(version));
  }

  AcqhModel model;
  auto& d = model.dims;
  auto& h = model.hyper;
  d.dx = r.u32();
  d.dy = r.u32();
  d.classes = r.u32();
  d.items = r.u32();
  h.bits = r.u32();
  h.codebooks = r.u32();
  h.atoms = r.u32();
  h.lambda = r.f64();
  h.mu = r.f64();
  h.tol = r.f64();
  h.ridge_eps = r.f64();
  h.max_iters = static_cast<int>(r.u32());
  h.seed = r.u64();
  const std::uint8_t centered = r.u8();
  if (centered > 1) throw FormatError("model file: bad centering flag");

  if (d.dx < 1 || d.dy < 1 || d.classes < 1 || d.items < 1) {
    throw FormatError("model file: zero dimension in header");
  }
  try {
    h.validate(d.dx, d.dy);
  } catch (const ArgumentError& e) {
    throw FormatError(std::string("model file: ") + e.what());
  }

  // Size check before any allocation sized by the header.
  const auto mul = [](std::uint64_t a, std::uint64_t b) {
    std::uint64_t out = 0;
    if (__builtin_mul_overflow(a, b, &out)) throw FormatError("model file: header sizes overflow");
    return out;
  };
  const auto add = [](std::uint64_t a, std::uint64_t b) {
    std::uint64_t out = 0;
    if (__builtin_add_overflow(a, b, &out)) throw FormatError("model file: header sizes overflow");
    return out;
  };
  const auto u = [](Index v) { return static_cast<std::uint64_t>(v); };
  std::uint64_t reals = add(mul(u(d.dx), u(h.bits)), mul(u(d.dy), u(h.bits)));
  reals = add(reals, mul(mul(u(h.bits), u(h.codebooks)), u(h.atoms)));
  reals = add(reals, add(mul(u(d.classes), u(h.bits)), u(d.items)));
  if (centered) reals = add(reals, u(d.dx) + u(d.dy));
  const std::uint64_t expected =
      add(mul(8, reals), mul(mul(u(d.items), u(h.codebooks)), code_width(h.atoms)));
  if (r.remaining() < expected) throw FormatError("model file: truncated payload");
  if (r.remaining() > expected) throw FormatError("model file: trailing bytes after payload");

  if (centered) {
    model.centering.mean_x = r.matrix(1, d.dx).transpose();
    model.centering.mean_y = r.matrix(1, d.dy).transpose();
  }
  model.projections.wx = r.matrix(d.dx, h.bits);
  model.projections.wy = r.matrix(d.dy, h.bits);
  Matrix atoms = r.matrix(h.bits, h.codebooks * h.atoms);
  model.regressor.m = r.matrix(d.classes, h.bits);
  model.regressor.drift = r.matrix(1, d.items).transpose();

  std::vector<AtomIndex> raw(static_cast<std::size_t>(d.items * h.codebooks));
  const bool narrow = code_width(h.atoms) == 1;
  for (auto& a : raw) a = narrow ? r.u8() : r.u16();

  try {
    model.codebook = Codebook(std::move(atoms), h.codebooks);
    model.codes = IndicatorCodes(h.codebooks, d.items, h.atoms, std::move(raw));
  } catch (const CodeError& e) {
    throw FormatError(std::string("model file: ") + e.what());
  } catch (const NumericError& e) {
    throw FormatError(std::string("model file: ") + e.what());
  }
  model.validate();
  return model;
}

void write_model_file(const std::filesystem::path& path, const AcqhModel& model) {
  write_file_atomic(path, save_model(model));
}

AcqhModel read_model_file(const std::filesystem::path& path) {
  const std::string bytes = read_file(path);
  try {
    return load_model(bytes);
  } catch (const FormatError& e) {
    throw FormatError(path.string() + ": " + e.what());
  }
}

void write_trace_csv(std::ostream& out, const std::vector<TraceRecord>& trace) {
  out << "iteration,objective,image_term,text_term,label_term,regularizer,relative_change\n";
  for (const TraceRecord& rec : trace) {
    out << rec.iteration << ',' << format_double(rec.terms.total()) << ','
        << format_double(rec.terms.image) << ',' << format_double(rec.terms.text) << ','
        << format_double(rec.terms.label) << ',' << format_double(rec.terms.regularizer) << ','
        << format_double(rec.relative_change) << '\n';
  }
}

void write_topn_csv(std::ostream& out, const std::vector<TopNPoint>& curve) {
  out << "n,precision\n";
  for (const TopNPoint& p : curve) out << p.n << ',' << format_double(p.precision) << '\n';
}

void write_pr_csv(std::ostream& out, const std::vector<PrPoint>& curve) {
  out << "recall,precision\n";
  for (const PrPoint& p : curve) {
    out << format_double(p.recall) << ',' << format_double(p.precision) << '\n';
  }
}

void write_results_csv(std::ostream& out, Index query_id, const std::vector<Hit>& hits,
                       bool header) {
  if (header) out << "query_id,rank,item_id,score\n";
  for (std::size_t r = 0; r < hits.size(); ++r) {
    out << query_id << ',' << r + 1 << ',' << hits[r].item << ',' << format_double(hits[r].score)
        << '\n';
  }
}

}  // namespace acqh
