#include "pls/dataset.hpp"

#include "csv.hpp"
#include "pls/error.hpp"

#include <array>
#include <bit>
#include <cmath>
#include <cstring>
#include <fstream>
#include <istream>
#include <ostream>
#include <sstream>

namespace pls {

namespace {

constexpr double kRowSumTolerance = 1e-9;
constexpr double kRenormalizeTolerance = 1e-6;

constexpr std::array<char, 4> kMagic = {'P', 'L', 'S', 'D'};
constexpr std::uint32_t kBinaryVersion = 1;
constexpr std::uint32_t kFlagTruth = 1u << 0;
constexpr std::uint32_t kFlagClassNames = 1u << 1;

constexpr std::string_view kClassesPrefix = "# classes:";

}  // namespace

EmbeddedDataset::EmbeddedDataset(std::vector<std::string> ids, Matrix features,
                                 std::optional<Matrix> truth,
                                 std::vector<std::string> class_names)
    : ids_(std::move(ids)), features_(std::move(features)), truth_(std::move(truth)),
      class_names_(std::move(class_names)) {
  const auto n = static_cast<Index>(features_.rows());
  if (n < 1) throw ValidationError("dataset must contain at least one point");
  if (features_.cols() < 1) throw ValidationError("dataset must have at least one feature");
  if (ids_.size() != n)
    throw ValidationError("id count " + std::to_string(ids_.size()) +
                          " does not match point count " + std::to_string(n));

  for (Index i = 0; i < n; ++i) {
    for (Eigen::Index j = 0; j < features_.cols(); ++j)
      if (!std::isfinite(features_(static_cast<Eigen::Index>(i), j)))
        throw ValidationError("non-finite feature value", i);
  }

  index_.reserve(n);
  for (Index i = 0; i < n; ++i) {
    if (!index_.emplace(ids_[i], i).second)
      throw ValidationError("duplicate id '" + ids_[i] + "'", i);
  }

  if (truth_) {
    Matrix& t = *truth_;
    if (static_cast<Index>(t.rows()) != n)
      throw ValidationError("truth has " + std::to_string(t.rows()) + " rows, expected " +
                            std::to_string(n));
    if (t.cols() < 2) throw ValidationError("soft labels need at least two classes");
    for (Index i = 0; i < n; ++i) {
      auto row = t.row(static_cast<Eigen::Index>(i));
      double sum = 0.0;
      for (Eigen::Index c = 0; c < row.size(); ++c) {
        if (!std::isfinite(row(c)) || row(c) < 0.0)
          throw ValidationError("soft label entries must be finite and nonnegative", i);
        sum += row(c);
      }
      const double deviation = std::abs(sum - 1.0);
      if (deviation > kRenormalizeTolerance)
        throw ValidationError("soft label row sums to " + detail::format_double(sum), i);
      if (deviation > kRowSumTolerance) row /= sum;
    }
    if (!class_names_.empty() && class_names_.size() != static_cast<Index>(t.cols()))
      throw ValidationError("class name count does not match class count");
  } else if (!class_names_.empty()) {
    throw ValidationError("class names given without soft labels");
  }
}

std::optional<Index> EmbeddedDataset::find(std::string_view id) const {
  const auto it = index_.find(std::string(id));
  if (it == index_.end()) return std::nullopt;
  return it->second;
}

double EmbeddedDataset::squared_distance(Index i, Index j) const {
  return (point(i) - point(j)).squaredNorm();
}

bool operator==(const EmbeddedDataset& a, const EmbeddedDataset& b) {
  if (a.ids_ != b.ids_ || a.class_names_ != b.class_names_) return false;
  if (a.features_.rows() != b.features_.rows() || a.features_.cols() != b.features_.cols())
    return false;
  if (a.features_ != b.features_) return false;
  if (a.truth_.has_value() != b.truth_.has_value()) return false;
  if (a.truth_) {
    if (a.truth_->cols() != b.truth_->cols()) return false;
    if (*a.truth_ != *b.truth_) return false;
  }
  return true;
}

std::vector<std::string> sequential_ids(Index n) {
  std::vector<std::string> ids;
  ids.reserve(n);
  for (Index i = 0; i < n; ++i) ids.push_back(std::to_string(i));
  return ids;
}

DatasetFormat format_for_path(const std::filesystem::path& path) {
  const auto ext = path.extension().string();
  if (ext == ".csv" || ext == ".txt") return DatasetFormat::DelimitedText;
  return DatasetFormat::PackedBinary;
}

// ---------------------------------------------------------------------------
// Delimited text: optional "# classes: a,b,..." line, then a header
// "id,f0,...,f{d-1}[,p0,...,p{C-1}]" and one row per point.

EmbeddedDataset read_delimited_dataset(std::istream& in) {
  std::string line;
  std::vector<std::string> class_names;

  auto next_content_line = [&](std::string& out) {
    while (std::getline(in, out)) {
      if (!detail::trim(out).empty()) return true;
    }
    return false;
  };

  if (!next_content_line(line)) throw ParseError("empty dataset file");
  if (std::string_view(line).starts_with(kClassesPrefix)) {
    for (auto name : detail::split_fields(std::string_view(line).substr(kClassesPrefix.size())))
      class_names.emplace_back(name);
    if (!next_content_line(line)) throw ParseError("missing header line");
  }

  const auto header = detail::split_fields(line);
  if (header.empty() || header[0] != "id")
    throw ParseError("header must start with 'id'");
  Index d = 0;
  Index c = 0;
  for (std::size_t k = 1; k < header.size(); ++k) {
    const std::string expected_f = "f" + std::to_string(d);
    const std::string expected_p = "p" + std::to_string(c);
    if (c == 0 && header[k] == expected_f) {
      ++d;
    } else if (header[k] == expected_p) {
      ++c;
    } else {
      throw ParseError("unexpected header column '" + std::string(header[k]) + "'");
    }
  }
  if (d == 0) throw ParseError("header declares no feature columns");
  if (c == 1) throw ParseError("header declares a single soft-label column");
  const std::size_t width = 1 + d + c;

  std::vector<std::string> ids;
  std::vector<double> feat;
  std::vector<double> probs;
  std::size_t row = 0;
  while (std::getline(in, line)) {
    if (detail::trim(line).empty()) continue;
    const auto fields = detail::split_fields(line);
    if (fields.size() != width)
      throw ParseError("expected " + std::to_string(width) + " columns, found " +
                           std::to_string(fields.size()),
                       row);
    ids.emplace_back(fields[0]);
    for (Index j = 0; j < d; ++j) feat.push_back(detail::parse_double(fields[1 + j], row));
    for (Index j = 0; j < c; ++j) probs.push_back(detail::parse_double(fields[1 + d + j], row));
    ++row;
  }
  if (row == 0) throw ParseError("dataset file has no data rows");

  Matrix features = Eigen::Map<Matrix>(feat.data(), static_cast<Eigen::Index>(row),
                                       static_cast<Eigen::Index>(d));
  std::optional<Matrix> truth;
  if (c > 0)
    truth = Eigen::Map<Matrix>(probs.data(), static_cast<Eigen::Index>(row),
                               static_cast<Eigen::Index>(c));
  return EmbeddedDataset(std::move(ids), std::move(features), std::move(truth),
                         std::move(class_names));
}

void write_delimited_dataset(const EmbeddedDataset& dataset, std::ostream& out) {
  const Index n = dataset.size();
  const Index d = dataset.dim();
  const Index c = dataset.num_classes();
  for (Index i = 0; i < n; ++i) {
    if (dataset.ids()[i].find_first_of(",\n\r") != std::string::npos)
      throw ValidationError("id contains a delimiter and cannot be written as text", i);
  }
  if (!dataset.class_names().empty()) {
    out << kClassesPrefix;
    for (Index k = 0; k < c; ++k) out << (k ? "," : " ") << dataset.class_names()[k];
    out << '\n';
  }
  out << "id";
  for (Index j = 0; j < d; ++j) out << ",f" << j;
  for (Index j = 0; j < c; ++j) out << ",p" << j;
  out << '\n';
  for (Index i = 0; i < n; ++i) {
    const auto ei = static_cast<Eigen::Index>(i);
    out << dataset.ids()[i];
    for (Index j = 0; j < d; ++j)
      out << ',' << detail::format_double(dataset.features()(ei, static_cast<Eigen::Index>(j)));
    for (Index j = 0; j < c; ++j)
      out << ',' << detail::format_double(dataset.truth()(ei, static_cast<Eigen::Index>(j)));
    out << '\n';
  }
}

// ---------------------------------------------------------------------------
// Packed binary, all integers and floats little-endian:
//   "PLSD" u32 version u64 n u64 d u64 C u32 flags
//   n x (u32 length, bytes)            ids
//   n*d f64                            features, row-major
//   n*C f64                            truth (flag bit 0)
//   C x (u32 length, bytes)            class names (flag bit 1)

namespace {

template <typename T>
void put_le(std::ostream& out, T value) {
  static_assert(std::is_unsigned_v<T>);
  char bytes[sizeof(T)];
  for (std::size_t k = 0; k < sizeof(T); ++k)
    bytes[k] = static_cast<char>((value >> (8 * k)) & 0xff);
  out.write(bytes, sizeof(T));
}

void put_f64(std::ostream& out, double value) { put_le(out, std::bit_cast<std::uint64_t>(value)); }

void put_string(std::ostream& out, const std::string& s) {
  put_le(out, static_cast<std::uint32_t>(s.size()));
  out.write(s.data(), static_cast<std::streamsize>(s.size()));
}

template <typename T>
T get_le(std::istream& in, const char* what) {
  unsigned char bytes[sizeof(T)];
  if (!in.read(reinterpret_cast<char*>(bytes), sizeof(T)))
    throw ParseError(std::string("truncated binary dataset while reading ") + what);
  T value = 0;
  for (std::size_t k = 0; k < sizeof(T); ++k) value |= static_cast<T>(bytes[k]) << (8 * k);
  return value;
}

double get_f64(std::istream& in, const char* what) {
  return std::bit_cast<double>(get_le<std::uint64_t>(in, what));
}

std::string get_string(std::istream& in, const char* what) {
  const auto len = get_le<std::uint32_t>(in, what);
  std::string s(len, '\0');
  if (len > 0 && !in.read(s.data(), len))
    throw ParseError(std::string("truncated binary dataset while reading ") + what);
  return s;
}

}  // namespace

void write_packed_dataset(const EmbeddedDataset& dataset, std::ostream& out) {
  const Index n = dataset.size();
  const Index d = dataset.dim();
  const Index c = dataset.num_classes();
  std::uint32_t flags = 0;
  if (dataset.has_truth()) flags |= kFlagTruth;
  if (!dataset.class_names().empty()) flags |= kFlagClassNames;

  out.write(kMagic.data(), kMagic.size());
  put_le(out, kBinaryVersion);
  put_le(out, static_cast<std::uint64_t>(n));
  put_le(out, static_cast<std::uint64_t>(d));
  put_le(out, static_cast<std::uint64_t>(c));
  put_le(out, flags);
  for (const auto& id : dataset.ids()) put_string(out, id);
  const Matrix& x = dataset.features();
  for (Eigen::Index i = 0; i < x.rows(); ++i)
    for (Eigen::Index j = 0; j < x.cols(); ++j) put_f64(out, x(i, j));
  if (dataset.has_truth()) {
    const Matrix& t = dataset.truth();
    for (Eigen::Index i = 0; i < t.rows(); ++i)
      for (Eigen::Index j = 0; j < t.cols(); ++j) put_f64(out, t(i, j));
  }
  for (const auto& name : dataset.class_names()) put_string(out, name);
}

EmbeddedDataset read_packed_dataset(std::istream& in) {
  std::array<char, 4> magic{};
  if (!in.read(magic.data(), magic.size()) || magic != kMagic)
    throw ParseError("not a packed dataset (bad magic)");
  const auto version = get_le<std::uint32_t>(in, "version");
  if (version != kBinaryVersion)
    throw ParseError("unsupported packed dataset version " + std::to_string(version));
  const auto n = get_le<std::uint64_t>(in, "n");
  const auto d = get_le<std::uint64_t>(in, "d");
  const auto c = get_le<std::uint64_t>(in, "C");
  const auto flags = get_le<std::uint32_t>(in, "flags");
  if (((flags & kFlagTruth) != 0) != (c > 0))
    throw ParseError("header class count disagrees with truth flag");
  constexpr std::uint64_t kLimit = std::uint64_t{1} << 40;
  if (n > kLimit || d > kLimit || c > kLimit || (d > 0 && n > kLimit / d))
    throw ParseError("implausible header dimensions");

  std::vector<std::string> ids;
  ids.reserve(n);
  for (std::uint64_t i = 0; i < n; ++i) ids.push_back(get_string(in, "ids"));
  Matrix features(static_cast<Eigen::Index>(n), static_cast<Eigen::Index>(d));
  for (Eigen::Index i = 0; i < features.rows(); ++i)
    for (Eigen::Index j = 0; j < features.cols(); ++j) features(i, j) = get_f64(in, "features");
  std::optional<Matrix> truth;
  if (flags & kFlagTruth) {
    truth.emplace(static_cast<Eigen::Index>(n), static_cast<Eigen::Index>(c));
    for (Eigen::Index i = 0; i < truth->rows(); ++i)
      for (Eigen::Index j = 0; j < truth->cols(); ++j) (*truth)(i, j) = get_f64(in, "truth");
  }
  std::vector<std::string> class_names;
  if (flags & kFlagClassNames)
    for (std::uint64_t k = 0; k < c; ++k) class_names.push_back(get_string(in, "class names"));
  return EmbeddedDataset(std::move(ids), std::move(features), std::move(truth),
                         std::move(class_names));
}

EmbeddedDataset load_dataset(const std::filesystem::path& path, DatasetFormat format) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error("cannot open dataset file " + path.string());
  return format == DatasetFormat::DelimitedText ? read_delimited_dataset(in)
                                                : read_packed_dataset(in);
}

void save_dataset(const EmbeddedDataset& dataset, const std::filesystem::path& path,
                  DatasetFormat format) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw Error("cannot open " + path.string() + " for writing");
  if (format == DatasetFormat::DelimitedText)
    write_delimited_dataset(dataset, out);
  else
    write_packed_dataset(dataset, out);
  out.flush();
  if (!out) throw Error("write failed for " + path.string());
}

}  // namespace pls
