#pragma once

#include "pls/types.hpp"

#include <filesystem>
#include <optional>
#include <string>
#include <string_view>
#include <unordered_map>
#include <vector>

namespace pls {

/// n points in d dimensions, with optional ground-truth soft labels over C
/// classes. Immutable once constructed; the constructor validates every
/// invariant and throws ValidationError naming the offending row.
class EmbeddedDataset {
public:
  EmbeddedDataset(std::vector<std::string> ids, Matrix features,
                  std::optional<Matrix> truth = std::nullopt,
                  std::vector<std::string> class_names = {});

  Index size() const noexcept { return static_cast<Index>(features_.rows()); }
  Index dim() const noexcept { return static_cast<Index>(features_.cols()); }
  /// Number of truth classes, or 0 when no truth is attached.
  Index num_classes() const noexcept {
    return truth_ ? static_cast<Index>(truth_->cols()) : 0;
  }

  const std::vector<std::string>& ids() const noexcept { return ids_; }
  const Matrix& features() const noexcept { return features_; }
  bool has_truth() const noexcept { return truth_.has_value(); }
  /// Precondition: has_truth().
  const Matrix& truth() const { return *truth_; }
  const std::vector<std::string>& class_names() const noexcept { return class_names_; }

  auto point(Index i) const { return features_.row(static_cast<Eigen::Index>(i)); }
  std::optional<Index> find(std::string_view id) const;

  double squared_distance(Index i, Index j) const;

  friend bool operator==(const EmbeddedDataset& a, const EmbeddedDataset& b);

private:
  std::vector<std::string> ids_;
  Matrix features_;
  std::optional<Matrix> truth_;
  std::vector<std::string> class_names_;
  std::unordered_map<std::string, Index> index_;
};

enum class DatasetFormat { DelimitedText, PackedBinary };

/// ".csv"/".txt" map to delimited text, anything else to packed binary.
DatasetFormat format_for_path(const std::filesystem::path& path);

EmbeddedDataset load_dataset(const std::filesystem::path& path, DatasetFormat format);
void save_dataset(const EmbeddedDataset& dataset, const std::filesystem::path& path,
                  DatasetFormat format);

/// Stream variants used by the service for uploads.
EmbeddedDataset read_delimited_dataset(std::istream& in);
void write_delimited_dataset(const EmbeddedDataset& dataset, std::ostream& out);
EmbeddedDataset read_packed_dataset(std::istream& in);
void write_packed_dataset(const EmbeddedDataset& dataset, std::ostream& out);

/// Sequential ids "0", "1", ... for synthetic data.
std::vector<std::string> sequential_ids(Index n);

}  // namespace pls
