/**
 * @file ingest.hpp
 * @brief Raw CSV loading, categorical encoding, mean imputation and the
 * class-balanced train/test split.
 */
#pragma once

#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

#include "metaboost/matrix.hpp"

namespace metaboost {

/// Columns every input file must carry, in canonical order.
inline constexpr std::string_view kIdColumn = "seqn";
inline constexpr std::string_view kLabelColumn = "MetabolicSyndrome";
inline constexpr std::string_view kDroppedColumn = "Marital";

/// Raw rows keyed by the file's header; empty cells are recorded as absent.
struct RawTable {
  std::vector<std::string> columns;
  std::vector<std::vector<std::optional<std::string>>> rows;
  std::vector<std::size_t> source_lines;

  std::size_t size() const { return rows.size(); }
  std::optional<std::size_t> column_index(std::string_view name) const;
  /// Value of `name` in row `r`; throws SchemaError if the column is unknown.
  const std::optional<std::string>& at(std::size_t r, std::string_view name) const;
};

enum class FeatureKind { numeric, categorical };

/// Bijective map between category strings and integer codes.
class CategoryMap {
 public:
  CategoryMap() = default;
  explicit CategoryMap(std::vector<std::pair<std::string, int>> entries);

  std::optional<int> encode(std::string_view label) const;
  std::optional<std::string> decode(int code) const;
  const std::vector<std::pair<std::string, int>>& entries() const { return entries_; }

 private:
  std::vector<std::pair<std::string, int>> entries_;
};

struct FeatureSchema {
  std::vector<std::string> names;
  std::vector<FeatureKind> kinds;
  /// Admissible codes per feature; empty for numeric features.
  std::vector<std::vector<double>> valid_codes;
  CategoryMap sex;
  CategoryMap race;

  /// The twelve retained features with the standard sex/race encodings.
  static FeatureSchema standard();

  std::size_t size() const { return names.size(); }
  std::optional<std::size_t> index_of(std::string_view name) const;
  /// Like index_of but throws SchemaError naming the feature.
  std::size_t require(std::string_view name) const;
  /// Replaces each categorical value by its nearest admissible code (ties to the lower code).
  void snap_categoricals(std::span<double> row) const;

  bool operator==(const FeatureSchema& other) const;
};

struct Dataset {
  Matrix x;
  std::vector<int> y;
  FeatureSchema schema;
  std::vector<std::int64_t> ids;

  std::size_t size() const { return y.size(); }
  std::size_t n_features() const { return x.cols(); }
  std::size_t count(int label) const;
  Dataset subset(std::span<const std::size_t> rows) const;
  /// Throws DataError if shapes disagree or any value is non-finite.
  void validate() const;
};

/// Feature matrix in which a cell may be absent.
struct MaskedMatrix {
  std::size_t rows = 0;
  std::size_t cols = 0;
  std::vector<std::optional<double>> cells;

  MaskedMatrix() = default;
  MaskedMatrix(std::size_t r, std::size_t c) : rows(r), cols(c), cells(r * c) {}
  std::optional<double>& operator()(std::size_t r, std::size_t c) { return cells[r * cols + c]; }
  const std::optional<double>& operator()(std::size_t r, std::size_t c) const {
    return cells[r * cols + c];
  }
  std::size_t missing_in_column(std::size_t c) const;
};

struct EncodedTable {
  MaskedMatrix features;
  FeatureSchema schema;
  std::vector<int> labels;
  std::vector<std::int64_t> ids;
  /// Source line numbers of rows dropped because their label was absent.
  std::vector<std::size_t> rejected_lines;
};

struct TrainTestSplit {
  Dataset train;
  Dataset test;
  std::uint64_t seed = 0;
  double test_fraction = 0.33;
};

RawTable load_csv(const std::filesystem::path& path);
RawTable parse_raw_csv(std::string_view text);

EncodedTable encode_and_clean(const RawTable& raw);

/// Default imputation targets.
std::vector<std::string> default_imputation_columns();

/// Replaces absent cells in the named columns by the column mean over present cells.
MaskedMatrix impute_mean(const MaskedMatrix& m, const FeatureSchema& schema,
                         const std::vector<std::string>& columns);

/// Converts a fully observed table into a Dataset; throws ImputationError naming
/// the first column that still has missing values.
Dataset to_dataset(const EncodedTable& table);

/// load_csv -> encode_and_clean -> impute_mean -> to_dataset.
Dataset load_dataset(const std::filesystem::path& path,
                     const std::vector<std::string>& impute_columns = default_imputation_columns());

/// Number of test rows per class: floor(test_fraction * N / 2).
std::size_t test_rows_per_class(std::size_t n, double test_fraction);

TrainTestSplit split_balanced(const Dataset& ds, double test_fraction, std::uint64_t seed);

/// Encoded dataset CSV: id, features..., label. Values written round-trip exact.
void write_dataset_csv(const Dataset& ds, const std::filesystem::path& path,
                       const std::string& header_comment = {});
Dataset read_dataset_csv(const std::filesystem::path& path);

}  // namespace metaboost
