#pragma once

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <span>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "fcmfed/matrix.hpp"

namespace fcmfed {

struct CsvOptions {
  char delimiter = ',';
  std::string label_column;
  std::string positive_label;
  // Cells equal to this marker (after trimming) or empty mark a missing value.
  std::string missing_marker = "?";
  std::vector<std::string> drop_columns;
};

// Parsed CSV: feature cells as text, label column mapped to {0, 1}.
struct RawTable {
  std::vector<std::string> columns;
  std::vector<std::vector<std::string>> cells;
  std::vector<int> labels;
  std::size_t dropped_rows = 0;

  std::size_t rows() const noexcept { return cells.size(); }
};

RawTable parse_csv(std::istream& in, const CsvOptions& options);
RawTable load_csv(const std::filesystem::path& path, const CsvOptions& options);
RawTable select_rows(const RawTable& table, std::span<const std::size_t> indices);

enum class ColumnKind { Numeric, Categorical };

struct ColumnSchema {
  std::string name;
  ColumnKind kind = ColumnKind::Numeric;
  // Sorted category vocabulary; empty for numeric columns.
  std::vector<std::string> categories;
};

// A column is numeric when every cell parses as a number.
std::vector<ColumnSchema> infer_schema(const RawTable& table);

struct ColumnStats {
  ColumnSchema schema;
  double min = 0.0;
  double max = 0.0;
};

struct NormalizationStats {
  std::vector<ColumnStats> columns;
  // Constant numeric columns (mapped to 0.5).
  std::vector<std::string> constant_columns;

  std::vector<std::string> feature_names() const;
};

nlohmann::json stats_to_json(const NormalizationStats& stats);
NormalizationStats stats_from_json(const nlohmann::json& doc);

struct Dataset {
  Matrix features;
  std::vector<int> labels;
  std::vector<std::string> feature_names;

  std::size_t size() const noexcept { return labels.size(); }
  std::size_t n_features() const noexcept { return features.cols(); }
  double positive_rate() const noexcept;
  Dataset subset(std::span<const std::size_t> indices) const;
};

NormalizationStats fit_normalization(const RawTable& table, const std::vector<ColumnSchema>& schema);

// Min-max scales numeric columns and one-hot encodes categorical ones.
// Values outside the fitted range are clamped into [0, 1]; unseen categories
// encode as all-zero indicators.
Dataset apply_normalization(const RawTable& table, const NormalizationStats& stats);

// fit_normalization + apply_normalization using the table's own schema.
Dataset encode_and_normalize(const RawTable& table);

struct PartitionSpec {
  std::vector<double> proportions;
  std::uint64_t shuffle_seed = 0;

  void validate() const;
};

// Row counts per share by largest-remainder rounding; ties on the remainder
// go to the lower index. Counts sum to n.
std::vector<std::size_t> partition_counts(std::size_t n, std::span<const double> proportions);

// Shuffled row indices assigned contiguously to each share.
std::vector<std::vector<std::size_t>> partition_indices(std::size_t n, const PartitionSpec& spec);

std::vector<Dataset> partition(const Dataset& dataset, const PartitionSpec& spec);

struct SplitIndices {
  std::vector<std::size_t> train;
  std::vector<std::size_t> test;
};

// Seeded shuffle; the test side gets floor(n * test_fraction) rows.
SplitIndices split_indices(std::size_t n, double test_fraction, std::uint64_t seed);

struct TrainTestSplit {
  Dataset train;
  Dataset test;
};

TrainTestSplit train_test_split(const Dataset& dataset, double test_fraction, std::uint64_t seed);

// One participant's private data. Normalization statistics are fitted on the
// participant's own training rows only.
struct ParticipantData {
  Dataset train;
  Dataset test;
  std::size_t rows = 0;
  double positive_rate = 0.0;
  NormalizationStats stats;
};

// Partitions raw rows across participants, then splits and normalizes each
// share locally. The categorical vocabulary comes from the whole table's
// schema so every participant ends up with the same feature layout.
std::vector<ParticipantData> prepare_participant_data(const RawTable& table,
                                                      const PartitionSpec& spec,
                                                      double test_fraction,
                                                      std::uint64_t split_seed);

void write_dataset_csv(const std::filesystem::path& path, const Dataset& dataset);

} // namespace fcmfed
