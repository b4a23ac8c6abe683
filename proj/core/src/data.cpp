#include "fcmfed/data.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <istream>
#include <numeric>
#include <random>
#include <set>
#include <stdexcept>

#include "fcmfed/seed.hpp"

namespace fcmfed {

namespace {

std::string trim(std::string_view s) {
  const auto first = s.find_first_not_of(" \t\r\n");
  if (first == std::string_view::npos) return {};
  const auto last = s.find_last_not_of(" \t\r\n");
  return std::string(s.substr(first, last - first + 1));
}

// Splits one CSV record; double quotes group fields and "" escapes a quote.
std::vector<std::string> split_record(const std::string& line, char delim) {
  std::vector<std::string> fields;
  std::string cur;
  bool quoted = false;
  for (std::size_t i = 0; i < line.size(); ++i) {
    const char c = line[i];
    if (quoted) {
      if (c == '"' && i + 1 < line.size() && line[i + 1] == '"') {
        cur += '"';
        ++i;
      } else if (c == '"') {
        quoted = false;
      } else {
        cur += c;
      }
    } else if (c == '"') {
      quoted = true;
    } else if (c == delim) {
      fields.push_back(trim(cur));
      cur.clear();
    } else {
      cur += c;
    }
  }
  fields.push_back(trim(cur));
  return fields;
}

bool parse_number(const std::string& s, double& out) {
  if (s.empty()) return false;
  const char* begin = s.data();
  const char* end = s.data() + s.size();
  if (*begin == '+') ++begin;
  auto [ptr, ec] = std::from_chars(begin, end, out);
  return ec == std::errc() && ptr == end && std::isfinite(out);
}

} // namespace

RawTable parse_csv(std::istream& in, const CsvOptions& options) {
  std::string line;
  if (!std::getline(in, line)) throw std::runtime_error("CSV input has no header row");
  const auto header = split_record(line, options.delimiter);

  std::size_t label_idx = header.size();
  std::vector<std::size_t> keep;
  RawTable table;
  for (std::size_t i = 0; i < header.size(); ++i) {
    if (header[i] == options.label_column) {
      label_idx = i;
    } else if (std::find(options.drop_columns.begin(), options.drop_columns.end(), header[i]) ==
               options.drop_columns.end()) {
      keep.push_back(i);
      table.columns.push_back(header[i]);
    }
  }
  if (label_idx == header.size()) {
    throw std::runtime_error("CSV is missing label column '" + options.label_column + "'");
  }

  while (std::getline(in, line)) {
    if (trim(line).empty()) continue;
    auto fields = split_record(line, options.delimiter);
    if (fields.size() != header.size()) {
      throw std::runtime_error("CSV row has " + std::to_string(fields.size()) +
                               " fields, header has " + std::to_string(header.size()));
    }
    auto missing = [&](const std::string& cell) {
      return cell.empty() || cell == options.missing_marker;
    };
    bool drop = missing(fields[label_idx]);
    std::vector<std::string> row;
    row.reserve(keep.size());
    for (std::size_t i : keep) {
      drop = drop || missing(fields[i]);
      row.push_back(std::move(fields[i]));
    }
    if (drop) {
      ++table.dropped_rows;
      continue;
    }
    table.labels.push_back(fields[label_idx] == options.positive_label ? 1 : 0);
    table.cells.push_back(std::move(row));
  }
  return table;
}

RawTable load_csv(const std::filesystem::path& path, const CsvOptions& options) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot read CSV file " + path.string());
  return parse_csv(in, options);
}

RawTable select_rows(const RawTable& table, std::span<const std::size_t> indices) {
  RawTable out;
  out.columns = table.columns;
  out.cells.reserve(indices.size());
  out.labels.reserve(indices.size());
  for (std::size_t i : indices) {
    out.cells.push_back(table.cells.at(i));
    out.labels.push_back(table.labels.at(i));
  }
  return out;
}

std::vector<ColumnSchema> infer_schema(const RawTable& table) {
  std::vector<ColumnSchema> schema(table.columns.size());
  for (std::size_t c = 0; c < table.columns.size(); ++c) {
    schema[c].name = table.columns[c];
    double v = 0.0;
    const bool numeric = std::all_of(table.cells.begin(), table.cells.end(),
                                     [&](const auto& row) { return parse_number(row[c], v); });
    if (!numeric) {
      schema[c].kind = ColumnKind::Categorical;
      std::set<std::string> cats;
      for (const auto& row : table.cells) cats.insert(row[c]);
      schema[c].categories.assign(cats.begin(), cats.end());
    }
  }
  return schema;
}

std::vector<std::string> NormalizationStats::feature_names() const {
  std::vector<std::string> names;
  for (const auto& col : columns) {
    if (col.schema.kind == ColumnKind::Numeric) {
      names.push_back(col.schema.name);
    } else {
      for (const auto& cat : col.schema.categories) names.push_back(col.schema.name + "=" + cat);
    }
  }
  return names;
}

nlohmann::json stats_to_json(const NormalizationStats& stats) {
  nlohmann::json cols = nlohmann::json::array();
  for (const auto& col : stats.columns) {
    nlohmann::json j{{"name", col.schema.name}};
    if (col.schema.kind == ColumnKind::Numeric) {
      j["kind"] = "numeric";
      j["min"] = col.min;
      j["max"] = col.max;
    } else {
      j["kind"] = "categorical";
      j["categories"] = col.schema.categories;
    }
    cols.push_back(std::move(j));
  }
  return {{"columns", cols}, {"constant_columns", stats.constant_columns}};
}

NormalizationStats stats_from_json(const nlohmann::json& doc) {
  NormalizationStats stats;
  for (const auto& j : doc.at("columns")) {
    ColumnStats col;
    col.schema.name = j.at("name").get<std::string>();
    if (j.at("kind") == "numeric") {
      col.min = j.at("min").get<double>();
      col.max = j.at("max").get<double>();
    } else {
      col.schema.kind = ColumnKind::Categorical;
      col.schema.categories = j.at("categories").get<std::vector<std::string>>();
    }
    stats.columns.push_back(std::move(col));
  }
  if (doc.contains("constant_columns")) {
    stats.constant_columns = doc.at("constant_columns").get<std::vector<std::string>>();
  }
  return stats;
}

double Dataset::positive_rate() const noexcept {
  if (labels.empty()) return 0.0;
  const auto pos = std::count(labels.begin(), labels.end(), 1);
  return static_cast<double>(pos) / static_cast<double>(labels.size());
}

Dataset Dataset::subset(std::span<const std::size_t> indices) const {
  Dataset out;
  out.features = features.select_rows(indices);
  out.feature_names = feature_names;
  out.labels.reserve(indices.size());
  for (std::size_t i : indices) out.labels.push_back(labels.at(i));
  return out;
}

NormalizationStats fit_normalization(const RawTable& table, const std::vector<ColumnSchema>& schema) {
  if (schema.size() != table.columns.size()) {
    throw std::invalid_argument("fit_normalization: schema does not match table columns");
  }
  NormalizationStats stats;
  for (std::size_t c = 0; c < schema.size(); ++c) {
    ColumnStats col{schema[c], 0.0, 0.0};
    if (schema[c].kind == ColumnKind::Numeric) {
      double lo = INFINITY;
      double hi = -INFINITY;
      for (const auto& row : table.cells) {
        double v = 0.0;
        if (!parse_number(row[c], v)) {
          throw std::invalid_argument("non-numeric value '" + row[c] + "' in numeric column " +
                                      schema[c].name);
        }
        lo = std::min(lo, v);
        hi = std::max(hi, v);
      }
      if (table.cells.empty()) lo = hi = 0.0;
      col.min = lo;
      col.max = hi;
      if (!(hi > lo)) stats.constant_columns.push_back(schema[c].name);
    }
    stats.columns.push_back(std::move(col));
  }
  return stats;
}

Dataset apply_normalization(const RawTable& table, const NormalizationStats& stats) {
  if (stats.columns.size() != table.columns.size()) {
    throw std::invalid_argument("apply_normalization: statistics do not match table columns");
  }
  Dataset ds;
  ds.feature_names = stats.feature_names();
  ds.labels = table.labels;
  ds.features = Matrix(table.rows(), ds.feature_names.size());
  for (std::size_t r = 0; r < table.rows(); ++r) {
    auto out = ds.features.row(r);
    std::size_t k = 0;
    for (std::size_t c = 0; c < stats.columns.size(); ++c) {
      const auto& col = stats.columns[c];
      const std::string& cell = table.cells[r][c];
      if (col.schema.kind == ColumnKind::Numeric) {
        double v = 0.0;
        if (!parse_number(cell, v)) {
          throw std::invalid_argument("non-numeric value '" + cell + "' in numeric column " +
                                      col.schema.name);
        }
        out[k++] = col.max > col.min ? std::clamp((v - col.min) / (col.max - col.min), 0.0, 1.0)
                                     : 0.5;
      } else {
        for (const auto& cat : col.schema.categories) out[k++] = cell == cat ? 1.0 : 0.0;
      }
    }
  }
  return ds;
}

Dataset encode_and_normalize(const RawTable& table) {
  return apply_normalization(table, fit_normalization(table, infer_schema(table)));
}

void PartitionSpec::validate() const {
  if (proportions.empty()) throw std::invalid_argument("PartitionSpec: no proportions");
  double total = 0.0;
  for (double p : proportions) {
    if (!(p > 0.0)) throw std::invalid_argument("PartitionSpec: proportions must be positive");
    total += p;
  }
  if (std::abs(total - 1.0) > 1e-9) {
    throw std::invalid_argument("PartitionSpec: proportions must sum to 1");
  }
}

std::vector<std::size_t> partition_counts(std::size_t n, std::span<const double> proportions) {
  std::vector<std::size_t> counts(proportions.size());
  std::vector<double> remainder(proportions.size());
  std::size_t assigned = 0;
  for (std::size_t i = 0; i < proportions.size(); ++i) {
    const double exact = proportions[i] * static_cast<double>(n);
    counts[i] = static_cast<std::size_t>(std::floor(exact));
    remainder[i] = exact - static_cast<double>(counts[i]);
    assigned += counts[i];
  }
  std::vector<std::size_t> order(proportions.size());
  std::iota(order.begin(), order.end(), 0);
  std::stable_sort(order.begin(), order.end(),
                   [&](std::size_t a, std::size_t b) { return remainder[a] > remainder[b]; });
  for (std::size_t k = 0; assigned < n; ++k, ++assigned) ++counts[order[k % order.size()]];
  return counts;
}

std::vector<std::vector<std::size_t>> partition_indices(std::size_t n, const PartitionSpec& spec) {
  spec.validate();
  const auto counts = partition_counts(n, spec.proportions);
  for (std::size_t c : counts) {
    if (c < 2) throw std::invalid_argument("partition: a share would hold fewer than 2 rows");
  }
  std::vector<std::size_t> order(n);
  std::iota(order.begin(), order.end(), 0);
  std::mt19937_64 rng(spec.shuffle_seed);
  std::shuffle(order.begin(), order.end(), rng);

  std::vector<std::vector<std::size_t>> shares;
  auto it = order.begin();
  for (std::size_t c : counts) {
    shares.emplace_back(it, it + static_cast<std::ptrdiff_t>(c));
    it += static_cast<std::ptrdiff_t>(c);
  }
  return shares;
}

std::vector<Dataset> partition(const Dataset& dataset, const PartitionSpec& spec) {
  std::vector<Dataset> out;
  for (const auto& idx : partition_indices(dataset.size(), spec)) out.push_back(dataset.subset(idx));
  return out;
}

SplitIndices split_indices(std::size_t n, double test_fraction, std::uint64_t seed) {
  if (!(test_fraction > 0.0 && test_fraction < 1.0)) {
    throw std::invalid_argument("train_test_split: test_fraction must lie in (0, 1)");
  }
  // The epsilon keeps exact products such as 10 * 0.2 from flooring to 1.
  const auto n_test = static_cast<std::size_t>(std::floor(static_cast<double>(n) * test_fraction + 1e-9));
  if (n_test == 0 || n_test >= n) {
    throw std::invalid_argument("train_test_split: split would leave one side empty");
  }
  std::vector<std::size_t> order(n);
  std::iota(order.begin(), order.end(), 0);
  std::mt19937_64 rng(seed);
  std::shuffle(order.begin(), order.end(), rng);
  SplitIndices split;
  split.test.assign(order.begin(), order.begin() + static_cast<std::ptrdiff_t>(n_test));
  split.train.assign(order.begin() + static_cast<std::ptrdiff_t>(n_test), order.end());
  return split;
}

TrainTestSplit train_test_split(const Dataset& dataset, double test_fraction, std::uint64_t seed) {
  const auto idx = split_indices(dataset.size(), test_fraction, seed);
  return {dataset.subset(idx.train), dataset.subset(idx.test)};
}

std::vector<ParticipantData> prepare_participant_data(const RawTable& table,
                                                      const PartitionSpec& spec,
                                                      double test_fraction,
                                                      std::uint64_t split_seed) {
  const auto schema = infer_schema(table);
  std::vector<ParticipantData> out;
  const auto shares = partition_indices(table.rows(), spec);
  for (std::size_t k = 0; k < shares.size(); ++k) {
    const RawTable share = select_rows(table, shares[k]);
    const auto split = split_indices(share.rows(), test_fraction, derive_seed(split_seed, {k}));
    const RawTable train_raw = select_rows(share, split.train);
    const RawTable test_raw = select_rows(share, split.test);

    ParticipantData pd;
    pd.stats = fit_normalization(train_raw, schema);
    pd.train = apply_normalization(train_raw, pd.stats);
    pd.test = apply_normalization(test_raw, pd.stats);
    pd.rows = share.rows();
    pd.positive_rate = static_cast<double>(std::count(share.labels.begin(), share.labels.end(), 1)) /
                       static_cast<double>(share.rows());
    out.push_back(std::move(pd));
  }
  return out;
}

void write_dataset_csv(const std::filesystem::path& path, const Dataset& dataset) {
  std::ofstream out(path);
  if (!out) throw std::runtime_error("cannot write dataset " + path.string());
  for (const auto& name : dataset.feature_names) out << name << ',';
  out << "label\n";
  char buf[32];
  for (std::size_t r = 0; r < dataset.size(); ++r) {
    for (double v : dataset.features.row(r)) {
      std::snprintf(buf, sizeof buf, "%.17g", v);
      out << buf << ',';
    }
    out << dataset.labels[r] << '\n';
  }
}

} // namespace fcmfed
