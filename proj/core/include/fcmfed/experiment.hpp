#pragma once

#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <optional>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "fcmfed/data.hpp"
#include "fcmfed/federation.hpp"

namespace fcmfed {

struct NamedPartition {
  std::string name;
  std::vector<double> proportions;
};

struct ShapeSetting {
  ActivationKind activation = ActivationKind::HyperbolicTangent;
  double slope = 2.0;
};

struct ExperimentConfig {
  std::filesystem::path dataset;
  CsvOptions csv;
  std::vector<NamedPartition> partitions;
  std::vector<FederationMode> modes{FederationMode::Blind};
  std::vector<WeightScheme> schemes{WeightScheme::Constant};
  std::vector<ShapeSetting> shapes{ShapeSetting{}};
  // 0 disables federation: every share only trains in isolation.
  std::size_t rounds = 20;
  double test_fraction = 0.2;
  // seed is ignored; per-run seeds derive from `seeds`.
  PsoConfig pso;
  std::vector<std::uint64_t> seeds{1};
  std::filesystem::path output_dir = "results";
  bool write_round_reports = true;
  bool parallel = true;
};

nlohmann::json config_to_json(const ExperimentConfig& config);
// Relative dataset/output paths stay as written; callers resolve them.
ExperimentConfig config_from_json(const nlohmann::json& doc);
ExperimentConfig load_config(const std::filesystem::path& path);

struct ReportRow {
  std::string agent;
  double size = 0.0;
  double positive_rate = 0.0;
  double accuracy_pre = 0.0;
  double accuracy_post = 0.0;
  double precision_pre = 0.0;
  double precision_post = 0.0;
};

struct ReportTable {
  std::string title;
  std::vector<ReportRow> rows;
  ReportRow average;
  nlohmann::json metadata = nlohmann::json::object();
};

// Arithmetic mean of the metric columns; size and positive rate are averaged too.
ReportRow average_row(const std::vector<ReportRow>& rows);

// Cell-wise median over seeds. Tables must have the same agent rows.
ReportTable median_table(const std::vector<ReportTable>& tables);

// Four decimals, halves rounded up.
std::string format_metric(double value);

inline constexpr const char* kTableCsvHeader = "agent,size,pos_rate,acc_pre,acc_post,prec_pre,prec_post";

void write_table_csv(std::ostream& out, const ReportTable& table);
std::string render_table_text(const ReportTable& table);
ReportTable read_table_csv(std::istream& in);

// Writes <stem>.csv and <stem>.txt into dir. Refuses tables without agent rows.
void emit_table(const ReportTable& table, const std::filesystem::path& dir, const std::string& stem);

struct CombinationResult {
  std::string name;
  bool ok = true;
  std::string error;
  std::vector<ReportTable> tables;
  std::optional<ReportTable> median;
};

struct ExperimentResult {
  std::vector<CombinationResult> combinations;
  bool all_ok() const noexcept;
};

// Seeds used for one experiment seed.
struct RunSeeds {
  std::uint64_t partition;
  std::uint64_t split;
  std::uint64_t master;
};
RunSeeds run_seeds(std::uint64_t experiment_seed) noexcept;

struct SingleRun {
  ReportTable table;
  FederationResult federation;
};

// One (partition, mode, scheme, shape, seed) run against an already loaded table.
SingleRun run_single(const RawTable& table, const NamedPartition& partition, FederationMode mode,
                     WeightScheme scheme, const ShapeSetting& shape, std::uint64_t seed,
                     const ExperimentConfig& config);

// load -> partition -> federate -> report for every combination. A failing
// combination is recorded in the manifest and the rest continue. When
// output_dir is non-empty, tables, final models, round reports and
// manifest.json are written there.
ExperimentResult run_experiment(const ExperimentConfig& config, std::ostream* progress = nullptr);

} // namespace fcmfed
