#include "fcmfed/experiment.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <iomanip>
#include <istream>
#include <ostream>
#include <sstream>
#include <stdexcept>

#include "fcmfed/seed.hpp"

namespace fcmfed {

namespace {

using nlohmann::json;

std::string slope_label(double slope) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%g", slope);
  return buf;
}

std::string percent(double fraction) {
  char buf[16];
  std::snprintf(buf, sizeof buf, "%.0f%%", fraction * 100.0);
  return buf;
}

double median(std::vector<double> v) {
  std::sort(v.begin(), v.end());
  const std::size_t n = v.size();
  return n % 2 == 1 ? v[n / 2] : (v[n / 2 - 1] + v[n / 2]) / 2.0;
}

bool is_isolated(const NamedPartition& partition, const ExperimentConfig& config) {
  return partition.proportions.size() == 1 || config.rounds == 0;
}

std::string combination_name(const NamedPartition& partition, const ShapeSetting& shape,
                             std::optional<FederationMode> mode, std::optional<WeightScheme> scheme) {
  std::string name = partition.name + "_";
  if (mode) {
    name += std::string(to_string(*mode)) + "_" + std::string(to_string(*scheme));
  } else {
    name += "isolated";
  }
  return name + "_" + std::string(to_string(shape.activation)) + slope_label(shape.slope);
}

void write_json(const std::filesystem::path& path, const json& doc) {
  std::ofstream out(path);
  if (!out) throw std::runtime_error("cannot write " + path.string());
  out << doc.dump(2) << '\n';
}

} // namespace

json config_to_json(const ExperimentConfig& c) {
  json partitions = json::array();
  for (const auto& p : c.partitions) partitions.push_back({{"name", p.name}, {"proportions", p.proportions}});
  json modes = json::array();
  for (auto m : c.modes) modes.push_back(std::string(to_string(m)));
  json schemes = json::array();
  for (auto s : c.schemes) schemes.push_back(std::string(to_string(s)));
  json shapes = json::array();
  for (const auto& s : c.shapes) {
    shapes.push_back({{"activation", std::string(to_string(s.activation))}, {"slope", s.slope}});
  }
  json pso{
      {"swarm_size", c.pso.swarm_size},
      {"iterations", c.pso.iterations},
      {"phi1", c.pso.phi1},
      {"phi2", c.pso.phi2},
      {"velocity_clamp", c.pso.velocity_clamp},
      {"tolerance", c.pso.dynamics.tolerance},
      {"max_iterations", c.pso.dynamics.max_iterations},
  };
  if (c.pso.initial_velocity) pso["initial_velocity"] = *c.pso.initial_velocity;
  return {
      {"dataset",
       {{"path", c.dataset.generic_string()},
        {"label_column", c.csv.label_column},
        {"positive_label", c.csv.positive_label},
        {"delimiter", std::string(1, c.csv.delimiter)},
        {"missing_marker", c.csv.missing_marker},
        {"drop_columns", c.csv.drop_columns}}},
      {"partitions", partitions},
      {"modes", modes},
      {"schemes", schemes},
      {"shapes", shapes},
      {"rounds", c.rounds},
      {"test_fraction", c.test_fraction},
      {"pso", pso},
      {"seeds", c.seeds},
      {"output_dir", c.output_dir.generic_string()},
      {"write_round_reports", c.write_round_reports},
      {"parallel", c.parallel},
  };
}

ExperimentConfig config_from_json(const json& doc) {
  ExperimentConfig c;
  if (doc.contains("dataset")) {
    const auto& d = doc.at("dataset");
    c.dataset = d.at("path").get<std::string>();
    c.csv.label_column = d.value("label_column", std::string{});
    c.csv.positive_label = d.value("positive_label", std::string{});
    const auto delim = d.value("delimiter", std::string(","));
    if (delim.size() != 1) throw std::invalid_argument("config: delimiter must be one character");
    c.csv.delimiter = delim[0];
    c.csv.missing_marker = d.value("missing_marker", std::string("?"));
    c.csv.drop_columns = d.value("drop_columns", std::vector<std::string>{});
  }
  if (doc.contains("partitions")) {
    std::size_t i = 0;
    for (const auto& p : doc.at("partitions")) {
      NamedPartition np;
      if (p.is_array()) {
        np.name = "p" + std::to_string(i);
        np.proportions = p.get<std::vector<double>>();
      } else {
        np.name = p.value("name", "p" + std::to_string(i));
        np.proportions = p.at("proportions").get<std::vector<double>>();
      }
      c.partitions.push_back(std::move(np));
      ++i;
    }
  }
  if (doc.contains("modes")) {
    c.modes.clear();
    for (const auto& m : doc.at("modes")) c.modes.push_back(parse_federation_mode(m.get<std::string>()));
  }
  if (doc.contains("schemes")) {
    c.schemes.clear();
    for (const auto& s : doc.at("schemes")) c.schemes.push_back(parse_weight_scheme(s.get<std::string>()));
  }
  if (doc.contains("shapes")) {
    c.shapes.clear();
    for (const auto& s : doc.at("shapes")) {
      c.shapes.push_back({parse_activation(s.at("activation").get<std::string>()), s.at("slope").get<double>()});
    }
  }
  c.rounds = doc.value("rounds", c.rounds);
  c.test_fraction = doc.value("test_fraction", c.test_fraction);
  if (doc.contains("pso")) {
    const auto& p = doc.at("pso");
    c.pso.swarm_size = p.value("swarm_size", c.pso.swarm_size);
    c.pso.iterations = p.value("iterations", c.pso.iterations);
    c.pso.phi1 = p.value("phi1", c.pso.phi1);
    c.pso.phi2 = p.value("phi2", c.pso.phi2);
    c.pso.velocity_clamp = p.value("velocity_clamp", c.pso.velocity_clamp);
    if (p.contains("initial_velocity")) c.pso.initial_velocity = p.at("initial_velocity").get<double>();
    c.pso.dynamics.tolerance = p.value("tolerance", c.pso.dynamics.tolerance);
    c.pso.dynamics.max_iterations = p.value("max_iterations", c.pso.dynamics.max_iterations);
  }
  c.seeds = doc.value("seeds", c.seeds);
  c.output_dir = doc.value("output_dir", c.output_dir.generic_string());
  c.write_round_reports = doc.value("write_round_reports", c.write_round_reports);
  c.parallel = doc.value("parallel", c.parallel);
  return c;
}

ExperimentConfig load_config(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot read config " + path.string());
  return config_from_json(json::parse(in));
}

ReportRow average_row(const std::vector<ReportRow>& rows) {
  ReportRow avg;
  avg.agent = "avg";
  if (rows.empty()) return avg;
  for (const auto& r : rows) {
    avg.size += r.size;
    avg.positive_rate += r.positive_rate;
    avg.accuracy_pre += r.accuracy_pre;
    avg.accuracy_post += r.accuracy_post;
    avg.precision_pre += r.precision_pre;
    avg.precision_post += r.precision_post;
  }
  const double n = static_cast<double>(rows.size());
  avg.size /= n;
  avg.positive_rate /= n;
  avg.accuracy_pre /= n;
  avg.accuracy_post /= n;
  avg.precision_pre /= n;
  avg.precision_post /= n;
  return avg;
}

ReportTable median_table(const std::vector<ReportTable>& tables) {
  if (tables.empty()) throw std::invalid_argument("median_table: no tables");
  ReportTable out;
  out.title = tables.front().title + " (median over " + std::to_string(tables.size()) + " seeds)";
  out.metadata = tables.front().metadata;
  out.metadata.erase("seed");
  json seeds = json::array();
  for (const auto& t : tables) {
    if (t.rows.size() != tables.front().rows.size()) {
      throw std::invalid_argument("median_table: tables have different agent counts");
    }
    if (t.metadata.contains("seed")) seeds.push_back(t.metadata.at("seed"));
  }
  out.metadata["seeds"] = seeds;
  for (std::size_t r = 0; r < tables.front().rows.size(); ++r) {
    auto cell = [&](double ReportRow::*field) {
      std::vector<double> v;
      for (const auto& t : tables) v.push_back(t.rows[r].*field);
      return median(std::move(v));
    };
    ReportRow row;
    row.agent = tables.front().rows[r].agent;
    row.size = cell(&ReportRow::size);
    row.positive_rate = cell(&ReportRow::positive_rate);
    row.accuracy_pre = cell(&ReportRow::accuracy_pre);
    row.accuracy_post = cell(&ReportRow::accuracy_post);
    row.precision_pre = cell(&ReportRow::precision_pre);
    row.precision_post = cell(&ReportRow::precision_post);
    out.rows.push_back(std::move(row));
  }
  out.average = average_row(out.rows);
  return out;
}

std::string format_metric(double value) {
  // The epsilon treats decimal ties such as 0.92105 (stored a hair below the
  // tie) as ties.
  const double scaled = std::floor(std::abs(value) * 1e4 + 0.5 + 1e-7);
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.4f", std::copysign(scaled / 1e4, value));
  return buf;
}

void write_table_csv(std::ostream& out, const ReportTable& table) {
  out << kTableCsvHeader << '\n';
  auto line = [&](const ReportRow& r) {
    out << r.agent << ',' << format_metric(r.size) << ',' << format_metric(r.positive_rate) << ','
        << format_metric(r.accuracy_pre) << ',' << format_metric(r.accuracy_post) << ','
        << format_metric(r.precision_pre) << ',' << format_metric(r.precision_post) << '\n';
  };
  for (const auto& r : table.rows) line(r);
  line(table.average);
}

std::string render_table_text(const ReportTable& table) {
  std::ostringstream out;
  if (!table.title.empty()) out << table.title << "\n\n";
  const char* headers[] = {"Agent", "Size", "% 1s", "Accuracy Pre-FL", "Accuracy Post-FL",
                           "Precision Pre-FL", "Precision Post-FL"};
  const int widths[] = {6, 6, 6, 16, 17, 17, 18};
  for (int i = 0; i < 7; ++i) out << std::left << std::setw(widths[i]) << headers[i];
  out << '\n';
  auto line = [&](const ReportRow& r, bool average) {
    const std::string cells[] = {
        average ? "Avg." : r.agent,
        average ? "-" : percent(r.size),
        average ? "-" : percent(r.positive_rate),
        format_metric(r.accuracy_pre),
        format_metric(r.accuracy_post),
        format_metric(r.precision_pre),
        format_metric(r.precision_post)};
    for (int i = 0; i < 7; ++i) out << std::left << std::setw(widths[i]) << cells[i];
    out << '\n';
  };
  for (const auto& r : table.rows) line(r, false);
  line(table.average, true);
  if (!table.metadata.empty()) out << '\n' << table.metadata.dump() << '\n';
  return out.str();
}

ReportTable read_table_csv(std::istream& in) {
  std::string line;
  if (!std::getline(in, line) || line != kTableCsvHeader) {
    throw std::runtime_error("report table: unexpected header");
  }
  ReportTable table;
  bool have_average = false;
  while (std::getline(in, line)) {
    if (line.empty()) continue;
    std::stringstream ss(line);
    std::string cell;
    std::vector<std::string> cells;
    while (std::getline(ss, cell, ',')) cells.push_back(cell);
    if (cells.size() != 7) throw std::runtime_error("report table: malformed row");
    ReportRow r{cells[0],
                std::stod(cells[1]),
                std::stod(cells[2]),
                std::stod(cells[3]),
                std::stod(cells[4]),
                std::stod(cells[5]),
                std::stod(cells[6])};
    if (r.agent == "avg") {
      table.average = r;
      have_average = true;
    } else {
      table.rows.push_back(r);
    }
  }
  if (!have_average) throw std::runtime_error("report table: missing average row");
  return table;
}

void emit_table(const ReportTable& table, const std::filesystem::path& dir, const std::string& stem) {
  if (table.rows.empty()) throw std::invalid_argument("emit_table: table has no agent rows");
  std::filesystem::create_directories(dir);
  {
    std::ofstream csv(dir / (stem + ".csv"));
    if (!csv) throw std::runtime_error("cannot write " + (dir / (stem + ".csv")).string());
    write_table_csv(csv, table);
  }
  std::ofstream txt(dir / (stem + ".txt"));
  if (!txt) throw std::runtime_error("cannot write " + (dir / (stem + ".txt")).string());
  txt << render_table_text(table);
}

bool ExperimentResult::all_ok() const noexcept {
  return std::all_of(combinations.begin(), combinations.end(), [](const auto& c) { return c.ok; });
}

RunSeeds run_seeds(std::uint64_t experiment_seed) noexcept {
  return {derive_seed(experiment_seed, {1}), derive_seed(experiment_seed, {2}),
          derive_seed(experiment_seed, {3})};
}

SingleRun run_single(const RawTable& table, const NamedPartition& partition, FederationMode mode,
                     WeightScheme scheme, const ShapeSetting& shape, std::uint64_t seed,
                     const ExperimentConfig& config) {
  const RunSeeds seeds = run_seeds(seed);
  auto shares = prepare_participant_data(table, PartitionSpec{partition.proportions, seeds.partition},
                                         config.test_fraction, seeds.split);

  std::vector<ParticipantState> participants;
  for (std::size_t k = 0; k < shares.size(); ++k) {
    ParticipantState p;
    p.id = k + 1;
    p.train = std::move(shares[k].train);
    p.test = std::move(shares[k].test);
    participants.push_back(std::move(p));
  }

  FederationConfig fc;
  fc.mode = mode;
  fc.scheme = scheme;
  fc.rounds = config.rounds;
  fc.pso = config.pso;
  fc.shape = {participants.front().train.n_features(), 2, shape.activation, shape.slope};
  fc.master_seed = seeds.master;
  fc.parallel = config.parallel;

  const bool isolated = is_isolated(partition, config);
  SingleRun run{{}, isolated ? run_isolated(std::move(participants), fc)
                             : run_federation(std::move(participants), fc)};

  ReportTable& t = run.table;
  const auto& summary = run.federation.summary;
  for (std::size_t k = 0; k < summary.participants.size(); ++k) {
    const auto& ps = summary.participants[k];
    const auto& share = shares.at(ps.id - 1);
    t.rows.push_back({std::to_string(ps.id),
                      static_cast<double>(share.rows) / static_cast<double>(table.rows()),
                      share.positive_rate, ps.pre.accuracy, ps.post.accuracy, ps.pre.precision,
                      ps.post.precision});
  }
  t.average = average_row(t.rows);
  t.metadata = {
      {"partition", partition.name},
      {"mode", isolated ? std::string("isolated") : std::string(to_string(mode))},
      {"scheme", isolated ? std::string("none") : std::string(to_string(scheme))},
      {"activation", std::string(to_string(shape.activation))},
      {"slope", shape.slope},
      {"rounds", isolated ? 0 : config.rounds},
      {"seed", seed},
  };
  t.title = (isolated ? std::string("FCM without federation") :
                        std::string(mode == FederationMode::Blind ? "Blind FL" : "Blended Blind FL") +
                            " (" + std::string(to_string(scheme)) + " weights)") +
            ", " + std::string(to_string(shape.activation)) + " slope " + slope_label(shape.slope) +
            ", partition " + partition.name;
  return run;
}

ExperimentResult run_experiment(const ExperimentConfig& config, std::ostream* progress) {
  if (config.partitions.empty()) throw std::invalid_argument("config: no partitions");
  if (config.shapes.empty()) throw std::invalid_argument("config: no model shapes");
  if (config.seeds.empty()) throw std::invalid_argument("config: no seeds");

  struct Plan {
    std::string name;
    const NamedPartition* partition;
    ShapeSetting shape;
    FederationMode mode;
    WeightScheme scheme;
  };
  std::vector<Plan> plans;
  for (const auto& partition : config.partitions) {
    for (const auto& shape : config.shapes) {
      if (is_isolated(partition, config)) {
        plans.push_back({combination_name(partition, shape, std::nullopt, std::nullopt), &partition,
                         shape, FederationMode::Blind, WeightScheme::Constant});
        continue;
      }
      for (auto mode : config.modes) {
        for (auto scheme : config.schemes) {
          plans.push_back({combination_name(partition, shape, mode, scheme), &partition, shape, mode, scheme});
        }
      }
    }
  }

  const bool write = !config.output_dir.empty();
  ExperimentResult result;
  json manifest{{"config", config_to_json(config)}, {"combinations", json::array()}};

  std::optional<RawTable> table;
  std::string load_error;
  try {
    table = load_csv(config.dataset, config.csv);
    manifest["dataset"] = {{"rows", table->rows()}, {"dropped_rows", table->dropped_rows}};
  } catch (const std::exception& e) {
    load_error = e.what();
  }

  for (const auto& plan : plans) {
    CombinationResult combo;
    combo.name = plan.name;
    if (progress) *progress << "[" << plan.name << "]" << std::endl;
    try {
      if (!table) throw std::runtime_error(load_error);
      const auto dir = config.output_dir / plan.name;
      for (auto seed : config.seeds) {
        SingleRun run = run_single(*table, *plan.partition, plan.mode, plan.scheme, plan.shape, seed, config);
        if (write) {
          const std::string stem = "seed_" + std::to_string(seed);
          emit_table(run.table, dir, stem);
          const auto models_dir = dir / stem;
          std::filesystem::create_directories(models_dir);
          for (const auto& p : run.federation.participants) {
            write_json(models_dir / ("agent_" + std::to_string(p.id) + ".json"), model_to_json(*p.local_model));
          }
          if (config.write_round_reports && !run.federation.reports.empty()) {
            json reports = json::array();
            for (const auto& r : run.federation.reports) reports.push_back(report_to_json(r));
            write_json(models_dir / "rounds.json", reports);
          }
        }
        if (progress) {
          *progress << "  seed " << seed << ": accuracy " << format_metric(run.table.average.accuracy_pre)
                    << " -> " << format_metric(run.table.average.accuracy_post) << ", precision "
                    << format_metric(run.table.average.precision_pre) << " -> "
                    << format_metric(run.table.average.precision_post) << std::endl;
        }
        combo.tables.push_back(std::move(run.table));
      }
      if (combo.tables.size() > 1) {
        combo.median = median_table(combo.tables);
        if (write) emit_table(*combo.median, dir, "median");
      }
    } catch (const std::exception& e) {
      combo.ok = false;
      combo.error = e.what();
      if (progress) *progress << "  failed: " << e.what() << std::endl;
    }
    json entry{{"name", combo.name}, {"status", combo.ok ? "ok" : "failed"}};
    if (!combo.ok) entry["error"] = combo.error;
    manifest["combinations"].push_back(std::move(entry));
    result.combinations.push_back(std::move(combo));
  }

  if (write) {
    std::filesystem::create_directories(config.output_dir);
    write_json(config.output_dir / "manifest.json", manifest);
  }
  return result;
}

} // namespace fcmfed
