#include "fcmfed/federation.hpp"

#include <future>
#include <stdexcept>

#include "fcmfed/seed.hpp"

namespace fcmfed {

namespace {

// Runs fn(i) for every i in [0, n), optionally on separate threads.
template <typename Fn>
void for_each_index(std::size_t n, bool parallel, Fn&& fn) {
  if (!parallel || n < 2) {
    for (std::size_t i = 0; i < n; ++i) fn(i);
    return;
  }
  std::vector<std::future<void>> jobs;
  jobs.reserve(n);
  for (std::size_t i = 0; i < n; ++i) jobs.push_back(std::async(std::launch::async, fn, i));
  for (auto& job : jobs) job.get();
}

RoundMetrics train_and_evaluate(ParticipantState& p, const FederationConfig& config,
                                std::size_t round, const std::optional<Matrix>& warm_start) {
  PsoConfig pso = config.pso;
  pso.seed = participant_seed(config.master_seed, p, round);
  TrainResult trained = train(p.train.features, p.train.labels, config.shape, pso, warm_start);
  const auto metrics = evaluate_participant(trained.model, p.test, pso.dynamics);
  p.local_model = std::move(trained.model);
  RoundMetrics rm{metrics.accuracy, metrics.precision, trained.fitness};
  p.metric_history.push_back(rm);
  return rm;
}

void check_participants(const std::vector<ParticipantState>& participants,
                        const FederationConfig& config, std::size_t min_count) {
  // Isolated runs (min_count == 1) ignore the round count.
  FederationConfig checked = config;
  if (min_count == 1) checked.rounds = 1;
  checked.validate();
  if (participants.size() < min_count) {
    throw std::invalid_argument("federation needs at least " + std::to_string(min_count) +
                                " participants");
  }
  for (const auto& p : participants) {
    if (p.local_model || !p.metric_history.empty()) {
      throw std::invalid_argument("participant " + std::to_string(p.id) +
                                  " already holds a model; federation starts without one");
    }
    if (p.train.size() > 0 && p.train.n_features() != config.shape.n_input) {
      throw std::invalid_argument("participant " + std::to_string(p.id) +
                                  " has a different feature dimension");
    }
    if (p.test.size() == 0) {
      throw std::invalid_argument("participant " + std::to_string(p.id) + " has an empty test split");
    }
  }
}

ClassificationMetrics mean_of(const std::vector<ParticipantSummary>& rows, bool post) {
  ClassificationMetrics m;
  if (rows.empty()) return m;
  for (const auto& r : rows) {
    const auto& src = post ? r.post : r.pre;
    m.accuracy += src.accuracy;
    m.precision += src.precision;
  }
  m.accuracy /= static_cast<double>(rows.size());
  m.precision /= static_cast<double>(rows.size());
  return m;
}

// Splits off participants with nothing to train on.
std::vector<ParticipantState> take_active(std::vector<ParticipantState>& all, FederationSummary& summary) {
  std::vector<ParticipantState> active;
  for (auto& p : all) {
    if (p.train.size() == 0) {
      summary.excluded.push_back(p.id);
      summary.warnings.push_back("participant " + std::to_string(p.id) +
                                 " has an empty training split and was excluded");
    } else {
      active.push_back(std::move(p));
    }
  }
  return active;
}

void summarize(FederationResult& result) {
  auto& s = result.summary;
  s.participants.clear();
  for (const auto& p : result.participants) {
    const auto& first = p.metric_history.front();
    const auto& last = p.metric_history.back();
    s.participants.push_back({p.id, {first.accuracy, first.precision}, {last.accuracy, last.precision}});
  }
  s.average_pre = mean_of(s.participants, false);
  s.average_post = mean_of(s.participants, true);
}

} // namespace

std::string_view to_string(FederationMode mode) noexcept {
  return mode == FederationMode::Blind ? "blind" : "blended";
}

FederationMode parse_federation_mode(std::string_view name) {
  if (name == "blind") return FederationMode::Blind;
  if (name == "blended") return FederationMode::BlendedBlind;
  throw std::invalid_argument("unknown federation mode '" + std::string(name) +
                              "' (expected blind or blended)");
}

void FederationConfig::validate() const {
  if (rounds < 1) throw std::invalid_argument("FederationConfig: rounds must be at least 1");
  if (shape.n_output < 2) throw std::invalid_argument("FederationConfig: need at least two output nodes");
  if (!(shape.slope > 0.0)) throw std::invalid_argument("FederationConfig: slope must be positive");
  pso.validate();
}

ClassificationMetrics classification_metrics(std::span<const int> truth, std::span<const int> predicted) {
  if (truth.size() != predicted.size()) throw std::invalid_argument("classification_metrics: length mismatch");
  if (truth.empty()) throw std::invalid_argument("classification_metrics: empty test split");
  std::size_t correct = 0;
  std::size_t tp = 0;
  std::size_t fp = 0;
  for (std::size_t i = 0; i < truth.size(); ++i) {
    correct += truth[i] == predicted[i];
    tp += truth[i] == 1 && predicted[i] == 1;
    fp += truth[i] != 1 && predicted[i] == 1;
  }
  ClassificationMetrics m;
  m.accuracy = static_cast<double>(correct) / static_cast<double>(truth.size());
  m.precision = tp + fp == 0 ? 0.0 : static_cast<double>(tp) / static_cast<double>(tp + fp);
  return m;
}

ClassificationMetrics evaluate_participant(const FcmModel& model, const Dataset& test,
                                           const DynamicsOptions& dynamics) {
  if (test.size() == 0) throw std::invalid_argument("evaluate_participant: empty test split");
  return classification_metrics(test.labels, classify_rows(model, test.features, dynamics));
}

Matrix local_update(const std::optional<Matrix>& previous, const Matrix& global, FederationMode mode) {
  if (mode == FederationMode::Blind || !previous) return global;
  if (previous->rows() != global.rows() || previous->cols() != global.cols()) {
    throw std::invalid_argument("local_update: matrix dimensions differ");
  }
  Matrix out(global.rows(), global.cols());
  for (std::size_t k = 0; k < out.size(); ++k) {
    out.data()[k] = (previous->data()[k] + global.data()[k]) / 2.0;
  }
  return out;
}

ContributionBundle RoundMessage::bundle() const {
  return {matrix, accuracy, precision, participant_id, dataset_size};
}

nlohmann::json message_to_json(const RoundMessage& m) {
  return {
      {"round", m.round},
      {"participant_id", m.participant_id},
      {"matrix", weights_to_json(m.matrix)},
      {"accuracy", m.accuracy},
      {"precision", m.precision},
      {"train_fitness", m.train_fitness},
      {"dataset_size", m.dataset_size},
  };
}

RoundMessage message_from_json(const nlohmann::json& doc) {
  RoundMessage m;
  m.round = doc.at("round").get<std::size_t>();
  m.participant_id = doc.at("participant_id").get<std::uint64_t>();
  m.matrix = weights_from_json(doc.at("matrix"));
  m.accuracy = doc.at("accuracy").get<double>();
  m.precision = doc.at("precision").get<double>();
  m.train_fitness = doc.at("train_fitness").get<double>();
  m.dataset_size = doc.at("dataset_size").get<std::size_t>();
  return m;
}

nlohmann::json report_to_json(const RoundReport& r) {
  nlohmann::json messages = nlohmann::json::array();
  for (const auto& m : r.messages) messages.push_back(message_to_json(m));
  nlohmann::json outcomes = nlohmann::json::array();
  for (const auto& o : r.outcomes) {
    outcomes.push_back({{"participant_id", o.participant_id},
                        {"warm_start", weights_to_json(o.warm_start)},
                        {"accuracy", o.metrics.accuracy},
                        {"precision", o.metrics.precision},
                        {"train_fitness", o.metrics.train_fitness}});
  }
  return {
      {"round", r.round},
      {"messages", messages},
      {"weights", r.weights},
      {"weights_fell_back", r.weights_fell_back},
      {"aggregated", weights_to_json(r.aggregated)},
      {"federated_loss", r.federated_loss},
      {"outcomes", outcomes},
  };
}

std::uint64_t participant_seed(std::uint64_t master_seed, const ParticipantState& participant,
                               std::size_t round) noexcept {
  const std::uint64_t base = participant.seed.value_or(derive_seed(master_seed, {participant.id}));
  return derive_seed(base, {static_cast<std::uint64_t>(round)});
}

FederationResult run_isolated(std::vector<ParticipantState> participants,
                              const FederationConfig& config, const FederationObserver& observer) {
  check_participants(participants, config, 1);
  FederationResult result;
  result.participants = take_active(participants, result.summary);
  if (result.participants.empty()) throw std::invalid_argument("no participant has training data");

  if (observer) observer(FederationPhase::Started, 0, result.participants);
  for_each_index(result.participants.size(), config.parallel, [&](std::size_t i) {
    train_and_evaluate(result.participants[i], config, 0, std::nullopt);
  });
  if (observer) observer(FederationPhase::LocalTrainingDone, 0, result.participants);
  summarize(result);
  return result;
}

FederationResult run_federation(std::vector<ParticipantState> participants,
                                const FederationConfig& config, const FederationObserver& observer) {
  check_participants(participants, config, 2);
  FederationResult result = run_isolated(std::move(participants), config, observer);
  auto& active = result.participants;

  for (std::size_t round = 1; round <= config.rounds; ++round) {
    RoundReport report;
    report.round = round;
    std::vector<ContributionBundle> bundles;
    std::vector<double> losses;
    for (const auto& p : active) {
      const auto& last = p.metric_history.back();
      RoundMessage msg{round, p.id, p.local_model->weights(), last.accuracy,
                       last.precision, last.train_fitness, p.train.size()};
      bundles.push_back(msg.bundle());
      losses.push_back(msg.train_fitness);
      report.messages.push_back(std::move(msg));
    }

    auto agg = aggregate(bundles, config.scheme);
    report.aggregated = std::move(agg.matrix);
    report.weights = std::move(agg.weights.weights);
    report.weights_fell_back = agg.weights.fell_back_to_constant;
    report.federated_loss = federated_loss(losses, report.weights);
    if (report.weights_fell_back) {
      result.summary.warnings.push_back("round " + std::to_string(round) +
                                        ": all weighting metrics were zero, used constant weights");
    }

    report.outcomes.resize(active.size());
    for_each_index(active.size(), config.parallel, [&](std::size_t i) {
      auto& p = active[i];
      const std::optional<Matrix> previous = p.local_model->weights();
      Matrix warm = local_update(previous, report.aggregated, config.mode);
      const auto metrics = train_and_evaluate(p, config, round, warm);
      report.outcomes[i] = {p.id, std::move(warm), metrics};
    });

    result.reports.push_back(std::move(report));
    if (observer) observer(FederationPhase::RoundCompleted, round, active);
  }
  summarize(result);
  return result;
}

} // namespace fcmfed
