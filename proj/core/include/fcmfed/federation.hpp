#pragma once

#include <cstddef>
#include <cstdint>
#include <functional>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include <nlohmann/json.hpp>

#include "fcmfed/aggregation.hpp"
#include "fcmfed/data.hpp"
#include "fcmfed/fcm.hpp"
#include "fcmfed/pso.hpp"

namespace fcmfed {

enum class FederationMode {
  // The new local matrix is the aggregate itself.
  Blind,
  // The new local matrix is the mean of the aggregate and the previous local matrix.
  BlendedBlind,
};

std::string_view to_string(FederationMode mode) noexcept;
// Accepts "blind" or "blended".
FederationMode parse_federation_mode(std::string_view name);

struct FederationConfig {
  FederationMode mode = FederationMode::Blind;
  WeightScheme scheme = WeightScheme::Constant;
  std::size_t rounds = 20;
  PsoConfig pso;
  ModelShape shape;
  std::uint64_t master_seed = 0;
  // Train participants of a round concurrently. Results do not depend on it.
  bool parallel = true;

  void validate() const;
};

struct RoundMetrics {
  double accuracy = 0.0;
  double precision = 0.0;
  double train_fitness = 1.0;
};

// One silo. local_model stays empty until the participant has trained its
// first model itself: nothing is ever handed out before that.
struct ParticipantState {
  std::uint64_t id = 0;
  // Base of this participant's training seeds; derived from the master seed
  // and id when absent.
  std::optional<std::uint64_t> seed;
  Dataset train;
  Dataset test;
  std::optional<FcmModel> local_model;
  // Entry 0 is the isolated (pre-federation) result, entry r the result after round r.
  std::vector<RoundMetrics> metric_history;
};

struct ClassificationMetrics {
  double accuracy = 0.0;
  double precision = 0.0;
};

// accuracy = correct / total; precision = TP / (TP + FP), 0 without positive predictions.
ClassificationMetrics classification_metrics(std::span<const int> truth, std::span<const int> predicted);

ClassificationMetrics evaluate_participant(const FcmModel& model, const Dataset& test,
                                           const DynamicsOptions& dynamics = classifier_dynamics());

Matrix local_update(const std::optional<Matrix>& previous, const Matrix& global, FederationMode mode);

// The only thing a participant sends to the aggregator.
struct RoundMessage {
  std::size_t round = 0;
  std::uint64_t participant_id = 0;
  Matrix matrix;
  double accuracy = 0.0;
  double precision = 0.0;
  double train_fitness = 1.0;
  std::size_t dataset_size = 0;

  ContributionBundle bundle() const;
};

nlohmann::json message_to_json(const RoundMessage& message);
RoundMessage message_from_json(const nlohmann::json& doc);

struct ParticipantRoundOutcome {
  std::uint64_t participant_id = 0;
  // Matrix the participant retrained from this round.
  Matrix warm_start;
  RoundMetrics metrics;
};

struct RoundReport {
  std::size_t round = 0;
  std::vector<RoundMessage> messages;
  std::vector<double> weights;
  bool weights_fell_back = false;
  Matrix aggregated;
  double federated_loss = 0.0;
  std::vector<ParticipantRoundOutcome> outcomes;
};

nlohmann::json report_to_json(const RoundReport& report);

struct ParticipantSummary {
  std::uint64_t id = 0;
  ClassificationMetrics pre;
  ClassificationMetrics post;
};

struct FederationSummary {
  std::vector<ParticipantSummary> participants;
  ClassificationMetrics average_pre;
  ClassificationMetrics average_post;
  std::vector<std::uint64_t> excluded;
  std::vector<std::string> warnings;
};

struct FederationResult {
  std::vector<ParticipantState> participants;
  std::vector<RoundReport> reports;
  FederationSummary summary;
};

enum class FederationPhase {
  // Nothing has been trained yet.
  Started,
  // Every participant has trained and evaluated its isolated model.
  LocalTrainingDone,
  RoundCompleted,
};

using FederationObserver =
    std::function<void(FederationPhase phase, std::size_t round, std::span<const ParticipantState>)>;

// Training seed of a participant for a round (round 0 = isolated training).
std::uint64_t participant_seed(std::uint64_t master_seed, const ParticipantState& participant,
                               std::size_t round) noexcept;

// Round 0 only: every participant trains from scratch on its own data. Post
// metrics in the summary equal the pre metrics.
FederationResult run_isolated(std::vector<ParticipantState> participants,
                              const FederationConfig& config,
                              const FederationObserver& observer = {});

// Isolated training followed by config.rounds rounds of
// collect -> aggregate -> local update -> retrain -> evaluate.
// Participants must arrive without a model. Those with an empty training
// split are excluded and listed in the summary.
FederationResult run_federation(std::vector<ParticipantState> participants,
                                const FederationConfig& config,
                                const FederationObserver& observer = {});

} // namespace fcmfed
