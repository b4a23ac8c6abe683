#pragma once

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <functional>
#include <iosfwd>
#include <optional>
#include <random>
#include <span>
#include <vector>

#include "fcmfed/fcm.hpp"
#include "fcmfed/matrix.hpp"

namespace fcmfed {

using Rng = std::mt19937_64;

// Shape of the classifier being trained; the weights are what PSO searches.
struct ModelShape {
  std::size_t n_input = 0;
  std::size_t n_output = 2;
  ActivationKind activation = ActivationKind::HyperbolicTangent;
  double slope = 2.0;

  std::size_t node_count() const noexcept { return n_input + n_output; }
};

struct PsoConfig {
  std::size_t swarm_size = 10;
  std::size_t iterations = 20;
  double phi1 = 2.0;
  double phi2 = 2.0;
  double velocity_clamp = 0.5;
  // Half-width of the uniform initial velocity draw; defaults to velocity_clamp.
  std::optional<double> initial_velocity;
  std::uint64_t seed = 0;
  // Dynamics used when classifying training rows during fitness evaluation.
  DynamicsOptions dynamics = classifier_dynamics();

  double initial_velocity_or_default() const noexcept {
    return initial_velocity.value_or(velocity_clamp);
  }
  void validate() const;
};

struct Particle {
  std::vector<double> position;
  std::vector<double> velocity;
  std::vector<double> best_position;
  double best_fitness = 1.0;
};

struct Swarm {
  std::vector<Particle> particles;
  std::vector<double> global_best_position;
  double global_best_fitness = 1.0;
  Rng rng;
};

// Number of encoded weights for an N-node model: the N*N - N off-diagonal
// entries in row-major order.
std::size_t encoded_length(std::size_t node_count) noexcept;
std::vector<double> flatten_off_diagonal(const Matrix& weights);
Matrix unflatten_off_diagonal(std::span<const double> position, std::size_t node_count);
FcmModel model_from_position(std::span<const double> position, const ModelShape& shape);

// 1 - TP / (TP + FP + FN) over the positive class (label 1). Defined as 0
// when neither vector contains a positive.
double fitness_jaccard_complement(std::span<const int> truth, std::span<const int> predicted);

// Builds the model a particle position encodes, classifies every row and
// scores the predictions against the labels.
double evaluate_candidate(std::span<const double> position, const ModelShape& shape,
                          const Matrix& features, std::span<const int> labels,
                          const DynamicsOptions& dynamics = classifier_dynamics());

// v' = v + U(0, phi1) * (pbest - x) + U(0, phi2) * (gbest - x), clamped to
// +-velocity_clamp. For every component the pbest draw is taken before the
// gbest draw, each as phi * U[0, 1) from the same generator.
std::vector<double> update_velocity(const Particle& particle,
                                    std::span<const double> global_best,
                                    const PsoConfig& config, Rng& rng);

// x' = clamp(x + v, -1, 1).
std::vector<double> update_position(const Particle& particle);

struct IterationRecord {
  std::size_t iteration = 0;
  double global_best_fitness = 1.0;
};

struct TrainResult {
  FcmModel model;
  double fitness = 1.0;
  // Entry 0 is the initial swarm, entry k the state after iteration k.
  std::vector<IterationRecord> log;
  // Training labels contained a single class.
  bool single_class = false;
};

// Called after initialization (iteration 0) and after every iteration's
// best-bookkeeping.
using SwarmObserver = std::function<void(const Swarm&, std::size_t iteration)>;

TrainResult train(const Matrix& features, std::span<const int> labels,
                  const ModelShape& shape, const PsoConfig& config,
                  const std::optional<Matrix>& warm_start = std::nullopt,
                  const SwarmObserver& observer = {});

void write_training_log(std::ostream& out, std::span<const IterationRecord> log);
void write_training_log(const std::filesystem::path& path, std::span<const IterationRecord> log);

} // namespace fcmfed
