#include "fcmfed/pso.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <ostream>
#include <stdexcept>

namespace fcmfed {

void PsoConfig::validate() const {
  if (swarm_size < 1) throw std::invalid_argument("PsoConfig: swarm_size must be at least 1");
  if (iterations < 1) throw std::invalid_argument("PsoConfig: iterations must be at least 1");
  // Zero attraction coefficients are accepted; they freeze the swarm.
  if (!(phi1 >= 0.0) || !(phi2 >= 0.0)) {
    throw std::invalid_argument("PsoConfig: phi1 and phi2 must be non-negative");
  }
  if (!(velocity_clamp > 0.0)) {
    throw std::invalid_argument("PsoConfig: velocity_clamp must be positive");
  }
  const double v0 = initial_velocity_or_default();
  if (!(v0 >= 0.0) || v0 > velocity_clamp) {
    throw std::invalid_argument("PsoConfig: initial_velocity must lie in [0, velocity_clamp]");
  }
}

std::size_t encoded_length(std::size_t node_count) noexcept {
  return node_count * node_count - node_count;
}

std::vector<double> flatten_off_diagonal(const Matrix& weights) {
  if (!weights.is_square()) throw std::invalid_argument("flatten_off_diagonal: matrix not square");
  const std::size_t n = weights.rows();
  std::vector<double> out;
  out.reserve(encoded_length(n));
  for (std::size_t i = 0; i < n; ++i) {
    for (std::size_t j = 0; j < n; ++j) {
      if (i != j) out.push_back(weights(i, j));
    }
  }
  return out;
}

Matrix unflatten_off_diagonal(std::span<const double> position, std::size_t node_count) {
  if (position.size() != encoded_length(node_count)) {
    throw std::invalid_argument("unflatten_off_diagonal: position length does not match model");
  }
  Matrix w(node_count, node_count);
  std::size_t k = 0;
  for (std::size_t i = 0; i < node_count; ++i) {
    for (std::size_t j = 0; j < node_count; ++j) {
      if (i != j) w(i, j) = position[k++];
    }
  }
  return w;
}

FcmModel model_from_position(std::span<const double> position, const ModelShape& shape) {
  return {shape.n_input, shape.n_output, unflatten_off_diagonal(position, shape.node_count()),
          shape.activation, shape.slope};
}

double fitness_jaccard_complement(std::span<const int> truth, std::span<const int> predicted) {
  if (truth.size() != predicted.size()) {
    throw std::invalid_argument("fitness_jaccard_complement: length mismatch");
  }
  if (truth.empty()) throw std::invalid_argument("fitness_jaccard_complement: empty input");
  std::size_t tp = 0;
  std::size_t fp = 0;
  std::size_t fn = 0;
  for (std::size_t i = 0; i < truth.size(); ++i) {
    const bool t = truth[i] == 1;
    const bool p = predicted[i] == 1;
    tp += t && p;
    fp += !t && p;
    fn += t && !p;
  }
  const std::size_t uni = tp + fp + fn;
  if (uni == 0) return 0.0;
  return 1.0 - static_cast<double>(tp) / static_cast<double>(uni);
}

double evaluate_candidate(std::span<const double> position, const ModelShape& shape,
                          const Matrix& features, std::span<const int> labels,
                          const DynamicsOptions& dynamics) {
  if (features.rows() != labels.size()) {
    throw std::invalid_argument("evaluate_candidate: feature rows and labels differ in length");
  }
  const FcmModel model = model_from_position(position, shape);
  const std::vector<int> predicted = classify_rows(model, features, dynamics);
  return fitness_jaccard_complement(labels, predicted);
}

std::vector<double> update_velocity(const Particle& particle,
                                    std::span<const double> global_best,
                                    const PsoConfig& config, Rng& rng) {
  const std::size_t d = particle.position.size();
  if (particle.velocity.size() != d || particle.best_position.size() != d ||
      global_best.size() != d) {
    throw std::invalid_argument("update_velocity: vector lengths differ");
  }
  std::uniform_real_distribution<double> unit(0.0, 1.0);
  std::vector<double> v(d);
  for (std::size_t k = 0; k < d; ++k) {
    const double u1 = config.phi1 * unit(rng);
    const double u2 = config.phi2 * unit(rng);
    const double x = particle.position[k];
    const double next = particle.velocity[k] + u1 * (particle.best_position[k] - x) +
                        u2 * (global_best[k] - x);
    v[k] = std::clamp(next, -config.velocity_clamp, config.velocity_clamp);
  }
  return v;
}

std::vector<double> update_position(const Particle& particle) {
  if (particle.velocity.size() != particle.position.size()) {
    throw std::invalid_argument("update_position: vector lengths differ");
  }
  std::vector<double> x(particle.position.size());
  for (std::size_t k = 0; k < x.size(); ++k) {
    x[k] = std::clamp(particle.position[k] + particle.velocity[k], -1.0, 1.0);
  }
  return x;
}

TrainResult train(const Matrix& features, std::span<const int> labels,
                  const ModelShape& shape, const PsoConfig& config,
                  const std::optional<Matrix>& warm_start, const SwarmObserver& observer) {
  config.validate();
  if (features.rows() == 0 || labels.empty()) {
    throw std::invalid_argument("train: empty training set");
  }
  if (features.rows() != labels.size()) {
    throw std::invalid_argument("train: feature rows and labels differ in length");
  }
  if (features.cols() != shape.n_input) {
    throw std::invalid_argument("train: feature count does not match model inputs");
  }
  const std::size_t n = shape.node_count();
  const std::size_t dim = encoded_length(n);

  std::optional<std::vector<double>> warm;
  if (warm_start) {
    // Validates range and diagonal.
    FcmModel check(shape.n_input, shape.n_output, *warm_start, shape.activation, shape.slope);
    warm = flatten_off_diagonal(check.weights());
  }

  Swarm swarm;
  swarm.rng.seed(config.seed);
  std::uniform_real_distribution<double> pos_dist(-1.0, 1.0);
  const double v0 = config.initial_velocity_or_default();

  swarm.particles.resize(config.swarm_size);
  for (auto& p : swarm.particles) {
    p.position.resize(dim);
    p.velocity.resize(dim);
    for (auto& x : p.position) x = pos_dist(swarm.rng);
    for (auto& v : p.velocity) v = v0 * pos_dist(swarm.rng);
  }
  if (warm) swarm.particles.front().position = *warm;

  auto fitness_of = [&](const std::vector<double>& position) {
    return evaluate_candidate(position, shape, features, labels, config.dynamics);
  };

  std::size_t best = 0;
  for (std::size_t k = 0; k < swarm.particles.size(); ++k) {
    auto& p = swarm.particles[k];
    p.best_position = p.position;
    p.best_fitness = fitness_of(p.position);
    if (p.best_fitness < swarm.particles[best].best_fitness) best = k;
  }
  swarm.global_best_position = swarm.particles[best].best_position;
  swarm.global_best_fitness = swarm.particles[best].best_fitness;

  TrainResult result{model_from_position(swarm.global_best_position, shape),
                     swarm.global_best_fitness, {}, false};
  result.log.push_back({0, swarm.global_best_fitness});
  if (observer) observer(swarm, 0);

  std::vector<double> fitness(swarm.particles.size());
  for (std::size_t it = 1; it <= config.iterations; ++it) {
    for (auto& p : swarm.particles) {
      p.velocity = update_velocity(p, swarm.global_best_position, config, swarm.rng);
      p.position = update_position(p);
    }
    for (std::size_t k = 0; k < swarm.particles.size(); ++k) {
      fitness[k] = fitness_of(swarm.particles[k].position);
    }
    // Sequential reduction; ties keep the earlier best.
    for (std::size_t k = 0; k < swarm.particles.size(); ++k) {
      auto& p = swarm.particles[k];
      if (fitness[k] < p.best_fitness) {
        p.best_fitness = fitness[k];
        p.best_position = p.position;
      }
      if (p.best_fitness < swarm.global_best_fitness) {
        swarm.global_best_fitness = p.best_fitness;
        swarm.global_best_position = p.best_position;
      }
    }
    result.log.push_back({it, swarm.global_best_fitness});
    if (observer) observer(swarm, it);
  }

  result.model = model_from_position(swarm.global_best_position, shape);
  result.fitness = swarm.global_best_fitness;
  const bool has_pos = std::find(labels.begin(), labels.end(), 1) != labels.end();
  const bool has_neg = std::find_if(labels.begin(), labels.end(),
                                    [](int y) { return y != 1; }) != labels.end();
  result.single_class = !(has_pos && has_neg);
  return result;
}

void write_training_log(std::ostream& out, std::span<const IterationRecord> log) {
  out << "iteration,global_best_fitness\n";
  out.precision(17);
  for (const auto& rec : log) out << rec.iteration << ',' << rec.global_best_fitness << '\n';
}

void write_training_log(const std::filesystem::path& path, std::span<const IterationRecord> log) {
  std::ofstream out(path);
  if (!out) throw std::runtime_error("cannot write training log " + path.string());
  write_training_log(out, log);
}

} // namespace fcmfed
