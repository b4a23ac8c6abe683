#pragma once

#include <cstddef>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include <nlohmann/json.hpp>

#include "fcmfed/matrix.hpp"

namespace fcmfed {

enum class ActivationKind { UnipolarSigmoid, HyperbolicTangent };

std::string_view to_string(ActivationKind kind) noexcept;
// Accepts "sigmoid" or "tanh".
ActivationKind parse_activation(std::string_view name);

// Squashing function applied to a node's weighted input.
//
// UnipolarSigmoid: 1 / (1 + exp(-slope * x)), range (0, 1).
// HyperbolicTangent: tanh(slope * x), range (-1, 1).
//
// Results are kept strictly inside the open range: where double precision
// would round to an endpoint, the nearest representable interior value is
// returned instead. Throws std::domain_error for non-finite x and
// std::invalid_argument for a non-positive slope.
double activate(double x, ActivationKind kind, double slope);

// The activation's neutral point: 0.5 for sigmoid, 0 for tanh. Output nodes
// start from this value when classifying.
double neutral_state(ActivationKind kind) noexcept;

// Lower and upper bounds of the open activation range.
double range_lower(ActivationKind kind) noexcept;
double range_upper(ActivationKind kind) noexcept;

// An FCM classifier: input (feature) nodes 0..n_input-1 followed by output
// (class) nodes. weights(i, j) is the influence of node i on node j.
//
// Invariants enforced at construction: square weights of dimension
// n_input + n_output, every entry in [-1, 1], zero diagonal, slope > 0,
// node_names empty or one per node.
class FcmModel {
public:
  FcmModel(std::size_t n_input, std::size_t n_output, Matrix weights,
           ActivationKind activation, double slope,
           std::vector<std::string> node_names = {});

  static FcmModel zeros(std::size_t n_input, std::size_t n_output,
                        ActivationKind activation, double slope);

  std::size_t n_input() const noexcept { return n_input_; }
  std::size_t n_output() const noexcept { return n_output_; }
  std::size_t node_count() const noexcept { return n_input_ + n_output_; }
  const Matrix& weights() const noexcept { return weights_; }
  ActivationKind activation() const noexcept { return activation_; }
  double slope() const noexcept { return slope_; }
  const std::vector<std::string>& node_names() const noexcept { return node_names_; }

  friend bool operator==(const FcmModel&, const FcmModel&) = default;

private:
  std::size_t n_input_;
  std::size_t n_output_;
  Matrix weights_;
  ActivationKind activation_;
  double slope_;
  std::vector<std::string> node_names_;
};

using StateVector = std::vector<double>;

struct DynamicsOptions {
  double tolerance = 1e-5;
  std::size_t max_iterations = 100;
  // Re-impose the initial values of the input nodes after every step so that
  // only the output nodes evolve.
  bool clamp_inputs = false;
};

// Options used by classify(): tolerance 1e-5, at most 100 steps, inputs clamped.
DynamicsOptions classifier_dynamics() noexcept;

enum class DynamicsStatus { Converged, MaxIterationsReached };

struct DynamicsOutcome {
  StateVector final_state;
  DynamicsStatus status = DynamicsStatus::MaxIterationsReached;
  std::size_t iterations_used = 0;
};

// One synchronous update: c_i' = f(sum_j w(j, i) * c_j).
StateVector step(const FcmModel& model, std::span<const double> state);

// Iterates step() until the max-norm change between successive states drops
// below options.tolerance, or options.max_iterations steps have run. A
// candidate fixed point is probed with one extra step before it is accepted,
// so stepping from a Converged final_state moves it by less than the
// tolerance too; the probe is not counted in iterations_used. Limit cycles
// are not detected and surface as MaxIterationsReached.
DynamicsOutcome run_dynamics(const FcmModel& model, StateVector initial,
                             const DynamicsOptions& options);

// Features followed by the neutral state for each output node.
StateVector initial_state(const FcmModel& model, std::span<const double> features);

// Index of the largest entry; ties resolve to the lowest index.
std::size_t argmax_class(std::span<const double> outputs);

std::size_t classify(const FcmModel& model, std::span<const double> features,
                     const DynamicsOptions& options = classifier_dynamics());

// Predicted class index for every row of a feature table.
std::vector<int> classify_rows(const FcmModel& model, const Matrix& features,
                               const DynamicsOptions& options = classifier_dynamics());

nlohmann::json model_to_json(const FcmModel& model);
FcmModel model_from_json(const nlohmann::json& doc);

nlohmann::json weights_to_json(const Matrix& weights);
Matrix weights_from_json(const nlohmann::json& doc);

} // namespace fcmfed
