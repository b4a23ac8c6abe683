#include "fcmfed/fcm.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

namespace fcmfed {

namespace {

// Interior of the open range; 1 ulp away from each endpoint.
const double kUnitLow = std::nextafter(0.0, 1.0);
const double kUnitHigh = std::nextafter(1.0, 0.0);
const double kBipolarLow = std::nextafter(-1.0, 0.0);
const double kBipolarHigh = std::nextafter(1.0, 0.0);

// Writes f(sum_j w(j, i) * c_j) into out[i] for i in [first, N).
void update_nodes(const FcmModel& model, std::span<const double> state,
                  std::span<double> out, std::size_t first) {
  const std::size_t n = model.node_count();
  const Matrix& w = model.weights();
  std::fill(out.begin() + static_cast<std::ptrdiff_t>(first), out.end(), 0.0);
  for (std::size_t j = 0; j < n; ++j) {
    const double cj = state[j];
    if (cj == 0.0) continue;
    auto wrow = w.row(j);
    for (std::size_t i = first; i < n; ++i) out[i] += wrow[i] * cj;
  }
  for (std::size_t i = first; i < n; ++i) {
    out[i] = activate(out[i], model.activation(), model.slope());
  }
}

double max_norm_change(std::span<const double> a, std::span<const double> b) {
  double worst = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) worst = std::max(worst, std::abs(a[i] - b[i]));
  return worst;
}

} // namespace

std::string_view to_string(ActivationKind kind) noexcept {
  return kind == ActivationKind::UnipolarSigmoid ? "sigmoid" : "tanh";
}

ActivationKind parse_activation(std::string_view name) {
  if (name == "sigmoid") return ActivationKind::UnipolarSigmoid;
  if (name == "tanh") return ActivationKind::HyperbolicTangent;
  throw std::invalid_argument("unknown activation '" + std::string(name) +
                              "' (expected sigmoid or tanh)");
}

double activate(double x, ActivationKind kind, double slope) {
  if (!std::isfinite(x)) {
    throw std::domain_error("activate: non-finite node input");
  }
  if (!(slope > 0.0)) {
    throw std::invalid_argument("activate: slope must be positive");
  }
  if (kind == ActivationKind::UnipolarSigmoid) {
    const double y = 1.0 / (1.0 + std::exp(-slope * x));
    return std::clamp(y, kUnitLow, kUnitHigh);
  }
  return std::clamp(std::tanh(slope * x), kBipolarLow, kBipolarHigh);
}

double neutral_state(ActivationKind kind) noexcept {
  return kind == ActivationKind::UnipolarSigmoid ? 0.5 : 0.0;
}

double range_lower(ActivationKind kind) noexcept {
  return kind == ActivationKind::UnipolarSigmoid ? 0.0 : -1.0;
}

double range_upper(ActivationKind) noexcept { return 1.0; }

FcmModel::FcmModel(std::size_t n_input, std::size_t n_output, Matrix weights,
                   ActivationKind activation, double slope,
                   std::vector<std::string> node_names)
    : n_input_(n_input), n_output_(n_output), weights_(std::move(weights)),
      activation_(activation), slope_(slope), node_names_(std::move(node_names)) {
  const std::size_t n = n_input_ + n_output_;
  if (n == 0) throw std::invalid_argument("FcmModel: model has no nodes");
  if (weights_.rows() != n || weights_.cols() != n) {
    throw std::invalid_argument("FcmModel: weight matrix must be square with one row per node");
  }
  if (!(slope_ > 0.0) || !std::isfinite(slope_)) {
    throw std::invalid_argument("FcmModel: slope must be positive and finite");
  }
  for (std::size_t i = 0; i < n; ++i) {
    for (std::size_t j = 0; j < n; ++j) {
      const double w = weights_(i, j);
      if (!(w >= -1.0 && w <= 1.0)) {
        throw std::invalid_argument("FcmModel: weight outside [-1, 1]");
      }
      if (i == j && w != 0.0) {
        throw std::invalid_argument("FcmModel: diagonal weights must be zero");
      }
    }
  }
  if (!node_names_.empty() && node_names_.size() != n) {
    throw std::invalid_argument("FcmModel: node_names must be empty or one per node");
  }
}

FcmModel FcmModel::zeros(std::size_t n_input, std::size_t n_output,
                         ActivationKind activation, double slope) {
  const std::size_t n = n_input + n_output;
  return {n_input, n_output, Matrix(n, n), activation, slope};
}

DynamicsOptions classifier_dynamics() noexcept { return {1e-5, 100, true}; }

StateVector step(const FcmModel& model, std::span<const double> state) {
  if (state.size() != model.node_count()) {
    throw std::invalid_argument("step: state length does not match node count");
  }
  StateVector next(state.size());
  update_nodes(model, state, next, 0);
  return next;
}

DynamicsOutcome run_dynamics(const FcmModel& model, StateVector initial,
                             const DynamicsOptions& options) {
  if (!(options.tolerance > 0.0)) {
    throw std::invalid_argument("run_dynamics: tolerance must be positive");
  }
  if (options.max_iterations < 1) {
    throw std::invalid_argument("run_dynamics: max_iterations must be at least 1");
  }
  if (initial.size() != model.node_count()) {
    throw std::invalid_argument("run_dynamics: state length does not match node count");
  }

  // With clamped inputs only the output nodes are recomputed; input entries
  // carry over unchanged, which is identical to stepping then re-clamping.
  const std::size_t first = options.clamp_inputs ? model.n_input() : 0;
  StateVector current = std::move(initial);
  StateVector next = current;
  DynamicsOutcome outcome;
  // next already holds the step from current (left over from a failed probe).
  bool have_next = false;
  for (std::size_t it = 1; it <= options.max_iterations; ++it) {
    if (!have_next) update_nodes(model, current, next, first);
    have_next = false;
    const double change = max_norm_change(current, next);
    std::swap(current, next);
    if (change < options.tolerance) {
      // Probe one more step so a converged state is also a certified one:
      // stepping from final_state moves it by less than the tolerance.
      update_nodes(model, current, next, first);
      if (max_norm_change(current, next) < options.tolerance) {
        outcome.status = DynamicsStatus::Converged;
        outcome.iterations_used = it;
        outcome.final_state = std::move(current);
        return outcome;
      }
      have_next = true;
    }
  }
  outcome.status = DynamicsStatus::MaxIterationsReached;
  outcome.iterations_used = options.max_iterations;
  outcome.final_state = std::move(current);
  return outcome;
}

StateVector initial_state(const FcmModel& model, std::span<const double> features) {
  if (features.size() != model.n_input()) {
    throw std::invalid_argument("initial_state: feature count does not match input nodes");
  }
  StateVector state(model.node_count(), neutral_state(model.activation()));
  std::copy(features.begin(), features.end(), state.begin());
  return state;
}

std::size_t argmax_class(std::span<const double> outputs) {
  if (outputs.empty()) throw std::invalid_argument("argmax_class: no outputs");
  std::size_t best = 0;
  for (std::size_t i = 1; i < outputs.size(); ++i) {
    if (outputs[i] > outputs[best]) best = i;
  }
  return best;
}

std::size_t classify(const FcmModel& model, std::span<const double> features,
                     const DynamicsOptions& options) {
  if (model.n_output() < 2) {
    throw std::invalid_argument("classify: model needs at least two output nodes");
  }
  auto outcome = run_dynamics(model, initial_state(model, features), options);
  std::span<const double> outputs(outcome.final_state);
  return argmax_class(outputs.subspan(model.n_input()));
}

std::vector<int> classify_rows(const FcmModel& model, const Matrix& features,
                               const DynamicsOptions& options) {
  if (features.rows() > 0 && features.cols() != model.n_input()) {
    throw std::invalid_argument("classify_rows: feature count does not match input nodes");
  }
  std::vector<int> predictions(features.rows());
  for (std::size_t r = 0; r < features.rows(); ++r) {
    predictions[r] = static_cast<int>(classify(model, features.row(r), options));
  }
  return predictions;
}

nlohmann::json weights_to_json(const Matrix& weights) {
  nlohmann::json rows = nlohmann::json::array();
  for (std::size_t r = 0; r < weights.rows(); ++r) {
    auto row = weights.row(r);
    rows.push_back(std::vector<double>(row.begin(), row.end()));
  }
  return rows;
}

Matrix weights_from_json(const nlohmann::json& doc) {
  if (!doc.is_array()) throw std::invalid_argument("weights must be an array of rows");
  return Matrix::from_rows(doc.get<std::vector<std::vector<double>>>());
}

nlohmann::json model_to_json(const FcmModel& model) {
  return {
      {"n_input", model.n_input()},
      {"n_output", model.n_output()},
      {"activation", std::string(to_string(model.activation()))},
      {"slope", model.slope()},
      {"weights", weights_to_json(model.weights())},
      {"node_names", model.node_names()},
  };
}

FcmModel model_from_json(const nlohmann::json& doc) {
  std::vector<std::string> names;
  if (doc.contains("node_names") && !doc.at("node_names").is_null()) {
    names = doc.at("node_names").get<std::vector<std::string>>();
  }
  return {doc.at("n_input").get<std::size_t>(),
          doc.at("n_output").get<std::size_t>(),
          weights_from_json(doc.at("weights")),
          parse_activation(doc.at("activation").get<std::string>()),
          doc.at("slope").get<double>(),
          std::move(names)};
}

} // namespace fcmfed
