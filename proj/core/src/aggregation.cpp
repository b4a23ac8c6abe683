#include "fcmfed/aggregation.hpp"

#include <algorithm>
#include <cmath>
#include <map>
#include <stdexcept>

namespace fcmfed {

std::string_view to_string(WeightScheme scheme) noexcept {
  switch (scheme) {
  case WeightScheme::Constant:
    return "constant";
  case WeightScheme::AccuracyBased:
    return "accuracy";
  case WeightScheme::PrecisionBased:
    return "precision";
  }
  return "constant";
}

WeightScheme parse_weight_scheme(std::string_view name) {
  if (name == "constant") return WeightScheme::Constant;
  if (name == "accuracy") return WeightScheme::AccuracyBased;
  if (name == "precision") return WeightScheme::PrecisionBased;
  throw std::invalid_argument("unknown weight scheme '" + std::string(name) +
                              "' (expected constant, accuracy or precision)");
}

NormalizedWeights normalize_weights(std::span<const double> raw) {
  if (raw.empty()) throw std::invalid_argument("normalize_weights: empty input");
  for (double r : raw) {
    if (!(r >= 0.0) || !std::isfinite(r)) {
      throw std::invalid_argument("normalize_weights: raw weights must be finite and non-negative");
    }
  }
  const double n = static_cast<double>(raw.size());
  const bool all_equal = std::all_of(raw.begin(), raw.end(), [&](double r) { return r == raw[0]; });
  if (all_equal) {
    return {std::vector<double>(raw.size(), 1.0 / n), raw[0] == 0.0};
  }
  double total = 0.0;
  for (double r : raw) total += r;
  NormalizedWeights out;
  out.weights.reserve(raw.size());
  for (double r : raw) out.weights.push_back(r / total);
  return out;
}

NormalizedWeights scheme_weights(std::span<const ContributionBundle> bundles, WeightScheme scheme) {
  std::vector<double> raw(bundles.size(), 1.0);
  for (std::size_t i = 0; i < bundles.size(); ++i) {
    if (scheme == WeightScheme::AccuracyBased) raw[i] = bundles[i].accuracy;
    if (scheme == WeightScheme::PrecisionBased) raw[i] = bundles[i].precision;
  }
  return normalize_weights(raw);
}

Matrix weighted_average(std::span<const ContributionBundle> bundles, std::span<const double> weights) {
  if (bundles.empty()) throw std::invalid_argument("weighted_average: no bundles");
  if (weights.size() != bundles.size()) {
    throw std::invalid_argument("weighted_average: one weight per bundle required");
  }
  const Matrix& first = bundles.front().matrix;
  if (!first.is_square()) throw std::invalid_argument("weighted_average: matrices must be square");
  Matrix out(first.rows(), first.cols());
  for (std::size_t b = 0; b < bundles.size(); ++b) {
    const Matrix& m = bundles[b].matrix;
    if (m.rows() != first.rows() || m.cols() != first.cols()) {
      throw std::invalid_argument("weighted_average: matrix dimensions differ");
    }
    for (std::size_t k = 0; k < out.size(); ++k) out.data()[k] += weights[b] * m.data()[k];
  }
  return out;
}

AggregationResult aggregate(std::span<const ContributionBundle> bundles, WeightScheme scheme) {
  if (bundles.empty()) throw std::invalid_argument("aggregate: no bundles");
  AggregationResult result{{}, scheme_weights(bundles, scheme)};
  result.matrix = weighted_average(bundles, result.weights.weights);
  for (auto& w : result.matrix.data()) w = std::clamp(w, -1.0, 1.0);
  for (std::size_t i = 0; i < result.matrix.rows(); ++i) result.matrix(i, i) = 0.0;
  return result;
}

Matrix direct_sum(const Matrix& a, const Matrix& b, BlockLayout layout) {
  if (!a.is_square() || !b.is_square()) throw std::invalid_argument("direct_sum: matrices must be square");
  const std::size_t m = a.rows();
  const std::size_t n = b.rows();
  Matrix out(m + n, m + n);
  // Row/column offsets of each block.
  const std::size_t a_col = layout == BlockLayout::Diagonal ? 0 : n;
  const std::size_t b_col = layout == BlockLayout::Diagonal ? m : 0;
  for (std::size_t i = 0; i < m; ++i)
    for (std::size_t j = 0; j < m; ++j) out(i, a_col + j) = a(i, j);
  for (std::size_t i = 0; i < n; ++i)
    for (std::size_t j = 0; j < n; ++j) out(m + i, b_col + j) = b(i, j);
  return out;
}

LabeledMatrix merge_common_nodes(std::span<const LabeledMatrix> inputs) {
  LabeledMatrix merged;
  std::map<std::string, std::size_t> index;
  std::vector<std::vector<std::size_t>> local_to_global(inputs.size());
  for (std::size_t k = 0; k < inputs.size(); ++k) {
    const auto& in = inputs[k];
    if (!in.matrix.is_square() || in.matrix.rows() != in.nodes.size()) {
      throw std::invalid_argument("merge_common_nodes: matrix must be square with one name per node");
    }
    std::map<std::string, bool> seen;
    for (const auto& name : in.nodes) {
      if (seen[name]) throw std::invalid_argument("merge_common_nodes: duplicate node '" + name + "'");
      seen[name] = true;
      auto [it, inserted] = index.emplace(name, merged.nodes.size());
      if (inserted) merged.nodes.push_back(name);
      local_to_global[k].push_back(it->second);
    }
  }

  const std::size_t n = merged.nodes.size();
  Matrix sum(n, n);
  Matrix count(n, n);
  for (std::size_t k = 0; k < inputs.size(); ++k) {
    const auto& map = local_to_global[k];
    for (std::size_t i = 0; i < map.size(); ++i) {
      for (std::size_t j = 0; j < map.size(); ++j) {
        sum(map[i], map[j]) += inputs[k].matrix(i, j);
        count(map[i], map[j]) += 1.0;
      }
    }
  }
  merged.matrix = Matrix(n, n);
  for (std::size_t k = 0; k < sum.size(); ++k) {
    if (count.data()[k] > 0.0) merged.matrix.data()[k] = sum.data()[k] / count.data()[k];
  }
  return merged;
}

double federated_loss(std::span<const double> losses, std::span<const double> weights) {
  if (losses.size() != weights.size()) throw std::invalid_argument("federated_loss: length mismatch");
  double total = 0.0;
  for (std::size_t i = 0; i < losses.size(); ++i) total += weights[i] * losses[i];
  return total;
}

} // namespace fcmfed
