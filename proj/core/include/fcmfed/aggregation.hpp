#pragma once

#include <cstddef>
#include <cstdint>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "fcmfed/matrix.hpp"

namespace fcmfed {

enum class WeightScheme { Constant, AccuracyBased, PrecisionBased };

std::string_view to_string(WeightScheme scheme) noexcept;
// Accepts "constant", "accuracy" or "precision".
WeightScheme parse_weight_scheme(std::string_view name);

// What one participant hands to the aggregator: its trained adjacency matrix
// and the scalar metrics the weighting schemes need.
struct ContributionBundle {
  Matrix matrix;
  double accuracy = 0.0;
  double precision = 0.0;
  std::uint64_t participant_id = 0;
  std::size_t dataset_size = 0;
};

struct NormalizedWeights {
  std::vector<double> weights;
  // Every raw value was zero, so the constant 1/n weights were used instead.
  bool fell_back_to_constant = false;
};

// raw_i / sum(raw). Equal raw values yield exactly 1/n; an all-zero vector
// falls back to 1/n and sets fell_back_to_constant.
NormalizedWeights normalize_weights(std::span<const double> raw);

NormalizedWeights scheme_weights(std::span<const ContributionBundle> bundles, WeightScheme scheme);

// sum_i w_i * W_i. Every bundle matrix must share one square shape.
Matrix weighted_average(std::span<const ContributionBundle> bundles, std::span<const double> weights);

struct AggregationResult {
  Matrix matrix;
  NormalizedWeights weights;
};

// Federated matrix under the given scheme; entries clamped to [-1, 1] and the
// diagonal kept at zero.
AggregationResult aggregate(std::span<const ContributionBundle> bundles, WeightScheme scheme);

enum class BlockLayout {
  // [[A, 0], [0, B]]
  Diagonal,
  // [[0, A], [B, 0]]
  AntiDiagonal,
};

Matrix direct_sum(const Matrix& a, const Matrix& b, BlockLayout layout = BlockLayout::Diagonal);

struct LabeledMatrix {
  Matrix matrix;
  std::vector<std::string> nodes;
};

// Union of the node sets (first-appearance order). Each edge is the mean of
// that edge over the inputs containing both endpoints, 0 when none does.
LabeledMatrix merge_common_nodes(std::span<const LabeledMatrix> inputs);

// sum_i weights_i * losses_i.
double federated_loss(std::span<const double> losses, std::span<const double> weights);

} // namespace fcmfed
