#pragma once

#include <cstdint>
#include <span>
#include <vector>

#include "dcl/class_distribution.hpp"

namespace dcl {

/// Per-attribute class labels, attribute-major: labels[a][i] is the class of
/// sample i for attribute a.
using LabelMatrix = std::vector<std::vector<int>>;

/// Per-attribute, per-sample loss weights for one batch.
///
/// Each weight is 0 (dropped), 1 (kept) or r > 1 (up-weighted). Within an
/// attribute all kept samples of one class share a weight, and a class is
/// either subsampled (0/1) or up-weighted, never both.
struct BatchPlan {
  std::vector<std::vector<double>> weights;              // [attribute][sample]
  std::vector<std::vector<std::int64_t>> selected_counts;  // [attribute][class id]
  std::vector<std::vector<int>> skipped_classes;         // absent from the batch

  std::size_t num_attributes() const noexcept { return weights.size(); }
};

/// Weights for a single attribute. Classes absent from the batch are skipped
/// and the target is renormalized over the classes that are present.
/// Throws DegenerateDistributionError when the batch is empty and
/// ContractViolation for labels outside the target's classes.
struct AttributeWeights {
  std::vector<double> weights;
  std::vector<std::int64_t> selected_counts;  // indexed by class id
  std::vector<int> skipped_classes;
};
AttributeWeights compose_attribute(std::span<const int> labels,
                                   const ClassDistribution& target,
                                   std::uint64_t rng_seed);

/// Realizes each attribute's target distribution in one batch. For class j,
/// r = D_target,j / D_current,j with D_current from the batch's own counts:
/// r >= 1 up-weights every class-j sample by r; r < 1 keeps a uniformly
/// random subset of round_stochastic(r * N_j) samples at weight 1.
/// Deterministic in `rng_seed`.
BatchPlan compose(const LabelMatrix& batch_labels,
                  std::span<const ClassDistribution> targets,
                  std::uint64_t rng_seed);

/// All-ones plan (no sampling), used when the target is the natural batch.
BatchPlan identity_plan(const LabelMatrix& batch_labels);

}  // namespace dcl
