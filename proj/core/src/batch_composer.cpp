#include "dcl/batch_composer.hpp"

#include <algorithm>
#include <cmath>
#include <random>
#include <string>

#include "dcl/errors.hpp"
#include "dcl/seed.hpp"

namespace dcl {

namespace {

int max_class_id(const ClassDistribution& d) {
  return *std::max_element(d.class_ids().begin(), d.class_ids().end());
}

}  // namespace

AttributeWeights compose_attribute(std::span<const int> labels,
                                   const ClassDistribution& target,
                                   std::uint64_t rng_seed) {
  if (labels.empty()) {
    throw DegenerateDistributionError("batch has no samples for this attribute");
  }
  const int num_ids = max_class_id(target) + 1;
  std::vector<std::vector<std::size_t>> members(num_ids);
  std::vector<char> known(num_ids, 0);
  for (int id : target.class_ids()) known[id] = 1;
  for (std::size_t i = 0; i < labels.size(); ++i) {
    const int y = labels[i];
    if (y < 0 || y >= num_ids || !known[y]) {
      throw ContractViolation("label " + std::to_string(y) +
                              " is not a class of the target distribution");
    }
    members[y].push_back(i);
  }

  AttributeWeights out;
  out.weights.assign(labels.size(), 0.0);
  out.selected_counts.assign(num_ids, 0);

  std::vector<int> present;
  for (int id : target.class_ids()) {
    if (members[id].empty()) {
      out.skipped_classes.push_back(id);
    } else {
      present.push_back(id);
    }
  }

  if (present.size() == 1) {
    // Nothing to balance against.
    const int id = present.front();
    for (auto i : members[id]) out.weights[i] = 1.0;
    out.selected_counts[id] = static_cast<std::int64_t>(members[id].size());
    return out;
  }

  std::vector<std::int64_t> present_counts;
  for (int id : present) present_counts.push_back(static_cast<std::int64_t>(members[id].size()));
  const auto current = ClassDistribution::from_counts(present_counts);
  const auto min_present_count = static_cast<double>(present_counts[current.class_ids().front()]);

  double min_target = target.ratio_of(present.front());
  for (int id : present) min_target = std::min(min_target, target.ratio_of(id));

  std::mt19937_64 rng(rng_seed);
  std::uniform_real_distribution<double> unit(0.0, 1.0);

  for (std::size_t p = 0; p < present.size(); ++p) {
    const int id = present[p];
    auto& idx = members[id];
    const double target_ratio = target.ratio_of(id) / min_target;
    const double current_ratio = current.ratio_of(static_cast<int>(p));
    const double r = target_ratio / current_ratio;
    if (r >= 1.0) {
      for (auto i : idx) out.weights[i] = r;
      out.selected_counts[id] = static_cast<std::int64_t>(idx.size());
      continue;
    }
    // r * N_j, computed as target_ratio * n_min to avoid the round trip through r.
    const double expected = std::min(target_ratio * min_present_count,
                                      static_cast<double>(idx.size()));
    auto keep = static_cast<std::size_t>(std::floor(expected));
    const double frac = expected - std::floor(expected);
    if (frac > 0.0 && unit(rng) < frac) ++keep;
    // Partial Fisher-Yates: the first `keep` entries become a uniform subset.
    for (std::size_t s = 0; s < keep; ++s) {
      std::uniform_int_distribution<std::size_t> pick(s, idx.size() - 1);
      std::swap(idx[s], idx[pick(rng)]);
      out.weights[idx[s]] = 1.0;
    }
    out.selected_counts[id] = static_cast<std::int64_t>(keep);
  }
  return out;
}

BatchPlan compose(const LabelMatrix& batch_labels,
                  std::span<const ClassDistribution> targets,
                  std::uint64_t rng_seed) {
  if (batch_labels.size() != targets.size()) {
    throw ContractViolation("targets must be index-aligned with attributes");
  }
  BatchPlan plan;
  plan.weights.reserve(batch_labels.size());
  for (std::size_t a = 0; a < batch_labels.size(); ++a) {
    auto w = compose_attribute(batch_labels[a], targets[a],
                               derive_seed(rng_seed, {a}));
    plan.weights.push_back(std::move(w.weights));
    plan.selected_counts.push_back(std::move(w.selected_counts));
    plan.skipped_classes.push_back(std::move(w.skipped_classes));
  }
  return plan;
}

BatchPlan identity_plan(const LabelMatrix& batch_labels) {
  BatchPlan plan;
  for (const auto& labels : batch_labels) {
    plan.weights.emplace_back(labels.size(), 1.0);
    int num_ids = labels.empty() ? 0 : *std::max_element(labels.begin(), labels.end()) + 1;
    std::vector<std::int64_t> counts(std::max(num_ids, 0), 0);
    for (int y : labels) ++counts[y];
    plan.selected_counts.push_back(std::move(counts));
    plan.skipped_classes.emplace_back();
  }
  return plan;
}

}  // namespace dcl
