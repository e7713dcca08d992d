#pragma once

#include <cstdint>
#include <functional>
#include <string>
#include <vector>

#include "dcl/data.hpp"
#include "dcl/trainer.hpp"

namespace dcl {

/// Imbalance-ratio bucket, (lower, upper] with the first bucket closed at 1.
struct RatioGroup {
  std::string name;
  double lower = 1.0;
  double upper = 0.0;  // +inf for the last group
};

/// 1-25, 25-50, >50.
std::vector<RatioGroup> default_ratio_groups();

/// Index of the group holding `ratio`.
std::size_t group_of(double ratio, const std::vector<RatioGroup>& groups);

/// Requested ratios for generated data, training-set majority:minority otherwise.
std::vector<double> attribute_ratios(const Dataset& data);

struct LabeledConfig {
  std::string label;
  RunConfig config;
};

/// Rows baseline (CE), +SS (sampling scheduler), +SS+TL (fixed-weight
/// triplet loss with easy anchors) and full DCL (adds the loss scheduler).
std::vector<LabeledConfig> ablation_configs(const RunConfig& dcl_base, double fixed_tl_weight);

struct RunRecord {
  std::string label;
  std::uint64_t seed = 0;
  std::vector<double> test_balanced;  // per attribute, best-validation model
  double test_mean = 0.0;
  int best_epoch = 0;
  double wall_seconds = 0.0;
};

struct ExperimentSpec {
  std::vector<LabeledConfig> runs;
  std::vector<std::uint64_t> seeds;
  std::string out_dir;  // per-run artifacts under <out_dir>/<label>/seed_<seed>; empty = none
  unsigned threads = 1;
};

/// Runs every config for every seed; independent runs share `threads`
/// workers. Records come back in (config, seed) order regardless of threads.
std::vector<RunRecord> run_experiment(const ExperimentSpec& spec, const Dataset& data,
                                      const std::function<void(const RunRecord&)>& on_done = {});

struct ComparisonRow {
  std::string label;
  std::vector<double> group_mean;  // per ratio group; NaN when a group is empty
  double overall_mean = 0.0;
  std::size_t runs = 0;
};

/// Mean best-model test mA per label and ratio group, averaged over seeds
/// and the attributes in each group.
std::vector<ComparisonRow> aggregate(const std::vector<RunRecord>& records,
                                     const std::vector<double>& ratios,
                                     const std::vector<RatioGroup>& groups);

std::string comparison_csv(const std::vector<ComparisonRow>& rows,
                           const std::vector<RatioGroup>& groups);
std::string comparison_table(const std::vector<ComparisonRow>& rows,
                             const std::vector<RatioGroup>& groups);

/// Worker count from DCL_THREADS, falling back to hardware concurrency.
unsigned threads_from_env();

}  // namespace dcl
