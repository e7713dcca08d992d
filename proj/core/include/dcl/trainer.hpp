#pragma once

#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "dcl/batch_composer.hpp"
#include "dcl/class_distribution.hpp"
#include "dcl/data.hpp"
#include "dcl/losses.hpp"
#include "dcl/metrics.hpp"
#include "dcl/model.hpp"
#include "dcl/schedulers.hpp"

namespace dcl {

enum class Method { DCL, CE, SelectiveLearning, CRL_I, OverSample, DownSample, CostSensitive };
enum class AnchorMode { Easy, AllMinority };

std::string_view to_string(Method m);
Method method_from_string(std::string_view name);
std::string_view to_string(AnchorMode m);
AnchorMode anchor_mode_from_string(std::string_view name);
std::string_view to_string(DistanceMetric d);
DistanceMetric distance_from_string(std::string_view name);

struct RunConfig {
  Method method = Method::DCL;
  SchedulerFn sampling = SchedulerFn::convex(60);      // g(l)
  LossScheduler loss{SchedulerFn::composite(60), 0.3, 0.01};  // f(l)
  AnchorMode anchors = AnchorMode::Easy;
  DistanceMetric distance = DistanceMetric::SquaredEuclidean;
  int k = 25;
  double margin = 0.2;
  int epochs = 60;
  int batch_size = 128;
  double learning_rate = 0.003;
  double weight_decay = 0.0005;
  std::uint64_t seed = 1;
  std::vector<int> hidden = {64};
  int embedding_dim = 64;

  /// Scheduler setup of a method:
  ///   DCL                g convex,     f composite with p = 0.3, eps = 0.01, easy anchors
  ///   CE                 g == 1,       f == 0
  ///   SelectiveLearning  g == 0 (balanced target every epoch), f == 0
  ///   CRL_I              g == 1,       f == eps, all minority samples as anchors
  ///   OverSample / DownSample / CostSensitive
  ///                      g == 1, f == 0, fixed per-sample weights from the training set
  static RunConfig preset(Method method, int epochs = 60);

  /// Sets L and keeps both scheduler horizons in sync.
  void set_epochs(int epochs);
  /// Throws ConfigError on invalid values.
  void validate() const;
};

/// JSON run configuration; unknown keys are rejected. Keys left out take the
/// method preset's values.
RunConfig run_config_from_json(std::string_view json_text);
std::string run_config_to_json(const RunConfig& config);

/// Dataset-level weights for the OverSample / DownSample / CostSensitive
/// presets, [attribute][sample], nonzero only on the train split. Empty for
/// every other method.
std::vector<std::vector<double>> preset_sample_weights(Method method, const Dataset& data,
                                                       std::uint64_t seed);

struct SplitMetrics {
  ConfusionCounts counts;
  std::vector<double> balanced;  // per attribute
  std::vector<double> biased;    // per attribute
  double mean_balanced = 0.0;
};

SplitMetrics evaluate(const DenseNet& net, const Dataset& data, Split split,
                      std::span<const int> minority_classes);

struct BatchResult {
  double loss = 0.0;  // sum over attributes of dsl + f * tea
  double dsl = 0.0;
  double tea = 0.0;   // unweighted
  std::vector<double> dsl_per_attribute;
  std::vector<double> tea_per_attribute;
  std::size_t triplets = 0;
  std::size_t skipped_classes = 0;
  BatchPlan plan;
};

struct EpochReport {
  int epoch = 0;  // 0-based training epoch l
  double g = 1.0;
  double f = 0.0;
  double mean_loss = 0.0;
  double mean_dsl = 0.0;
  double mean_tea = 0.0;
  std::size_t batches = 0;
  std::size_t triplets = 0;
  std::size_t skipped_classes = 0;
  SplitMetrics val;
};

class Trainer {
 public:
  Trainer(RunConfig config, const Dataset& data);

  const RunConfig& config() const noexcept { return config_; }
  const Dataset& data() const noexcept { return *data_; }
  DenseNet& net() noexcept { return net_; }
  const DenseNet& net() const noexcept { return net_; }
  const std::vector<ClassDistribution>& train_distributions() const noexcept { return train_dists_; }
  std::span<const int> minority_classes() const noexcept { return minority_; }

  double sampling_value(int epoch) const;
  double loss_weight(int epoch) const;

  /// Shuffled train indices for an epoch, seeded from (seed, epoch).
  std::vector<std::size_t> epoch_order(int epoch) const;

  /// Loss, gradients and (if `update`) one SGD step on the given samples.
  /// Throws NumericError on a non-finite loss.
  BatchResult step(std::span<const std::size_t> batch, int epoch, std::size_t batch_index,
                   bool update = true);

  /// Per-attribute weights that `step` would use for this batch.
  BatchPlan plan_for(std::span<const std::size_t> batch, int epoch, std::size_t batch_index) const;

  /// One pass over the shuffled train split followed by validation.
  EpochReport train_epoch(int epoch);

  SplitMetrics evaluate(Split split) const;

 private:
  RunConfig config_;
  const Dataset* data_;
  DenseNet net_;
  std::vector<ClassDistribution> train_dists_;
  std::vector<int> minority_;
  std::vector<std::vector<double>> fixed_weights_;
  std::vector<std::size_t> train_idx_;
};

struct RunReport {
  SplitMetrics initial_val;
  std::vector<EpochReport> epochs;
  int best_epoch = 0;  // epochs completed at the best validation mA; 0 = untrained
  double best_val_mA = 0.0;
  SplitMetrics best_test;
  SplitMetrics final_test;
  DenseNet final_net;
  DenseNet best_net;
  double wall_seconds = 0.0;
};

/// Trains for config.epochs epochs, tracking the best validation mean mA.
/// With a non-empty `out_dir`, writes config.json, metrics.csv, epochs.csv,
/// summary.json, final.ckpt and best.ckpt there.
RunReport run(const RunConfig& config, const Dataset& data, const std::string& out_dir = {});

}  // namespace dcl
