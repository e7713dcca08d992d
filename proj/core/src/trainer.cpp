#include "dcl/trainer.hpp"

#include <algorithm>
#include <array>
#include <charconv>
#include <chrono>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <random>
#include <sstream>

#include <json.hpp>

#include "dcl/errors.hpp"
#include "dcl/mining.hpp"
#include "dcl/seed.hpp"

namespace dcl {

namespace {

constexpr std::uint64_t kInitStream = 0x1;
constexpr std::uint64_t kShuffleStream = 0x2;
constexpr std::uint64_t kComposeStream = 0x3;
constexpr std::uint64_t kPresetStream = 0x4;
constexpr Eigen::Index kEvalChunk = 2048;

std::string fmt(double v) {
  std::array<char, 32> buf{};
  const auto [ptr, ec] = std::to_chars(buf.data(), buf.data() + buf.size(), v);
  return std::string(buf.data(), ptr);
}

Eigen::MatrixXd gather_rows(const Eigen::MatrixXd& m, std::span<const std::size_t> rows) {
  Eigen::MatrixXd out(static_cast<Eigen::Index>(rows.size()), m.cols());
  for (std::size_t i = 0; i < rows.size(); ++i) {
    out.row(static_cast<Eigen::Index>(i)) = m.row(static_cast<Eigen::Index>(rows[i]));
  }
  return out;
}

LabelMatrix gather_labels(const LabelMatrix& labels, std::span<const std::size_t> rows) {
  LabelMatrix out(labels.size());
  for (std::size_t a = 0; a < labels.size(); ++a) {
    out[a].reserve(rows.size());
    for (auto i : rows) out[a].push_back(labels[a][i]);
  }
  return out;
}

}  // namespace

std::vector<std::vector<double>> preset_sample_weights(Method method, const Dataset& data,
                                                       std::uint64_t seed) {
  if (method != Method::OverSample && method != Method::DownSample &&
      method != Method::CostSensitive) {
    return {};
  }
  const auto train = data.indices(Split::Train);
  std::vector<std::vector<double>> weights(data.num_attributes(),
                                           std::vector<double>(data.num_samples(), 0.0));
  for (std::size_t a = 0; a < data.num_attributes(); ++a) {
    const auto counts = data.class_counts(a, Split::Train);
    std::vector<std::vector<std::size_t>> members(counts.size());
    for (auto i : train) members[data.labels[a][i]].push_back(i);
    std::mt19937_64 rng(derive_seed(seed, {kPresetStream, a}));
    const auto n_max = *std::max_element(counts.begin(), counts.end());
    const auto n_min = *std::min_element(counts.begin(), counts.end());
    if (n_min <= 0) {
      throw DegenerateDistributionError("attribute " + data.attribute_names[a] +
                                        " has a class without training samples");
    }
    for (std::size_t c = 0; c < counts.size(); ++c) {
      auto& idx = members[c];
      std::shuffle(idx.begin(), idx.end(), rng);
      const auto n_c = static_cast<std::int64_t>(idx.size());
      for (std::int64_t r = 0; r < n_c; ++r) {
        double w = 0.0;
        switch (method) {
          case Method::OverSample:
            // Duplicate to parity with the largest class.
            w = static_cast<double>(n_max / n_c + (r < n_max % n_c ? 1 : 0));
            break;
          case Method::DownSample:
            w = r < n_min ? 1.0 : 0.0;
            break;
          default:
            w = static_cast<double>(train.size()) /
                (static_cast<double>(counts.size()) * static_cast<double>(n_c));
            break;
        }
        weights[a][idx[static_cast<std::size_t>(r)]] = w;
      }
    }
  }
  return weights;
}

SplitMetrics evaluate(const DenseNet& net, const Dataset& data, Split split,
                      std::span<const int> minority_classes) {
  const auto idx = data.indices(split);
  if (idx.empty()) {
    throw UndefinedMetricError(std::string("split '") + std::string(to_string(split)) + "' is empty");
  }
  SplitMetrics m;
  m.counts.assign(data.num_attributes(), {});
  for (std::size_t start = 0; start < idx.size(); start += kEvalChunk) {
    const auto len = std::min<std::size_t>(kEvalChunk, idx.size() - start);
    const std::span<const std::size_t> rows(idx.data() + start, len);
    const auto cache = net.forward(gather_rows(data.features, rows));
    const auto labels = gather_labels(data.labels, rows);
    for (std::size_t a = 0; a < data.num_attributes(); ++a) {
      accumulate(m.counts[a], cache.logits[a], labels[a], minority_classes[a]);
    }
  }
  for (const auto& c : m.counts) {
    m.balanced.push_back(balanced_accuracy(c));
    m.biased.push_back(biased_accuracy(c));
  }
  m.mean_balanced = mean_accuracy(m.balanced);
  return m;
}

Trainer::Trainer(RunConfig config, const Dataset& data)
    : config_(std::move(config)), data_(&data) {
  config_.validate();
  data.validate();
  train_idx_ = data.indices(Split::Train);
  if (train_idx_.empty()) throw ConfigError("dataset has no training samples");
  for (std::size_t a = 0; a < data.num_attributes(); ++a) {
    train_dists_.push_back(ClassDistribution::from_counts(data.class_counts(a, Split::Train)));
    minority_.push_back(train_dists_.back().minority_class());
  }
  ModelShape shape;
  shape.input_dim = static_cast<int>(data.feature_dim());
  shape.hidden = config_.hidden;
  shape.embedding_dim = config_.embedding_dim;
  shape.classes_per_attribute = data.num_classes;
  net_ = DenseNet::create(shape, derive_seed(config_.seed, {kInitStream}));
  fixed_weights_ = preset_sample_weights(config_.method, data, config_.seed);
}

double Trainer::sampling_value(int epoch) const {
  return eval_scheduler(config_.sampling, epoch);
}

double Trainer::loss_weight(int epoch) const { return eval_loss_weight(config_.loss, epoch); }

std::vector<std::size_t> Trainer::epoch_order(int epoch) const {
  auto order = train_idx_;
  std::mt19937_64 rng(derive_seed(config_.seed, {kShuffleStream, static_cast<std::uint64_t>(epoch)}));
  std::shuffle(order.begin(), order.end(), rng);
  return order;
}

BatchPlan Trainer::plan_for(std::span<const std::size_t> batch, int epoch,
                            std::size_t batch_index) const {
  const auto labels = gather_labels(data_->labels, batch);
  if (!fixed_weights_.empty()) {
    auto plan = identity_plan(labels);
    for (std::size_t a = 0; a < labels.size(); ++a) {
      for (std::size_t i = 0; i < batch.size(); ++i) plan.weights[a][i] = fixed_weights_[a][batch[i]];
    }
    return plan;
  }
  const double g = sampling_value(epoch);
  // g == 1 targets the natural distribution: the batch is used as drawn.
  if (g == 1.0) return identity_plan(labels);
  std::vector<ClassDistribution> targets;
  targets.reserve(train_dists_.size());
  for (const auto& d : train_dists_) targets.push_back(target_at(d, g));
  return compose(labels, targets,
                 derive_seed(config_.seed, {kComposeStream, static_cast<std::uint64_t>(epoch),
                                            batch_index}));
}

BatchResult Trainer::step(std::span<const std::size_t> batch, int epoch,
                          std::size_t batch_index, bool update) {
  if (batch.empty()) throw ContractViolation("empty batch");
  const auto cache = net_.forward(gather_rows(data_->features, batch));
  const auto labels = gather_labels(data_->labels, batch);
  const double f = loss_weight(epoch);

  BatchResult out;
  out.plan = plan_for(batch, epoch, batch_index);
  const auto num_attrs = data_->num_attributes();
  std::vector<Eigen::MatrixXd> logit_grads(num_attrs), embedding_grads(num_attrs);
  for (std::size_t a = 0; a < num_attrs; ++a) {
    out.skipped_classes += out.plan.skipped_classes[a].size();
    auto dsl = dsl_loss(cache.logits[a], labels[a], out.plan.weights[a], batch.size());
    double tea_value = 0.0;
    double value = dsl.value;
    if (f > 0.0) {
      const MiningInput in{cache.logits[a], labels[a], minority_[a], out.plan.weights[a]};
      const auto anchors = config_.anchors == AnchorMode::Easy
                               ? mine_easy_anchors(in, static_cast<std::size_t>(config_.k))
                               : all_minority_anchors(in);
      const auto hard = mine_hard_samples(in, static_cast<std::size_t>(config_.k));
      const auto triplets = build_triplets(anchors, hard.positives, hard.negatives, config_.margin);
      out.triplets += triplets.size();
      const auto tea = config_.anchors == AnchorMode::Easy
                           ? tea_loss(cache.embeddings[a], triplets, config_.distance)
                           : crl_loss(cache.embeddings[a], triplets, config_.distance);
      auto combined = dcl_loss(dsl, tea, f);
      tea_value = tea.value;
      value = combined.value;
      logit_grads[a] = std::move(combined.logit_grad);
      embedding_grads[a] = std::move(combined.embedding_grad);
    } else {
      logit_grads[a] = std::move(dsl.grad);
    }
    out.dsl_per_attribute.push_back(dsl.value);
    out.tea_per_attribute.push_back(tea_value);
    out.dsl += dsl.value;
    out.tea += tea_value;
    out.loss += value;
  }

  if (!std::isfinite(out.loss)) {
    std::ostringstream msg;
    msg << "non-finite loss at epoch " << epoch << ", batch " << batch_index << ":";
    for (std::size_t a = 0; a < num_attrs; ++a) {
      msg << ' ' << data_->attribute_names[a] << "(dsl=" << out.dsl_per_attribute[a]
          << ", tea=" << out.tea_per_attribute[a] << ')';
    }
    throw NumericError(msg.str());
  }
  if (update) {
    net_.backward(cache, logit_grads, embedding_grads);
    net_.sgd_update(config_.learning_rate, config_.weight_decay);
  }
  return out;
}

EpochReport Trainer::train_epoch(int epoch) {
  if (epoch < 0 || epoch >= config_.epochs) {
    throw OutOfRangeError("epoch " + std::to_string(epoch) + " outside [0, " +
                          std::to_string(config_.epochs) + ")");
  }
  EpochReport report;
  report.epoch = epoch;
  report.g = sampling_value(epoch);
  report.f = loss_weight(epoch);
  const auto order = epoch_order(epoch);
  const auto bs = static_cast<std::size_t>(config_.batch_size);
  std::size_t batch_index = 0;
  for (std::size_t start = 0; start < order.size(); start += bs, ++batch_index) {
    const auto len = std::min(bs, order.size() - start);
    const auto r = step(std::span<const std::size_t>(order.data() + start, len), epoch, batch_index);
    report.mean_loss += r.loss;
    report.mean_dsl += r.dsl;
    report.mean_tea += r.tea;
    report.triplets += r.triplets;
    report.skipped_classes += r.skipped_classes;
  }
  report.batches = batch_index;
  if (batch_index > 0) {
    const auto n = static_cast<double>(batch_index);
    report.mean_loss /= n;
    report.mean_dsl /= n;
    report.mean_tea /= n;
  }
  report.val = evaluate(Split::Val);
  return report;
}

SplitMetrics Trainer::evaluate(Split split) const {
  return dcl::evaluate(net_, *data_, split, minority_);
}

namespace {

void write_metric_rows(std::ostream& out, int epoch, const Dataset& data, const SplitMetrics& m) {
  for (std::size_t a = 0; a < data.num_attributes(); ++a) {
    out << epoch << ',' << data.attribute_names[a] << ',' << fmt(m.balanced[a]) << ','
        << fmt(m.biased[a]) << '\n';
  }
  out.flush();
}

}  // namespace

RunReport run(const RunConfig& config, const Dataset& data, const std::string& out_dir) {
  const auto t0 = std::chrono::steady_clock::now();
  Trainer trainer(config, data);

  std::ofstream metrics_log, epoch_log;
  const std::filesystem::path dir(out_dir);
  if (!out_dir.empty()) {
    std::filesystem::create_directories(dir);
    std::ofstream(dir / "config.json") << run_config_to_json(config) << '\n';
    metrics_log.open(dir / "metrics.csv", std::ios::binary);
    epoch_log.open(dir / "epochs.csv", std::ios::binary);
    if (!metrics_log || !epoch_log) throw std::runtime_error("cannot write logs in " + out_dir);
    metrics_log << "epoch,attribute,mA,biased\n";
    epoch_log << "epoch,g,f,loss,dsl,tea,triplets,skipped_classes,val_mA\n";
  }

  RunReport report;
  report.initial_val = trainer.evaluate(Split::Val);
  report.best_val_mA = report.initial_val.mean_balanced;
  report.best_net = trainer.net();
  if (metrics_log.is_open()) write_metric_rows(metrics_log, 0, data, report.initial_val);

  for (int l = 0; l < config.epochs; ++l) {
    auto epoch = trainer.train_epoch(l);
    const int completed = l + 1;
    if (epoch.val.mean_balanced > report.best_val_mA) {
      report.best_val_mA = epoch.val.mean_balanced;
      report.best_epoch = completed;
      report.best_net = trainer.net();
    }
    if (metrics_log.is_open()) {
      write_metric_rows(metrics_log, completed, data, epoch.val);
      epoch_log << completed << ',' << fmt(epoch.g) << ',' << fmt(epoch.f) << ','
                << fmt(epoch.mean_loss) << ',' << fmt(epoch.mean_dsl) << ',' << fmt(epoch.mean_tea)
                << ',' << epoch.triplets << ',' << epoch.skipped_classes << ','
                << fmt(epoch.val.mean_balanced) << '\n';
      epoch_log.flush();
    }
    report.epochs.push_back(std::move(epoch));
  }

  report.final_net = trainer.net();
  report.final_test = evaluate(report.final_net, data, Split::Test, trainer.minority_classes());
  report.best_test = evaluate(report.best_net, data, Split::Test, trainer.minority_classes());
  report.wall_seconds =
      std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();

  if (!out_dir.empty()) {
    save_checkpoint(report.final_net, (dir / "final.ckpt").string());
    save_checkpoint(report.best_net, (dir / "best.ckpt").string());
    nlohmann::ordered_json summary;
    summary["config"] = nlohmann::ordered_json::parse(run_config_to_json(config));
    summary["best_epoch"] = report.best_epoch;
    summary["best_val_mA"] = report.best_val_mA;
    summary["final_val_mA"] =
        report.epochs.empty() ? report.initial_val.mean_balanced : report.epochs.back().val.mean_balanced;
    summary["final_test_mA"] = report.final_test.mean_balanced;
    summary["best_test_mA"] = report.best_test.mean_balanced;
    summary["best_test_mA_per_attribute"] = report.best_test.balanced;
    summary["wall_seconds"] = report.wall_seconds;
    std::ofstream(dir / "summary.json") << summary.dump(2) << '\n';
  }
  return report;
}

}  // namespace dcl
