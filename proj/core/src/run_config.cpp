#include <algorithm>
#include <set>

#include <json.hpp>

#include "dcl/errors.hpp"
#include "dcl/trainer.hpp"

namespace dcl {

namespace {

constexpr std::pair<Method, std::string_view> kMethods[] = {
    {Method::DCL, "dcl"},
    {Method::CE, "ce"},
    {Method::SelectiveLearning, "sl"},
    {Method::CRL_I, "crl"},
    {Method::OverSample, "oversample"},
    {Method::DownSample, "downsample"},
    {Method::CostSensitive, "cost"},
};

}  // namespace

std::string_view to_string(Method m) {
  for (const auto& [method, name] : kMethods) {
    if (method == m) return name;
  }
  return "unknown";
}

Method method_from_string(std::string_view name) {
  for (const auto& [method, n] : kMethods) {
    if (n == name) return method;
  }
  if (name == "selective" || name == "selective_learning") return Method::SelectiveLearning;
  if (name == "crl_i" || name == "crl-i") return Method::CRL_I;
  if (name == "cost_sensitive") return Method::CostSensitive;
  throw ConfigError("unknown method '" + std::string(name) +
                    "' (expected dcl, ce, sl, crl, oversample, downsample, cost)");
}

std::string_view to_string(AnchorMode m) {
  return m == AnchorMode::Easy ? "easy" : "all_minority";
}

AnchorMode anchor_mode_from_string(std::string_view name) {
  if (name == "easy") return AnchorMode::Easy;
  if (name == "all_minority" || name == "all") return AnchorMode::AllMinority;
  throw ConfigError("unknown anchor mode '" + std::string(name) + "'");
}

std::string_view to_string(DistanceMetric d) {
  switch (d) {
    case DistanceMetric::SquaredEuclidean: return "squared_euclidean";
    case DistanceMetric::Euclidean: return "euclidean";
    case DistanceMetric::Cosine: return "cosine";
  }
  return "squared_euclidean";
}

DistanceMetric distance_from_string(std::string_view name) {
  if (name == "squared_euclidean" || name == "sqeuclidean") return DistanceMetric::SquaredEuclidean;
  if (name == "euclidean") return DistanceMetric::Euclidean;
  if (name == "cosine") return DistanceMetric::Cosine;
  throw ConfigError("unknown distance '" + std::string(name) + "'");
}

RunConfig RunConfig::preset(Method method, int epochs) {
  const int horizon = std::max(epochs, 1);
  RunConfig c;
  c.method = method;
  c.epochs = epochs;
  switch (method) {
    case Method::DCL:
      c.sampling = SchedulerFn::convex(horizon);
      c.loss = {SchedulerFn::composite(horizon), 0.3, 0.01};
      break;
    case Method::SelectiveLearning:
      c.sampling = SchedulerFn::constant(horizon, 0.0);
      c.loss = LossScheduler::fixed(horizon, 0.0);
      break;
    case Method::CRL_I:
      c.sampling = SchedulerFn::constant(horizon, 1.0);
      c.loss = LossScheduler::fixed(horizon, 0.01);
      c.anchors = AnchorMode::AllMinority;
      break;
    case Method::CE:
    case Method::OverSample:
    case Method::DownSample:
    case Method::CostSensitive:
      c.sampling = SchedulerFn::constant(horizon, 1.0);
      c.loss = LossScheduler::fixed(horizon, 0.0);
      break;
  }
  return c;
}

void RunConfig::set_epochs(int l) {
  epochs = l;
  sampling.total_epochs = std::max(l, 1);
  loss.base.total_epochs = std::max(l, 1);
}

void RunConfig::validate() const {
  if (epochs < 0) throw ConfigError("epochs must be >= 0");
  if (sampling.total_epochs != std::max(epochs, 1) ||
      loss.base.total_epochs != std::max(epochs, 1)) {
    throw ConfigError("scheduler horizons must equal the number of epochs");
  }
  sampling.validate();
  loss.validate();
  if (k <= 0) throw ConfigError("k must be positive");
  if (!(margin >= 0.0)) throw ConfigError("margin must be >= 0");
  if (batch_size <= 0) throw ConfigError("batch size must be positive");
  if (!(learning_rate > 0.0)) throw ConfigError("learning rate must be > 0");
  if (!(weight_decay >= 0.0)) throw ConfigError("weight decay must be >= 0");
  if (embedding_dim <= 0) throw ConfigError("embedding_dim must be positive");
  for (int h : hidden) {
    if (h <= 0) throw ConfigError("hidden widths must be positive");
  }
}

namespace {

std::string format_loss_scheduler(const LossScheduler& ls) {
  if (ls.base.kind == SchedulerKind::Constant) {
    return "constant:" + nlohmann::json(ls.self_learn_ratio).dump();
  }
  return format_scheduler(ls.base);
}

// "constant:v" pins f == v for every epoch; any other kind is the base curve.
void apply_loss_scheduler(RunConfig& c, const std::string& text) {
  const auto parsed = parse_scheduler(text, std::max(c.epochs, 1));
  if (parsed.kind == SchedulerKind::Constant) {
    c.loss = LossScheduler::fixed(std::max(c.epochs, 1), parsed.constant_value);
  } else {
    c.loss.base = parsed;
  }
}

}  // namespace

RunConfig run_config_from_json(std::string_view json_text) {
  nlohmann::json j;
  try {
    j = nlohmann::json::parse(json_text);
  } catch (const nlohmann::json::exception& e) {
    throw ConfigError(std::string("config is not valid JSON: ") + e.what());
  }
  if (!j.is_object()) throw ConfigError("config must be a JSON object");
  static const std::set<std::string> known = {
      "method", "g", "f", "p", "eps", "k", "margin", "distance", "anchors", "epochs",
      "batch", "lr", "wd", "seed", "hidden", "embedding_dim", "data", "out"};
  for (const auto& item : j.items()) {
    if (!known.contains(item.key())) throw ConfigError("unknown config key '" + item.key() + "'");
  }
  try {
    const auto method = method_from_string(j.value("method", std::string("dcl")));
    const int epochs = j.value("epochs", 60);
    auto c = RunConfig::preset(method, epochs);
    if (j.contains("g")) c.sampling = parse_scheduler(j["g"].get<std::string>(), std::max(epochs, 1));
    if (j.contains("f")) apply_loss_scheduler(c, j["f"].get<std::string>());
    if (j.contains("p")) c.loss.self_learn_point = j["p"].get<double>();
    if (j.contains("eps")) c.loss.self_learn_ratio = j["eps"].get<double>();
    if (j.contains("anchors")) c.anchors = anchor_mode_from_string(j["anchors"].get<std::string>());
    if (j.contains("distance")) c.distance = distance_from_string(j["distance"].get<std::string>());
    c.k = j.value("k", c.k);
    c.margin = j.value("margin", c.margin);
    c.batch_size = j.value("batch", c.batch_size);
    c.learning_rate = j.value("lr", c.learning_rate);
    c.weight_decay = j.value("wd", c.weight_decay);
    c.seed = j.value("seed", c.seed);
    c.hidden = j.value("hidden", c.hidden);
    c.embedding_dim = j.value("embedding_dim", c.embedding_dim);
    c.validate();
    return c;
  } catch (const nlohmann::json::exception& e) {
    throw ConfigError(std::string("bad config value: ") + e.what());
  }
}

std::string run_config_to_json(const RunConfig& c) {
  nlohmann::ordered_json j;
  j["method"] = to_string(c.method);
  j["g"] = format_scheduler(c.sampling);
  j["f"] = format_loss_scheduler(c.loss);
  if (c.loss.base.kind != SchedulerKind::Constant) {
    j["p"] = c.loss.self_learn_point;
    j["eps"] = c.loss.self_learn_ratio;
  }
  j["anchors"] = to_string(c.anchors);
  j["distance"] = to_string(c.distance);
  j["k"] = c.k;
  j["margin"] = c.margin;
  j["epochs"] = c.epochs;
  j["batch"] = c.batch_size;
  j["lr"] = c.learning_rate;
  j["wd"] = c.weight_decay;
  j["seed"] = c.seed;
  j["hidden"] = c.hidden;
  j["embedding_dim"] = c.embedding_dim;
  return j.dump(2);
}

}  // namespace dcl
