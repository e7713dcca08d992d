#include "dcl/schedulers.hpp"

#include <charconv>
#include <cmath>
#include <numbers>
#include <sstream>

#include "dcl/errors.hpp"

namespace dcl {

std::string_view to_string(SchedulerKind kind) {
  switch (kind) {
    case SchedulerKind::Convex: return "convex";
    case SchedulerKind::Linear: return "linear";
    case SchedulerKind::Concave: return "concave";
    case SchedulerKind::Composite: return "composite";
    case SchedulerKind::Constant: return "constant";
  }
  return "unknown";
}

SchedulerKind scheduler_kind_from_string(std::string_view name) {
  if (name == "convex" || name == "cos") return SchedulerKind::Convex;
  if (name == "linear") return SchedulerKind::Linear;
  if (name == "concave" || name == "exp") return SchedulerKind::Concave;
  if (name == "composite") return SchedulerKind::Composite;
  if (name == "constant") return SchedulerKind::Constant;
  throw ConfigError("unknown scheduler kind '" + std::string(name) + "'");
}

SchedulerFn SchedulerFn::convex(int total_epochs) {
  return {SchedulerKind::Convex, total_epochs, 0.99, 1.0};
}
SchedulerFn SchedulerFn::linear(int total_epochs) {
  return {SchedulerKind::Linear, total_epochs, 0.99, 1.0};
}
SchedulerFn SchedulerFn::concave(int total_epochs, double lambda) {
  return {SchedulerKind::Concave, total_epochs, lambda, 1.0};
}
SchedulerFn SchedulerFn::composite(int total_epochs) {
  return {SchedulerKind::Composite, total_epochs, 0.99, 1.0};
}
SchedulerFn SchedulerFn::constant(int total_epochs, double value) {
  return {SchedulerKind::Constant, total_epochs, 0.99, value};
}

void SchedulerFn::validate() const {
  if (total_epochs <= 0) {
    throw ConfigError("scheduler total_epochs must be positive, got " +
                      std::to_string(total_epochs));
  }
  if (kind == SchedulerKind::Concave && !(lambda > 0.0 && lambda < 1.0)) {
    throw ConfigError("concave scheduler lambda must lie in (0,1), got " +
                      std::to_string(lambda));
  }
  if (kind == SchedulerKind::Constant &&
      !(constant_value >= 0.0 && constant_value <= 1.0)) {
    throw ConfigError("constant scheduler value must lie in [0,1], got " +
                      std::to_string(constant_value));
  }
}

double eval_scheduler(const SchedulerFn& s, int epoch) {
  s.validate();
  if (epoch < 0 || epoch > s.total_epochs) {
    throw OutOfRangeError("epoch " + std::to_string(epoch) + " outside [0, " +
                          std::to_string(s.total_epochs) + "]");
  }
  const double progress = static_cast<double>(epoch) / s.total_epochs;
  switch (s.kind) {
    case SchedulerKind::Convex:
      // cos(pi/2) is ~6e-17, not 0.
      if (epoch == s.total_epochs) return 0.0;
      return std::cos(progress * std::numbers::pi / 2.0);
    case SchedulerKind::Linear:
      return 1.0 - progress;
    case SchedulerKind::Concave:
      return std::pow(s.lambda, epoch);
    case SchedulerKind::Composite:
      return 0.5 * std::cos(progress * std::numbers::pi) + 0.5;
    case SchedulerKind::Constant:
      return s.constant_value;
  }
  return 0.0;
}

LossScheduler LossScheduler::fixed(int total_epochs, double value) {
  return {SchedulerFn::constant(total_epochs, 0.0), 0.0, value};
}

void LossScheduler::validate() const {
  base.validate();
  if (!(self_learn_point >= 0.0 && self_learn_point <= 1.0)) {
    throw ConfigError("self-learning point p must lie in [0,1], got " +
                      std::to_string(self_learn_point));
  }
  if (!(self_learn_ratio >= 0.0) || !std::isfinite(self_learn_ratio)) {
    throw ConfigError("self-learning ratio eps must be finite and >= 0, got " +
                      std::to_string(self_learn_ratio));
  }
}

double eval_loss_weight(const LossScheduler& ls, int epoch) {
  ls.validate();
  if (epoch < 0 || epoch > ls.base.total_epochs) {
    throw OutOfRangeError("epoch " + std::to_string(epoch) + " outside [0, " +
                          std::to_string(ls.base.total_epochs) + "]");
  }
  const double switch_epoch = ls.self_learn_point * ls.base.total_epochs;
  if (static_cast<double>(epoch) >= switch_epoch) return ls.self_learn_ratio;
  return eval_scheduler(ls.base, epoch) + ls.self_learn_ratio;
}

SchedulerFn parse_scheduler(std::string_view text, int total_epochs) {
  const auto colon = text.find(':');
  const auto kind = scheduler_kind_from_string(text.substr(0, colon));
  SchedulerFn s{kind, total_epochs, 0.99, 1.0};
  if (colon != std::string_view::npos) {
    const auto param = text.substr(colon + 1);
    double value = 0.0;
    const auto [ptr, ec] =
        std::from_chars(param.data(), param.data() + param.size(), value);
    if (ec != std::errc{} || ptr != param.data() + param.size()) {
      throw ConfigError("bad scheduler parameter in '" + std::string(text) + "'");
    }
    if (kind == SchedulerKind::Concave) {
      s.lambda = value;
    } else if (kind == SchedulerKind::Constant) {
      s.constant_value = value;
    } else {
      throw ConfigError("scheduler '" + std::string(to_string(kind)) +
                        "' takes no parameter");
    }
  } else if (kind == SchedulerKind::Constant) {
    throw ConfigError("constant scheduler needs a value, e.g. constant:1");
  }
  return s;
}

std::string format_scheduler(const SchedulerFn& s) {
  std::ostringstream out;
  out.precision(17);
  out << to_string(s.kind);
  if (s.kind == SchedulerKind::Concave) out << ':' << s.lambda;
  if (s.kind == SchedulerKind::Constant) out << ':' << s.constant_value;
  return out.str();
}

}  // namespace dcl
