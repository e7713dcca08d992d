#pragma once

#include <string>
#include <string_view>

namespace dcl {

enum class SchedulerKind { Convex, Linear, Concave, Composite, Constant };

std::string_view to_string(SchedulerKind kind);
SchedulerKind scheduler_kind_from_string(std::string_view name);

/// A curriculum curve mapping epoch l in [0, L] to a value in [0, 1].
///
///   Convex     cos(l/L * pi/2)
///   Linear     1 - l/L
///   Concave    lambda^l
///   Composite  cos(l/L * pi)/2 + 1/2
///   Constant   constant_value (baseline configurations)
struct SchedulerFn {
  SchedulerKind kind = SchedulerKind::Convex;
  int total_epochs = 1;
  double lambda = 0.99;
  double constant_value = 1.0;

  static SchedulerFn convex(int total_epochs);
  static SchedulerFn linear(int total_epochs);
  static SchedulerFn concave(int total_epochs, double lambda);
  static SchedulerFn composite(int total_epochs);
  static SchedulerFn constant(int total_epochs, double value);

  /// Throws ConfigError if the parameters for `kind` are invalid.
  void validate() const;
};

/// Throws OutOfRangeError for epoch outside [0, total_epochs] and ConfigError
/// for an invalid scheduler.
double eval_scheduler(const SchedulerFn& s, int epoch);

/// Weight of the metric-learning term: base(l) + eps before the self-learning
/// point p*L, exactly eps from there on.
struct LossScheduler {
  SchedulerFn base = SchedulerFn::composite(1);
  double self_learn_point = 0.3;
  double self_learn_ratio = 0.01;

  /// f(l) == value for every epoch.
  static LossScheduler fixed(int total_epochs, double value);

  void validate() const;
};

double eval_loss_weight(const LossScheduler& ls, int epoch);

/// Parses "kind" or "kind:param", e.g. "convex", "concave:0.99", "constant:1".
SchedulerFn parse_scheduler(std::string_view text, int total_epochs);
std::string format_scheduler(const SchedulerFn& s);

}  // namespace dcl
