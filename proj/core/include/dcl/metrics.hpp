#pragma once

#include <cstdint>
#include <span>
#include <vector>

#include <Eigen/Dense>

namespace dcl {

/// Binary confusion counts for one attribute; "positive" is the attribute's
/// training-set minority class. Counts merge associatively.
struct Confusion {
  std::int64_t tp = 0;
  std::int64_t fp = 0;
  std::int64_t tn = 0;
  std::int64_t fn = 0;

  std::int64_t positives() const noexcept { return tp + fn; }
  std::int64_t negatives() const noexcept { return tn + fp; }

  Confusion& operator+=(const Confusion& o) noexcept {
    tp += o.tp;
    fp += o.fp;
    tn += o.tn;
    fn += o.fn;
    return *this;
  }
  friend Confusion operator+(Confusion a, const Confusion& b) noexcept { return a += b; }
  friend bool operator==(const Confusion&, const Confusion&) = default;
};

using ConfusionCounts = std::vector<Confusion>;

/// 1/2 (TP/P + TN/N). Throws UndefinedMetricError when P or N is zero.
double balanced_accuracy(const Confusion& c);
double balanced_accuracy(const ConfusionCounts& c, std::size_t attribute);

/// (TP + TN) / (P + N).
double biased_accuracy(const Confusion& c);

/// Arithmetic mean of per-attribute balanced accuracies.
double mean_accuracy(std::span<const double> per_attribute);

/// Argmax over a logit row; ties resolve to `minority_class`, then the lowest id.
int predict_class(const Eigen::Ref<const Eigen::RowVectorXd>& logits, int minority_class);

/// Adds one attribute's predictions to `c`.
void accumulate(Confusion& c, const Eigen::MatrixXd& logits, std::span<const int> labels,
                int minority_class);

}  // namespace dcl
