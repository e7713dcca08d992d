#include "dcl/metrics.hpp"

#include <numeric>

#include "dcl/errors.hpp"

namespace dcl {

double balanced_accuracy(const Confusion& c) {
  if (c.positives() <= 0 || c.negatives() <= 0) {
    throw UndefinedMetricError("balanced accuracy needs at least one positive and one negative");
  }
  const double tpr = static_cast<double>(c.tp) / static_cast<double>(c.positives());
  const double tnr = static_cast<double>(c.tn) / static_cast<double>(c.negatives());
  return 0.5 * (tpr + tnr);
}

double balanced_accuracy(const ConfusionCounts& c, std::size_t attribute) {
  return balanced_accuracy(c.at(attribute));
}

double biased_accuracy(const Confusion& c) {
  const auto total = c.positives() + c.negatives();
  if (total <= 0) throw UndefinedMetricError("accuracy of an empty split");
  return static_cast<double>(c.tp + c.tn) / static_cast<double>(total);
}

double mean_accuracy(std::span<const double> per_attribute) {
  if (per_attribute.empty()) throw ContractViolation("mean accuracy of zero attributes");
  return std::accumulate(per_attribute.begin(), per_attribute.end(), 0.0) /
         static_cast<double>(per_attribute.size());
}

int predict_class(const Eigen::Ref<const Eigen::RowVectorXd>& logits, int minority_class) {
  int best = 0;
  for (Eigen::Index c = 1; c < logits.size(); ++c) {
    if (logits(c) > logits(best)) best = static_cast<int>(c);
  }
  if (minority_class >= 0 && minority_class < logits.size() &&
      logits(minority_class) == logits(best)) {
    return minority_class;
  }
  return best;
}

void accumulate(Confusion& c, const Eigen::MatrixXd& logits, std::span<const int> labels,
                int minority_class) {
  if (static_cast<std::size_t>(logits.rows()) != labels.size()) {
    throw ContractViolation("logits and labels differ in length");
  }
  for (std::size_t i = 0; i < labels.size(); ++i) {
    const bool predicted_pos =
        predict_class(logits.row(static_cast<Eigen::Index>(i)), minority_class) == minority_class;
    const bool actual_pos = labels[i] == minority_class;
    if (actual_pos) {
      predicted_pos ? ++c.tp : ++c.fn;
    } else {
      predicted_pos ? ++c.fp : ++c.tn;
    }
  }
}

}  // namespace dcl
