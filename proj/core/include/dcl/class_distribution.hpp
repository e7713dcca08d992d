#pragma once

#include <cstdint>
#include <span>
#include <vector>

namespace dcl {

/// Class-count ratios for one attribute, sorted ascending and normalized to
/// the least frequent class: ratios[0] == 1.
///
/// `class_ids[i]` is the original label of the class at position i, so
/// class_ids[0] is the minority class.
class ClassDistribution {
 public:
  /// Throws DegenerateDistributionError if any class has zero samples and
  /// ConfigError for fewer than two classes.
  static ClassDistribution from_counts(std::span<const std::int64_t> counts);

  /// Builds from already-normalized ratios (validated against the invariants).
  static ClassDistribution from_ratios(std::vector<double> ratios,
                                       std::vector<int> class_ids);

  const std::vector<double>& ratios() const noexcept { return ratios_; }
  const std::vector<int>& class_ids() const noexcept { return class_ids_; }
  std::size_t num_classes() const noexcept { return ratios_.size(); }
  int minority_class() const noexcept { return class_ids_.front(); }

  /// Ratio for an original class label; throws OutOfRangeError if unknown.
  double ratio_of(int class_id) const;
  /// Largest ratio, i.e. majority:minority.
  double imbalance_ratio() const noexcept { return ratios_.back(); }

  friend bool operator==(const ClassDistribution&, const ClassDistribution&) = default;

 private:
  ClassDistribution(std::vector<double> ratios, std::vector<int> class_ids)
      : ratios_(std::move(ratios)), class_ids_(std::move(class_ids)) {}

  std::vector<double> ratios_;
  std::vector<int> class_ids_;
};

/// Elementwise ratios^g. g = 1 gives the input back, g = 0 the balanced
/// all-ones distribution. Throws OutOfRangeError for g outside [0,1].
ClassDistribution target_at(const ClassDistribution& d, double g_value);

}  // namespace dcl
