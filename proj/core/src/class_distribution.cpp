#include "dcl/class_distribution.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <string>

#include "dcl/errors.hpp"

namespace dcl {

ClassDistribution ClassDistribution::from_counts(
    std::span<const std::int64_t> counts) {
  if (counts.size() < 2) {
    throw ConfigError("a class distribution needs at least two classes");
  }
  std::vector<int> order(counts.size());
  std::iota(order.begin(), order.end(), 0);
  for (std::size_t c = 0; c < counts.size(); ++c) {
    if (counts[c] <= 0) {
      throw DegenerateDistributionError("class " + std::to_string(c) +
                                        " has no samples");
    }
  }
  std::stable_sort(order.begin(), order.end(),
                   [&](int a, int b) { return counts[a] < counts[b]; });
  const auto min_count = static_cast<double>(counts[order.front()]);
  std::vector<double> ratios(counts.size());
  for (std::size_t i = 0; i < order.size(); ++i) {
    ratios[i] = static_cast<double>(counts[order[i]]) / min_count;
  }
  ratios.front() = 1.0;
  return ClassDistribution(std::move(ratios), std::move(order));
}

ClassDistribution ClassDistribution::from_ratios(std::vector<double> ratios,
                                                 std::vector<int> class_ids) {
  if (ratios.size() < 2 || ratios.size() != class_ids.size()) {
    throw ConfigError("class distribution needs >= 2 ratios with matching class ids");
  }
  if (ratios.front() != 1.0 || !std::is_sorted(ratios.begin(), ratios.end()) ||
      !std::all_of(ratios.begin(), ratios.end(),
                   [](double r) { return std::isfinite(r) && r >= 1.0; })) {
    throw ConfigError("ratios must be finite, ascending and start at exactly 1");
  }
  return ClassDistribution(std::move(ratios), std::move(class_ids));
}

double ClassDistribution::ratio_of(int class_id) const {
  for (std::size_t i = 0; i < class_ids_.size(); ++i) {
    if (class_ids_[i] == class_id) return ratios_[i];
  }
  throw OutOfRangeError("class " + std::to_string(class_id) +
                        " not in distribution");
}

ClassDistribution target_at(const ClassDistribution& d, double g_value) {
  if (!(g_value >= 0.0 && g_value <= 1.0)) {
    throw OutOfRangeError("g must lie in [0,1], got " + std::to_string(g_value));
  }
  std::vector<double> powered(d.ratios().size());
  std::transform(d.ratios().begin(), d.ratios().end(), powered.begin(),
                 [&](double r) { return g_value == 1.0 ? r : std::pow(r, g_value); });
  return ClassDistribution::from_ratios(std::move(powered), d.class_ids());
}

}  // namespace dcl
