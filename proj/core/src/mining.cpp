#include "dcl/mining.hpp"

#include <algorithm>

#include "dcl/errors.hpp"
#include "dcl/metrics.hpp"

namespace dcl {

namespace {

bool in_pool(const MiningInput& in, std::size_t i) {
  return in.weights.empty() || in.weights[i] > 0.0;
}

void check(const MiningInput& in) {
  const auto n = static_cast<std::size_t>(in.logits.rows());
  if (in.labels.size() != n || (!in.weights.empty() && in.weights.size() != n)) {
    throw ContractViolation("mining input lengths disagree");
  }
  if (in.minority_class < 0 || in.minority_class >= in.logits.cols()) {
    throw ContractViolation("minority class outside logit columns");
  }
}

// Indices sorted by descending score, ties by ascending index, truncated to k.
std::vector<std::size_t> top_k(std::vector<std::pair<double, std::size_t>> scored, std::size_t k) {
  std::stable_sort(scored.begin(), scored.end(),
                   [](const auto& a, const auto& b) { return a.first > b.first; });
  if (scored.size() > k) scored.resize(k);
  std::vector<std::size_t> out;
  out.reserve(scored.size());
  for (const auto& s : scored) out.push_back(s.second);
  return out;
}

}  // namespace

std::vector<std::size_t> mine_easy_anchors(const MiningInput& in, std::size_t k) {
  check(in);
  const Eigen::MatrixXd p = softmax_rows(in.logits);
  std::vector<std::pair<double, std::size_t>> scored;
  for (std::size_t i = 0; i < in.labels.size(); ++i) {
    if (in.labels[i] != in.minority_class || !in_pool(in, i)) continue;
    const auto row = static_cast<Eigen::Index>(i);
    if (predict_class(in.logits.row(row), in.minority_class) != in.minority_class) continue;
    scored.emplace_back(p(row, in.minority_class), i);
  }
  return top_k(std::move(scored), k);
}

std::vector<std::size_t> all_minority_anchors(const MiningInput& in) {
  check(in);
  std::vector<std::size_t> out;
  for (std::size_t i = 0; i < in.labels.size(); ++i) {
    if (in.labels[i] == in.minority_class && in_pool(in, i)) out.push_back(i);
  }
  return out;
}

HardSamples mine_hard_samples(const MiningInput& in, std::size_t k) {
  check(in);
  const Eigen::MatrixXd p = softmax_rows(in.logits);
  std::vector<std::pair<double, std::size_t>> pos, neg;
  for (std::size_t i = 0; i < in.labels.size(); ++i) {
    if (!in_pool(in, i)) continue;
    const double p_min = p(static_cast<Eigen::Index>(i), in.minority_class);
    if (in.labels[i] == in.minority_class) {
      pos.emplace_back(1.0 - p_min, i);
    } else {
      neg.emplace_back(p_min, i);
    }
  }
  return {top_k(std::move(pos), k), top_k(std::move(neg), k)};
}

TripletSet build_triplets(std::span<const std::size_t> anchors,
                          std::span<const std::size_t> hard_positives,
                          std::span<const std::size_t> hard_negatives, double margin) {
  TripletSet set;
  set.margin = margin;
  if (anchors.empty() || hard_positives.empty() || hard_negatives.empty()) return set;
  set.triples.reserve(anchors.size() * hard_positives.size() * hard_negatives.size());
  for (auto a : anchors) {
    for (auto p : hard_positives) {
      if (a == p) continue;
      for (auto n : hard_negatives) set.triples.push_back({a, p, n});
    }
  }
  return set;
}

}  // namespace dcl
