#pragma once

#include <span>
#include <vector>

#include <Eigen/Dense>

#include "dcl/losses.hpp"

namespace dcl {

/// One attribute's view of a batch for mining. Samples whose weight is 0 are
/// outside the mining pool; an empty `weights` span means every sample is in.
struct MiningInput {
  const Eigen::MatrixXd& logits;  // samples x classes
  std::span<const int> labels;
  int minority_class = 1;
  std::span<const double> weights = {};
};

/// Correctly predicted minority samples, the k with the highest minority-class
/// probability. Empty when none is correct.
std::vector<std::size_t> mine_easy_anchors(const MiningInput& in, std::size_t k);

/// Every minority sample in the pool (anchor choice of the CRL baseline).
std::vector<std::size_t> all_minority_anchors(const MiningInput& in);

struct HardSamples {
  std::vector<std::size_t> positives;  // minority, by descending wrong-class probability
  std::vector<std::size_t> negatives;  // others, by descending minority probability
};

/// Top-k hard positives and negatives, ranked rather than thresholded.
HardSamples mine_hard_samples(const MiningInput& in, std::size_t k);

/// Cross product anchors x positives x negatives without anchor == positive.
TripletSet build_triplets(std::span<const std::size_t> anchors,
                          std::span<const std::size_t> hard_positives,
                          std::span<const std::size_t> hard_negatives, double margin);

}  // namespace dcl
