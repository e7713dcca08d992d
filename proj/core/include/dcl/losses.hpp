#pragma once

#include <span>
#include <vector>

#include <Eigen/Dense>

namespace dcl {

/// (anchor, positive, negative) row indices into the batch.
struct Triplet {
  std::size_t anchor;
  std::size_t positive;
  std::size_t negative;

  friend bool operator==(const Triplet&, const Triplet&) = default;
};

struct TripletSet {
  std::vector<Triplet> triples;
  double margin = 0.2;

  bool empty() const noexcept { return triples.empty(); }
  std::size_t size() const noexcept { return triples.size(); }
};

/// Cosine runs the squared Euclidean distance on L2-normalized rows, so
/// d lies in [0, 4] and the hinge cannot be met by shrinking the embedding.
enum class DistanceMetric { SquaredEuclidean, Euclidean, Cosine };

/// A loss value and its gradient with respect to the loss input
/// (logits for the classification loss, embeddings for the triplet losses).
struct LossValue {
  double value = 0.0;
  Eigen::MatrixXd grad;
};

/// Classification plus weighted metric term; gradients kept per input tensor.
struct CombinedLoss {
  double value = 0.0;
  Eigen::MatrixXd logit_grad;
  Eigen::MatrixXd embedding_grad;
};

/// Weighted softmax cross-entropy normalized by the batch size N:
///   -(1/N) * sum_i w_i * log softmax(logits_i)[y_i]
/// Zero-weight samples contribute exactly nothing.
/// Throws NumericError on non-finite logits, ContractViolation on negative
/// weights or mismatched lengths.
LossValue dsl_loss(const Eigen::MatrixXd& logits, std::span<const int> labels,
                   std::span<const double> weights, std::size_t batch_size);

/// Mean hinge over triples: (1/|T|) * sum max(0, m + d(a,p) - d(a,n)).
/// The subgradient at the kink is 0. An empty set yields 0 and a zero gradient.
LossValue tea_loss(const Eigen::MatrixXd& embeddings, const TripletSet& triplets,
                   DistanceMetric distance = DistanceMetric::SquaredEuclidean);

/// Same hinge as tea_loss; the triplets come from all minority anchors.
LossValue crl_loss(const Eigen::MatrixXd& embeddings, const TripletSet& triplets,
                   DistanceMetric distance = DistanceMetric::SquaredEuclidean);

/// dsl + f_weight * tea.
CombinedLoss dcl_loss(const LossValue& dsl, const LossValue& tea, double f_weight);

double pair_distance(const Eigen::MatrixXd& embeddings, std::size_t i,
                     std::size_t j, DistanceMetric distance);

/// Row-wise softmax with max subtraction.
Eigen::MatrixXd softmax_rows(const Eigen::MatrixXd& logits);

}  // namespace dcl
