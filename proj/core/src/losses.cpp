#include "dcl/losses.hpp"

#include <cmath>
#include <string>

#include "dcl/errors.hpp"

namespace dcl {

Eigen::MatrixXd softmax_rows(const Eigen::MatrixXd& logits) {
  Eigen::MatrixXd p(logits.rows(), logits.cols());
  for (Eigen::Index i = 0; i < logits.rows(); ++i) {
    const double m = logits.row(i).maxCoeff();
    p.row(i) = (logits.row(i).array() - m).exp();
    p.row(i) /= p.row(i).sum();
  }
  return p;
}

LossValue dsl_loss(const Eigen::MatrixXd& logits, std::span<const int> labels,
                   std::span<const double> weights, std::size_t batch_size) {
  const auto n = static_cast<std::size_t>(logits.rows());
  if (labels.size() != n || weights.size() != n) {
    throw ContractViolation("dsl_loss: logits, labels and weights must have equal length");
  }
  if (batch_size == 0) throw ContractViolation("dsl_loss: batch size must be positive");
  if (!logits.allFinite()) throw NumericError("dsl_loss: non-finite logits");

  LossValue out;
  out.grad = Eigen::MatrixXd::Zero(logits.rows(), logits.cols());
  const double inv_n = 1.0 / static_cast<double>(batch_size);
  for (std::size_t i = 0; i < n; ++i) {
    const double w = weights[i];
    if (w < 0.0 || !std::isfinite(w)) {
      throw ContractViolation("dsl_loss: weight " + std::to_string(i) +
                              " is negative or non-finite");
    }
    if (w == 0.0) continue;
    const int y = labels[i];
    if (y < 0 || y >= logits.cols()) {
      throw ContractViolation("dsl_loss: label out of range");
    }
    const auto row = logits.row(static_cast<Eigen::Index>(i));
    const double m = row.maxCoeff();
    const Eigen::RowVectorXd e = (row.array() - m).exp();
    const double z = e.sum();
    const double log_p = row(y) - m - std::log(z);
    out.value -= w * log_p;
    auto g = out.grad.row(static_cast<Eigen::Index>(i));
    g = (w * inv_n / z) * e;
    g(y) -= w * inv_n;
  }
  out.value *= inv_n;
  return out;
}

namespace {

Eigen::RowVectorXd unit_row(const Eigen::MatrixXd& e, std::size_t i) {
  const Eigen::RowVectorXd r = e.row(static_cast<Eigen::Index>(i));
  const double n = r.norm();
  return n > 0.0 ? Eigen::RowVectorXd(r / n) : Eigen::RowVectorXd::Zero(r.size());
}

}  // namespace

double pair_distance(const Eigen::MatrixXd& embeddings, std::size_t i,
                     std::size_t j, DistanceMetric distance) {
  if (distance == DistanceMetric::Cosine) {
    return (unit_row(embeddings, i) - unit_row(embeddings, j)).squaredNorm();
  }
  const double sq = (embeddings.row(static_cast<Eigen::Index>(i)) -
                     embeddings.row(static_cast<Eigen::Index>(j)))
                        .squaredNorm();
  return distance == DistanceMetric::SquaredEuclidean ? sq : std::sqrt(sq);
}

namespace {

LossValue triplet_hinge(const Eigen::MatrixXd& embeddings, const TripletSet& set,
                        DistanceMetric distance) {
  LossValue out;
  out.grad = Eigen::MatrixXd::Zero(embeddings.rows(), embeddings.cols());
  if (set.empty()) return out;

  const auto n = static_cast<std::size_t>(embeddings.rows());
  // Compact the rows that take part so pair tables stay small.
  std::vector<Eigen::Index> local(n, -1);
  std::vector<std::size_t> rows;
  auto touch = [&](std::size_t i) {
    if (i >= n) throw ContractViolation("triplet index out of range");
    if (local[i] < 0) {
      local[i] = static_cast<Eigen::Index>(rows.size());
      rows.push_back(i);
    }
    return local[i];
  };
  for (const auto& t : set.triples) {
    touch(t.anchor);
    touch(t.positive);
    touch(t.negative);
  }
  const auto u = static_cast<Eigen::Index>(rows.size());
  Eigen::MatrixXd r(u, embeddings.cols());
  for (Eigen::Index i = 0; i < u; ++i) r.row(i) = embeddings.row(static_cast<Eigen::Index>(rows[i]));
  // All pairwise squared distances from one Gram product.
  const Eigen::MatrixXd gram = r * r.transpose();
  const Eigen::VectorXd sq = gram.diagonal();
  Eigen::MatrixXd dist = ((-2.0 * gram).colwise() + sq).rowwise() + sq.transpose();
  dist = dist.cwiseMax(0.0);
  for (Eigen::Index i = 0; i < u; ++i) dist(i, i) = 0.0;
  if (distance == DistanceMetric::Euclidean) dist = dist.cwiseSqrt();

  // coeff(a, b) = signed count of active triples using pair (a, b).
  Eigen::MatrixXd coeff = Eigen::MatrixXd::Zero(u, u);
  double total = 0.0;
  for (const auto& t : set.triples) {
    const auto a = local[t.anchor], p = local[t.positive], q = local[t.negative];
    const double hinge = set.margin + dist(a, p) - dist(a, q);
    if (hinge > 0.0) {
      total += hinge;
      coeff(a, p) += 1.0;
      coeff(a, q) -= 1.0;
    }
  }
  const double inv_t = 1.0 / static_cast<double>(set.size());
  out.value = total * inv_t;
  if (!std::isfinite(out.value)) throw NumericError("triplet loss is not finite");

  // d/de_a of d(a,b) is s(a,b) * (e_a - e_b), and the negative of that for e_b;
  // s = 2 for squared distance, 1/d for plain distance (0 at d == 0). With
  // S = s .* (C + C^T): grad_i = sum_j S_ij (e_i - e_j).
  Eigen::MatrixXd sym = coeff + coeff.transpose();
  if (distance == DistanceMetric::Euclidean) {
    sym = sym.binaryExpr(dist, [](double c, double d) { return d > 0.0 ? c / d : 0.0; });
  } else {
    sym *= 2.0;
  }
  sym *= inv_t;
  const Eigen::MatrixXd g = (r.array().colwise() * sym.rowwise().sum().array()).matrix() - sym * r;
  for (Eigen::Index i = 0; i < u; ++i) out.grad.row(static_cast<Eigen::Index>(rows[i])) = g.row(i);
  return out;
}

LossValue normalized_hinge(const Eigen::MatrixXd& embeddings, const TripletSet& set) {
  const Eigen::VectorXd norms = embeddings.rowwise().norm();
  Eigen::MatrixXd unit = Eigen::MatrixXd::Zero(embeddings.rows(), embeddings.cols());
  for (Eigen::Index i = 0; i < unit.rows(); ++i) {
    if (norms(i) > 0.0) unit.row(i) = embeddings.row(i) / norms(i);
  }
  LossValue out = triplet_hinge(unit, set, DistanceMetric::SquaredEuclidean);
  // Through u = e / |e|: de = (g - u (u . g)) / |e|.
  for (Eigen::Index i = 0; i < unit.rows(); ++i) {
    if (norms(i) == 0.0) {
      out.grad.row(i).setZero();
      continue;
    }
    const Eigen::RowVectorXd g = out.grad.row(i);
    out.grad.row(i) = (g - unit.row(i) * unit.row(i).dot(g)) / norms(i);
  }
  return out;
}

LossValue hinge(const Eigen::MatrixXd& embeddings, const TripletSet& set, DistanceMetric distance) {
  return distance == DistanceMetric::Cosine ? normalized_hinge(embeddings, set)
                                            : triplet_hinge(embeddings, set, distance);
}

}  // namespace

LossValue tea_loss(const Eigen::MatrixXd& embeddings, const TripletSet& triplets,
                   DistanceMetric distance) {
  return hinge(embeddings, triplets, distance);
}

LossValue crl_loss(const Eigen::MatrixXd& embeddings, const TripletSet& triplets,
                   DistanceMetric distance) {
  return hinge(embeddings, triplets, distance);
}

CombinedLoss dcl_loss(const LossValue& dsl, const LossValue& tea, double f_weight) {
  if (f_weight < 0.0 || !std::isfinite(f_weight)) {
    throw ContractViolation("dcl_loss: metric-loss weight must be finite and >= 0");
  }
  CombinedLoss out;
  out.value = dsl.value + f_weight * tea.value;
  out.logit_grad = dsl.grad;
  out.embedding_grad = f_weight * tea.grad;
  return out;
}

}  // namespace dcl
