#pragma once

#include <cstdint>
#include <iosfwd>
#include <span>
#include <string>
#include <vector>

#include <Eigen/Dense>

namespace dcl {

enum class Activation : std::uint32_t { Identity = 0, Relu = 1 };

/// Affine layer y = act(x W^T + b) over row-major sample batches, with
/// gradient buffers shaped like the parameters.
struct DenseLayer {
  Eigen::MatrixXd weight;  // out x in
  Eigen::VectorXd bias;    // out
  Activation activation = Activation::Identity;
  Eigen::MatrixXd grad_weight;
  Eigen::VectorXd grad_bias;

  DenseLayer() = default;
  DenseLayer(Eigen::Index in, Eigen::Index out, Activation act);

  Eigen::Index in_dim() const noexcept { return weight.cols(); }
  Eigen::Index out_dim() const noexcept { return weight.rows(); }

  friend bool operator==(const DenseLayer& a, const DenseLayer& b) {
    return a.activation == b.activation && a.weight == b.weight && a.bias == b.bias;
  }
};

struct ModelShape {
  int input_dim = 32;
  std::vector<int> hidden = {64};
  int embedding_dim = 64;
  std::vector<int> classes_per_attribute;  // one entry per attribute
};

/// Activations kept from forward() for an exact backward().
struct ForwardCache {
  std::vector<Eigen::MatrixXd> trunk_inputs;  // input to each trunk layer
  std::vector<Eigen::MatrixXd> trunk_preact;  // x W^T + b of each trunk layer
  Eigen::MatrixXd trunk_output;
  std::vector<Eigen::MatrixXd> embeddings;    // per attribute, samples x dim
  std::vector<Eigen::MatrixXd> logits;        // per attribute, samples x classes
  std::uint64_t parameter_version = 0;
};

/// Named view over one parameter tensor and its gradient.
struct ParameterView {
  std::string name;
  std::span<double> value;
  std::span<double> grad;
};

/// Shared ReLU trunk, then per attribute a linear embedding layer and a
/// linear classification head.
class DenseNet {
 public:
  DenseNet() = default;
  DenseNet(std::vector<DenseLayer> trunk, std::vector<DenseLayer> embeddings,
           std::vector<DenseLayer> heads);

  /// Uniform init in [-a, a], a = sqrt(6 / (fan_in + fan_out)); zero biases.
  static DenseNet create(const ModelShape& shape, std::uint64_t seed);

  ForwardCache forward(const Eigen::MatrixXd& inputs) const;

  /// Accumulates parameter gradients. `embedding_grads` may be empty, or hold
  /// zero-sized matrices for attributes without a metric-learning term.
  /// Throws ContractViolation on a cache from different parameters.
  void backward(const ForwardCache& cache, std::span<const Eigen::MatrixXd> logit_grads,
                std::span<const Eigen::MatrixXd> embedding_grads);

  /// theta <- theta - lr * (grad + weight_decay * theta), then zero gradients.
  void sgd_update(double learning_rate, double weight_decay);
  void zero_grad();

  std::vector<ParameterView> parameters();

  std::size_t num_attributes() const noexcept { return heads_.size(); }
  Eigen::Index input_dim() const;
  const std::vector<DenseLayer>& trunk() const noexcept { return trunk_; }
  const std::vector<DenseLayer>& embeddings() const noexcept { return embeddings_; }
  const std::vector<DenseLayer>& heads() const noexcept { return heads_; }
  std::uint64_t parameter_version() const noexcept { return version_; }

  /// Marks externally modified parameters so older caches are rejected.
  void touch() noexcept { ++version_; }

  friend bool operator==(const DenseNet& a, const DenseNet& b) {
    return a.trunk_ == b.trunk_ && a.embeddings_ == b.embeddings_ && a.heads_ == b.heads_;
  }

 private:
  void check_shapes() const;

  std::vector<DenseLayer> trunk_;
  std::vector<DenseLayer> embeddings_;
  std::vector<DenseLayer> heads_;
  std::uint64_t version_ = 0;
};

// Checkpoint format, version 1, all integers little-endian uint32, all reals
// IEEE-754 binary64 little-endian:
//
//   magic        8 bytes  "DCLNET\0\1"
//   version      u32      1
//   trunk_count  u32
//   trunk_count x layer
//   attr_count   u32
//   attr_count x (embedding layer, head layer)
//
//   layer := activation u32, out u32, in u32,
//            out*in weights (row-major), out biases
void save_checkpoint(const DenseNet& net, std::ostream& out);
DenseNet load_checkpoint(std::istream& in);
void save_checkpoint(const DenseNet& net, const std::string& path);
DenseNet load_checkpoint(const std::string& path);

}  // namespace dcl
