#include "dcl/model.hpp"

#include <cmath>
#include <random>

#include "dcl/errors.hpp"
#include "dcl/seed.hpp"

namespace dcl {

DenseLayer::DenseLayer(Eigen::Index in, Eigen::Index out, Activation act)
    : weight(Eigen::MatrixXd::Zero(out, in)),
      bias(Eigen::VectorXd::Zero(out)),
      activation(act),
      grad_weight(Eigen::MatrixXd::Zero(out, in)),
      grad_bias(Eigen::VectorXd::Zero(out)) {}

namespace {

void init_uniform(DenseLayer& layer, std::mt19937_64& rng) {
  const double a = std::sqrt(6.0 / static_cast<double>(layer.in_dim() + layer.out_dim()));
  std::uniform_real_distribution<double> dist(-a, a);
  // Row-major fill order keeps init independent of Eigen's storage order.
  for (Eigen::Index r = 0; r < layer.weight.rows(); ++r) {
    for (Eigen::Index c = 0; c < layer.weight.cols(); ++c) layer.weight(r, c) = dist(rng);
  }
}

Eigen::MatrixXd affine(const DenseLayer& layer, const Eigen::MatrixXd& x) {
  Eigen::MatrixXd z = x * layer.weight.transpose();
  z.rowwise() += layer.bias.transpose();
  return z;
}

Eigen::MatrixXd activate(Activation act, const Eigen::MatrixXd& z) {
  if (act == Activation::Relu) return z.cwiseMax(0.0);
  return z;
}

// Accumulates parameter grads for y = x W^T + b and returns dL/dx.
Eigen::MatrixXd affine_backward(DenseLayer& layer, const Eigen::MatrixXd& x,
                                const Eigen::MatrixXd& dz) {
  layer.grad_weight.noalias() += dz.transpose() * x;
  layer.grad_bias += dz.colwise().sum().transpose();
  return dz * layer.weight;
}

void ensure_grads(DenseLayer& layer) {
  if (layer.grad_weight.rows() != layer.weight.rows() ||
      layer.grad_weight.cols() != layer.weight.cols()) {
    layer.grad_weight = Eigen::MatrixXd::Zero(layer.weight.rows(), layer.weight.cols());
  }
  if (layer.grad_bias.size() != layer.bias.size()) {
    layer.grad_bias = Eigen::VectorXd::Zero(layer.bias.size());
  }
}

}  // namespace

DenseNet::DenseNet(std::vector<DenseLayer> trunk, std::vector<DenseLayer> embeddings,
                   std::vector<DenseLayer> heads)
    : trunk_(std::move(trunk)), embeddings_(std::move(embeddings)), heads_(std::move(heads)) {
  for (auto* group : {&trunk_, &embeddings_, &heads_}) {
    for (auto& layer : *group) ensure_grads(layer);
  }
  check_shapes();
}

DenseNet DenseNet::create(const ModelShape& shape, std::uint64_t seed) {
  if (shape.input_dim <= 0 || shape.embedding_dim <= 0 ||
      shape.classes_per_attribute.empty()) {
    throw ContractViolation("model shape needs positive dims and at least one attribute");
  }
  std::mt19937_64 rng(derive_seed(seed, {0x6d6f64656cULL}));
  std::vector<DenseLayer> trunk;
  Eigen::Index width = shape.input_dim;
  for (int h : shape.hidden) {
    if (h <= 0) throw ContractViolation("hidden width must be positive");
    trunk.emplace_back(width, h, Activation::Relu);
    init_uniform(trunk.back(), rng);
    width = h;
  }
  std::vector<DenseLayer> embeddings, heads;
  for (int classes : shape.classes_per_attribute) {
    if (classes < 2) throw ContractViolation("each attribute needs >= 2 classes");
    embeddings.emplace_back(width, shape.embedding_dim, Activation::Identity);
    init_uniform(embeddings.back(), rng);
    heads.emplace_back(shape.embedding_dim, classes, Activation::Identity);
    init_uniform(heads.back(), rng);
  }
  return DenseNet(std::move(trunk), std::move(embeddings), std::move(heads));
}

void DenseNet::check_shapes() const {
  if (embeddings_.size() != heads_.size() || heads_.empty()) {
    throw ContractViolation("need one embedding layer and one head per attribute");
  }
  Eigen::Index width = trunk_.empty() ? embeddings_.front().in_dim() : trunk_.front().in_dim();
  for (const auto& layer : trunk_) {
    if (layer.in_dim() != width || layer.bias.size() != layer.out_dim()) {
      throw ContractViolation("trunk layer shapes are inconsistent");
    }
    width = layer.out_dim();
  }
  for (std::size_t a = 0; a < heads_.size(); ++a) {
    const auto& e = embeddings_[a];
    const auto& h = heads_[a];
    if (e.in_dim() != width || h.in_dim() != e.out_dim() ||
        e.bias.size() != e.out_dim() || h.bias.size() != h.out_dim()) {
      throw ContractViolation("attribute " + std::to_string(a) + " layer shapes are inconsistent");
    }
  }
}

Eigen::Index DenseNet::input_dim() const {
  return trunk_.empty() ? embeddings_.front().in_dim() : trunk_.front().in_dim();
}

ForwardCache DenseNet::forward(const Eigen::MatrixXd& inputs) const {
  if (inputs.cols() != input_dim()) {
    throw ContractViolation("input has " + std::to_string(inputs.cols()) +
                            " features, model expects " + std::to_string(input_dim()));
  }
  ForwardCache cache;
  cache.parameter_version = version_;
  Eigen::MatrixXd x = inputs;
  for (const auto& layer : trunk_) {
    cache.trunk_inputs.push_back(x);
    cache.trunk_preact.push_back(affine(layer, x));
    x = activate(layer.activation, cache.trunk_preact.back());
  }
  for (std::size_t a = 0; a < heads_.size(); ++a) {
    cache.embeddings.push_back(activate(embeddings_[a].activation, affine(embeddings_[a], x)));
    cache.logits.push_back(activate(heads_[a].activation, affine(heads_[a], cache.embeddings.back())));
  }
  cache.trunk_output = std::move(x);
  return cache;
}

void DenseNet::backward(const ForwardCache& cache,
                        std::span<const Eigen::MatrixXd> logit_grads,
                        std::span<const Eigen::MatrixXd> embedding_grads) {
  if (cache.parameter_version != version_) {
    throw ContractViolation("forward cache is stale: parameters changed since forward()");
  }
  if (logit_grads.size() != heads_.size() ||
      (!embedding_grads.empty() && embedding_grads.size() != heads_.size())) {
    throw ContractViolation("need one gradient per attribute");
  }
  const auto batch = cache.trunk_output.rows();
  Eigen::MatrixXd d_trunk = Eigen::MatrixXd::Zero(batch, cache.trunk_output.cols());
  for (std::size_t a = 0; a < heads_.size(); ++a) {
    const auto& dl = logit_grads[a];
    if (dl.rows() != batch || dl.cols() != heads_[a].out_dim()) {
      throw ContractViolation("logit gradient shape mismatch for attribute " + std::to_string(a));
    }
    Eigen::MatrixXd d_head = dl;
    if (heads_[a].activation == Activation::Relu) {
      d_head = d_head.cwiseProduct((cache.logits[a].array() > 0.0).cast<double>().matrix());
    }
    Eigen::MatrixXd d_emb = affine_backward(heads_[a], cache.embeddings[a], d_head);
    if (!embedding_grads.empty() && embedding_grads[a].size() != 0) {
      if (embedding_grads[a].rows() != batch || embedding_grads[a].cols() != d_emb.cols()) {
        throw ContractViolation("embedding gradient shape mismatch for attribute " +
                                std::to_string(a));
      }
      d_emb += embedding_grads[a];
    }
    if (embeddings_[a].activation == Activation::Relu) {
      d_emb = d_emb.cwiseProduct((cache.embeddings[a].array() > 0.0).cast<double>().matrix());
    }
    d_trunk += affine_backward(embeddings_[a], cache.trunk_output, d_emb);
  }
  for (std::size_t l = trunk_.size(); l-- > 0;) {
    if (trunk_[l].activation == Activation::Relu) {
      d_trunk = d_trunk.cwiseProduct((cache.trunk_preact[l].array() > 0.0).cast<double>().matrix());
    }
    d_trunk = affine_backward(trunk_[l], cache.trunk_inputs[l], d_trunk);
  }
}

void DenseNet::sgd_update(double learning_rate, double weight_decay) {
  for (auto* group : {&trunk_, &embeddings_, &heads_}) {
    for (auto& layer : *group) {
      layer.weight -= learning_rate * (layer.grad_weight + weight_decay * layer.weight);
      layer.bias -= learning_rate * (layer.grad_bias + weight_decay * layer.bias);
    }
  }
  zero_grad();
  ++version_;
}

void DenseNet::zero_grad() {
  for (auto* group : {&trunk_, &embeddings_, &heads_}) {
    for (auto& layer : *group) {
      layer.grad_weight.setZero();
      layer.grad_bias.setZero();
    }
  }
}

std::vector<ParameterView> DenseNet::parameters() {
  std::vector<ParameterView> views;
  auto add = [&](const std::string& prefix, DenseLayer& layer) {
    views.push_back({prefix + ".weight",
                     {layer.weight.data(), static_cast<std::size_t>(layer.weight.size())},
                     {layer.grad_weight.data(), static_cast<std::size_t>(layer.grad_weight.size())}});
    views.push_back({prefix + ".bias",
                     {layer.bias.data(), static_cast<std::size_t>(layer.bias.size())},
                     {layer.grad_bias.data(), static_cast<std::size_t>(layer.grad_bias.size())}});
  };
  for (std::size_t l = 0; l < trunk_.size(); ++l) add("trunk." + std::to_string(l), trunk_[l]);
  for (std::size_t a = 0; a < heads_.size(); ++a) {
    add("embedding." + std::to_string(a), embeddings_[a]);
    add("head." + std::to_string(a), heads_[a]);
  }
  return views;
}

}  // namespace dcl
