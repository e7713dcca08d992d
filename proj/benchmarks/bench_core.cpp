#include <random>

#include <benchmark/benchmark.h>

#include "dcl/batch_composer.hpp"
#include "dcl/losses.hpp"
#include "dcl/mining.hpp"
#include "dcl/model.hpp"

namespace {

Eigen::MatrixXd gaussian(Eigen::Index rows, Eigen::Index cols, std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  std::normal_distribution<double> n(0.0, 1.0);
  Eigen::MatrixXd m(rows, cols);
  for (Eigen::Index i = 0; i < m.size(); ++i) m.data()[i] = n(rng);
  return m;
}

std::vector<int> labels(std::size_t n, int every) {
  std::vector<int> y(n, 0);
  for (std::size_t i = 0; i < n; i += static_cast<std::size_t>(every)) y[i] = 1;
  return y;
}

void BM_DslLoss(benchmark::State& state) {
  const auto n = state.range(0);
  const auto logits = gaussian(n, 2, 1);
  const auto y = labels(static_cast<std::size_t>(n), 5);
  const std::vector<double> w(static_cast<std::size_t>(n), 1.0);
  for (auto _ : state) benchmark::DoNotOptimize(dcl::dsl_loss(logits, y, w, static_cast<std::size_t>(n)));
}
BENCHMARK(BM_DslLoss)->Arg(128)->Arg(512);

void BM_TeaLoss(benchmark::State& state) {
  const auto k = static_cast<std::size_t>(state.range(0));
  const auto emb = gaussian(128, 64, 2);
  std::vector<std::size_t> anchors, pos, neg;
  for (std::size_t i = 0; i < k; ++i) {
    anchors.push_back(i);
    pos.push_back(i + 1);
    neg.push_back(64 + i);
  }
  const auto t = dcl::build_triplets(anchors, pos, neg, 0.2);
  const auto metric = static_cast<dcl::DistanceMetric>(state.range(1));
  for (auto _ : state) benchmark::DoNotOptimize(dcl::tea_loss(emb, t, metric));
  state.counters["triplets"] = static_cast<double>(t.size());
}
BENCHMARK(BM_TeaLoss)->Args({10, 0})->Args({25, 0})->Args({25, 2});

void BM_Mining(benchmark::State& state) {
  const auto logits = gaussian(128, 2, 3);
  const auto y = labels(128, 4);
  const dcl::MiningInput in{logits, y, 1};
  for (auto _ : state) {
    auto a = dcl::mine_easy_anchors(in, 25);
    auto h = dcl::mine_hard_samples(in, 25);
    benchmark::DoNotOptimize(dcl::build_triplets(a, h.positives, h.negatives, 0.2));
  }
}
BENCHMARK(BM_Mining);

void BM_Compose(benchmark::State& state) {
  const auto attrs = static_cast<std::size_t>(state.range(0));
  dcl::LabelMatrix y(attrs, labels(128, 10));
  const std::vector<dcl::ClassDistribution> targets(attrs, dcl::ClassDistribution::from_ratios({1.0, 1.0}, {1, 0}));
  std::uint64_t seed = 0;
  for (auto _ : state) benchmark::DoNotOptimize(dcl::compose(y, targets, ++seed));
}
BENCHMARK(BM_Compose)->Arg(1)->Arg(20);

void BM_ForwardBackward(benchmark::State& state) {
  dcl::ModelShape shape;
  shape.classes_per_attribute.assign(static_cast<std::size_t>(state.range(0)), 2);
  auto net = dcl::DenseNet::create(shape, 1);
  const auto x = gaussian(128, shape.input_dim, 4);
  std::vector<Eigen::MatrixXd> lg(shape.classes_per_attribute.size(), gaussian(128, 2, 5));
  std::vector<Eigen::MatrixXd> eg(shape.classes_per_attribute.size(), gaussian(128, 64, 6));
  for (auto _ : state) {
    const auto cache = net.forward(x);
    net.backward(cache, lg, eg);
    net.zero_grad();
  }
}
BENCHMARK(BM_ForwardBackward)->Arg(1)->Arg(20);

}  // namespace

BENCHMARK_MAIN();
