#include <doctest.h>

#include <cmath>
#include <fstream>
#include <iterator>
#include <map>
#include <random>

#include "dcl/errors.hpp"
#include "dcl/mining.hpp"
#include "dcl/trainer.hpp"
#include "oracles.hpp"

using namespace dcl;

namespace {

Dataset small_data(std::uint64_t seed = 3, std::vector<double> ratios = {1.0, 4.0, 9.0}) {
  SyntheticSpec s;
  s.ratios = std::move(ratios);
  s.n_samples = 600;
  s.feature_dim = 8;
  s.seed = seed;
  return generate_synthetic(s);
}

RunConfig small_config(Method m, int epochs = 4) {
  auto c = RunConfig::preset(m, epochs);
  c.hidden = {16};
  c.embedding_dim = 8;
  c.batch_size = 32;
  c.learning_rate = 0.05;
  return c;
}

std::string slurp(const std::filesystem::path& p) {
  std::ifstream in(p, std::ios::binary);
  return {std::istreambuf_iterator<char>(in), std::istreambuf_iterator<char>()};
}

std::vector<std::size_t> random_batch(std::mt19937_64& rng, const std::vector<std::size_t>& pool,
                                      std::size_t size) {
  auto b = pool;
  std::shuffle(b.begin(), b.end(), rng);
  b.resize(size);
  return b;
}

std::vector<int> column(const std::vector<int>& labels, const std::vector<std::size_t>& batch) {
  std::vector<int> out;
  for (auto i : batch) out.push_back(labels[i]);
  return out;
}

Eigen::MatrixXd rows(const Eigen::MatrixXd& m, const std::vector<std::size_t>& batch) {
  Eigen::MatrixXd out(static_cast<Eigen::Index>(batch.size()), m.cols());
  for (std::size_t i = 0; i < batch.size(); ++i) {
    out.row(static_cast<Eigen::Index>(i)) = m.row(static_cast<Eigen::Index>(batch[i]));
  }
  return out;
}

}  // namespace

TEST_CASE("presets configure the schedulers") {
  const auto dcl = RunConfig::preset(Method::DCL, 60);
  CHECK(dcl.sampling.kind == SchedulerKind::Convex);
  CHECK(dcl.loss.base.kind == SchedulerKind::Composite);
  CHECK(dcl.loss.self_learn_point == 0.3);
  CHECK(dcl.loss.self_learn_ratio == 0.01);
  CHECK(dcl.k == 25);
  CHECK(dcl.margin == 0.2);
  CHECK(dcl.anchors == AnchorMode::Easy);
  for (int l = 0; l <= 60; ++l) {
    CHECK(eval_scheduler(RunConfig::preset(Method::CE, 60).sampling, l) == 1.0);
    CHECK(eval_loss_weight(RunConfig::preset(Method::CE, 60).loss, l) == 0.0);
    CHECK(eval_scheduler(RunConfig::preset(Method::SelectiveLearning, 60).sampling, l) == 0.0);
    CHECK(eval_loss_weight(RunConfig::preset(Method::CRL_I, 60).loss, l) == 0.01);
  }
  CHECK(RunConfig::preset(Method::CRL_I).anchors == AnchorMode::AllMinority);
}

TEST_CASE("config json: round trip, defaults and errors") {
  auto c = RunConfig::preset(Method::DCL, 40);
  c.learning_rate = 0.1;
  c.distance = DistanceMetric::Cosine;
  c.hidden = {32, 16};
  c.seed = 77;
  const auto back = run_config_from_json(run_config_to_json(c));
  CHECK(run_config_to_json(back) == run_config_to_json(c));
  CHECK(back.sampling.total_epochs == 40);
  CHECK(back.hidden == std::vector<int>{32, 16});

  const auto crl = run_config_from_json(R"({"method": "crl", "epochs": 10})");
  CHECK(crl.method == Method::CRL_I);
  CHECK(run_config_to_json(run_config_from_json(run_config_to_json(crl))) == run_config_to_json(crl));

  const auto fixed = run_config_from_json(R"({"method": "dcl", "f": "constant:0.5", "epochs": 10})");
  for (int l = 0; l <= 10; ++l) CHECK(eval_loss_weight(fixed.loss, l) == 0.5);

  const auto concave = run_config_from_json(R"({"g": "concave:0.9", "epochs": 5})");
  CHECK(concave.sampling.lambda == 0.9);

  CHECK_THROWS_AS(run_config_from_json(R"({"learning_rate": 0.1})"), ConfigError);
  CHECK_THROWS_AS(run_config_from_json(R"({"lr": -1})"), ConfigError);
  CHECK_THROWS_AS(run_config_from_json(R"({"lr": "fast"})"), ConfigError);
  CHECK_THROWS_AS(run_config_from_json(R"({"method": "svm"})"), ConfigError);
  CHECK_THROWS_AS(run_config_from_json(R"({"p": 2})"), ConfigError);
  CHECK_THROWS_AS(run_config_from_json(R"({"g": "concave:1.5"})"), ConfigError);
  CHECK_THROWS_AS(run_config_from_json("[1, 2]"), ConfigError);
  CHECK_THROWS_AS(run_config_from_json("{"), ConfigError);
}

TEST_CASE("CE preset matches straight-line cross-entropy on random batches") {
  const auto data = small_data();
  Trainer t(small_config(Method::CE), data);
  std::mt19937_64 rng(1);
  const auto train = data.indices(Split::Train);
  for (int b = 0; b < 100; ++b) {
    const auto batch = random_batch(rng, train, 8 + rng() % 40);
    const auto ref = oracle::naive_forward(t.net(), rows(data.features, batch));
    double expected = 0.0;
    for (std::size_t a = 0; a < data.num_attributes(); ++a) {
      expected += oracle::weighted_ce(ref.logits[a], column(data.labels[a], batch),
                                      std::vector<double>(batch.size(), 1.0), batch.size());
    }
    const auto r = t.step(batch, static_cast<int>(b % 4), static_cast<std::size_t>(b));
    REQUIRE(r.loss == doctest::Approx(expected).epsilon(1e-12));
    REQUIRE(r.tea == 0.0);
  }
}

TEST_CASE("SL preset matches balanced selection plus straight-line cross-entropy") {
  const auto data = small_data();
  Trainer t(small_config(Method::SelectiveLearning), data);
  std::mt19937_64 rng(2);
  const auto train = data.indices(Split::Train);
  for (int b = 0; b < 100; ++b) {
    const auto batch = random_batch(rng, train, 16 + rng() % 48);
    const auto plan = t.plan_for(batch, 0, static_cast<std::size_t>(b));
    const auto ref = oracle::naive_forward(t.net(), rows(data.features, batch));
    double expected = 0.0;
    for (std::size_t a = 0; a < data.num_attributes(); ++a) {
      const auto y = column(data.labels[a], batch);
      const auto n1 = std::count(y.begin(), y.end(), 1);
      const auto n0 = static_cast<std::int64_t>(y.size()) - n1;
      // Balanced target: both present classes keep min(n0, n1) samples at weight 1.
      std::vector<double> w(y.size(), 0.0);
      std::int64_t kept[2] = {0, 0};
      for (std::size_t i = 0; i < y.size(); ++i) {
        const double pw = plan.weights[a][i];
        REQUIRE((pw == 0.0 || pw == 1.0));
        kept[y[i]] += pw > 0.0;
        w[i] = pw;
      }
      if (n0 > 0 && n1 > 0) {
        REQUIRE(kept[0] == std::min(n0, n1));
        REQUIRE(kept[1] == std::min(n0, n1));
      } else {
        REQUIRE(kept[0] + kept[1] == static_cast<std::int64_t>(y.size()));
      }
      expected += oracle::weighted_ce(ref.logits[a], y, w, batch.size());
    }
    const auto r = t.step(batch, 0, static_cast<std::size_t>(b));
    REQUIRE(r.loss == doctest::Approx(expected).epsilon(1e-12));
  }
}

TEST_CASE("CRL-I preset equals unit-weight cross-entropy plus eps times the hinge") {
  const auto data = small_data();
  auto cfg = small_config(Method::CRL_I);
  cfg.k = 5;
  Trainer t(cfg, data);
  std::mt19937_64 rng(3);
  const auto train = data.indices(Split::Train);
  std::size_t with_triplets = 0;
  for (int b = 0; b < 100; ++b) {
    const auto batch = random_batch(rng, train, 16 + rng() % 48);
    const auto ref = oracle::naive_forward(t.net(), rows(data.features, batch));
    double expected = 0.0;
    for (std::size_t a = 0; a < data.num_attributes(); ++a) {
      const auto y = column(data.labels[a], batch);
      const int minority = t.minority_classes()[a];
      expected += oracle::weighted_ce(ref.logits[a], y, std::vector<double>(y.size(), 1.0), batch.size());
      std::vector<std::size_t> anchors;
      std::vector<std::pair<double, std::size_t>> pos, neg;
      for (std::size_t i = 0; i < y.size(); ++i) {
        const double pm = oracle::softmax_prob(ref.logits[a], static_cast<Eigen::Index>(i), minority);
        if (y[i] == minority) {
          anchors.push_back(i);
          pos.emplace_back(1.0 - pm, i);
        } else {
          neg.emplace_back(pm, i);
        }
      }
      std::vector<oracle::Triple> triples;
      for (auto an : anchors) {
        for (auto p : oracle::sorted_top(pos, 5)) {
          if (p == an) continue;
          for (auto q : oracle::sorted_top(neg, 5)) triples.push_back({an, p, q});
        }
      }
      with_triplets += !triples.empty();
      expected += 0.01 * oracle::hinge_mean(ref.embeddings[a], triples, cfg.margin);
    }
    const auto r = t.step(batch, 1, static_cast<std::size_t>(b));
    REQUIRE(r.loss == doctest::Approx(expected).epsilon(1e-12));
  }
  CHECK(with_triplets > 100);
}

TEST_CASE("DCL with g == 1 and f == 0 follows the CE trajectory exactly") {
  const auto data = small_data(5, {1.0, 1.0});
  auto ce = small_config(Method::CE, 3);
  auto dcl = small_config(Method::DCL, 3);
  dcl.sampling = SchedulerFn::constant(3, 1.0);
  dcl.loss = LossScheduler::fixed(3, 0.0);
  Trainer a(ce, data), b(dcl, data);
  for (int l = 0; l < 3; ++l) {
    a.train_epoch(l);
    b.train_epoch(l);
    REQUIRE(a.net() == b.net());
  }
}

TEST_CASE("one epoch on a three-sample batch matches the hand computation") {
  // Two attributes; train rows 0-2, validation rows 3-4.
  Dataset d;
  d.features = Eigen::MatrixXd::Ones(5, 2);
  d.labels = {{0, 0, 1, 0, 1}, {1, 0, 0, 1, 0}};
  d.feature_names = {"x0", "x1"};
  d.attribute_names = {"a", "b"};
  d.num_classes = {2, 2};
  d.split = {Split::Train, Split::Train, Split::Train, Split::Val, Split::Val};
  auto cfg = RunConfig::preset(Method::DCL, 1);
  cfg.batch_size = 3;
  cfg.hidden = {3};
  cfg.embedding_dim = 2;
  cfg.learning_rate = 0.3;
  cfg.weight_decay = 0.0;
  Trainer t(cfg, d);
  for (auto& p : t.net().parameters()) {
    for (auto& v : p.value) v = 0.0;
  }
  t.net().touch();
  const auto report = t.train_epoch(0);
  // Zero parameters: p = 1/2 everywhere, g(0) = 1 keeps the batch as is, and
  // each attribute has a single minority sample, so there are no triplets.
  CHECK(report.f == doctest::Approx(1.01));
  CHECK(report.triplets == 0);
  CHECK(report.mean_loss == doctest::Approx(2.0 * std::log(2.0)).epsilon(1e-15));
  // Only head biases move: db_c = (1/3) sum_i (1/2 - [y_i == c]).
  for (std::size_t a = 0; a < 2; ++a) {
    const auto& bias = t.net().heads()[a].bias;
    CHECK(bias(0) == doctest::Approx(0.3 / 6.0).epsilon(1e-15));
    CHECK(bias(1) == doctest::Approx(-0.3 / 6.0).epsilon(1e-15));
    CHECK(t.net().heads()[a].weight.isZero(0.0));
  }
  CHECK(t.net().trunk()[0].weight.isZero(0.0));
}

TEST_CASE("loss weight is exactly eps in the self-learning regime") {
  const auto data = small_data();
  auto cfg = small_config(Method::DCL, 10);
  cfg.k = 5;
  Trainer t(cfg, data);
  const auto train = data.indices(Split::Train);
  for (int l = 0; l < 10; ++l) {
    const std::vector<std::size_t> batch(train.begin(), train.begin() + 64);
    const auto r = t.step(batch, l, 0);
    const double f = t.loss_weight(l);
    if (l >= 3) REQUIRE(f == 0.01);
    REQUIRE(r.loss == doctest::Approx(r.dsl + f * r.tea).epsilon(1e-12));
  }
}

TEST_CASE("plan_for: identity at g == 1, balanced selection otherwise") {
  const auto data = small_data();
  auto cfg = small_config(Method::DCL, 10);
  Trainer t(cfg, data);
  const auto train = data.indices(Split::Train);
  const std::vector<std::size_t> batch(train.begin(), train.begin() + 64);
  for (const auto& w : t.plan_for(batch, 0, 0).weights) {
    for (double v : w) CHECK(v == 1.0);
  }
  // Late epoch: the 1:9 attribute is subsampled.
  const auto late = t.plan_for(batch, 9, 0);
  CHECK(std::count(late.weights[2].begin(), late.weights[2].end(), 0.0) > 0);
  CHECK(t.plan_for(batch, 9, 0).weights == late.weights);
}

TEST_CASE("dataset-level preset weights") {
  const auto data = small_data();
  const auto train = data.indices(Split::Train);
  for (auto m : {Method::OverSample, Method::DownSample, Method::CostSensitive}) {
    const auto w = preset_sample_weights(m, data, 1);
    REQUIRE(w.size() == data.num_attributes());
    for (std::size_t a = 0; a < data.num_attributes(); ++a) {
      const auto counts = data.class_counts(a, Split::Train);
      const auto n_max = *std::max_element(counts.begin(), counts.end());
      const auto n_min = *std::min_element(counts.begin(), counts.end());
      std::map<int, double> total;
      std::map<int, std::int64_t> nonzero;
      for (std::size_t i = 0; i < data.num_samples(); ++i) {
        if (data.split[i] != Split::Train) {
          REQUIRE(w[a][i] == 0.0);
          continue;
        }
        total[data.labels[a][i]] += w[a][i];
        nonzero[data.labels[a][i]] += w[a][i] > 0.0;
      }
      for (int c = 0; c < 2; ++c) {
        if (m == Method::OverSample) CHECK(total[c] == static_cast<double>(n_max));
        if (m == Method::DownSample) CHECK(nonzero[c] == n_min);
        if (m == Method::CostSensitive) {
          CHECK(total[c] == doctest::Approx(static_cast<double>(train.size()) / 2.0));
        }
      }
    }
  }
  CHECK(preset_sample_weights(Method::DCL, data, 1).empty());
}

TEST_CASE("run: zero epochs reports the untrained model") {
  const auto data = small_data();
  const auto dir = oracle::temp_dir("run_zero");
  const auto report = run(small_config(Method::CE, 0), data, dir.string());
  CHECK(report.epochs.empty());
  CHECK(report.best_epoch == 0);
  CHECK(report.final_net == report.best_net);
  for (const char* f : {"config.json", "metrics.csv", "epochs.csv", "summary.json", "final.ckpt", "best.ckpt"}) {
    CHECK(std::filesystem::exists(dir / f));
  }
  const auto metrics = slurp(dir / "metrics.csv");
  CHECK(metrics.rfind("epoch,attribute,mA,biased\n0,", 0) == 0);
}

TEST_CASE("run: identical configs give identical logs and checkpoints") {
  const auto data = small_data();
  auto cfg = small_config(Method::DCL, 3);
  cfg.k = 5;
  const auto a = oracle::temp_dir("run_det_a");
  const auto b = oracle::temp_dir("run_det_b");
  const auto ra = run(cfg, data, a.string());
  const auto rb = run(cfg, data, b.string());
  CHECK(ra.final_net == rb.final_net);
  for (const char* f : {"metrics.csv", "epochs.csv", "config.json", "final.ckpt", "best.ckpt"}) {
    CHECK(slurp(a / f) == slurp(b / f));
  }
  CHECK(ra.epochs.size() == 3);
  CHECK(ra.best_test.balanced.size() == data.num_attributes());

  cfg.seed = 2;
  const auto rc = run(cfg, data);
  CHECK_FALSE(rc.final_net == ra.final_net);
}

TEST_CASE("run: config echo reproduces the run") {
  const auto data = small_data();
  auto cfg = small_config(Method::DCL, 2);
  cfg.distance = DistanceMetric::Cosine;
  const auto dir = oracle::temp_dir("run_echo");
  const auto first = run(cfg, data, dir.string());
  const auto echoed = run_config_from_json(slurp(dir / "config.json"));
  CHECK(run(echoed, data).final_net == first.final_net);
}

TEST_CASE("trainer rejects bad input") {
  const auto data = small_data();
  Trainer t(small_config(Method::DCL, 2), data);
  CHECK_THROWS_AS(t.train_epoch(2), OutOfRangeError);
  CHECK_THROWS_AS(t.step(std::vector<std::size_t>{}, 0, 0), ContractViolation);

  t.net().parameters()[0].value[0] = std::nan("");
  t.net().touch();
  const auto train = data.indices(Split::Train);
  const std::vector<std::size_t> batch(train.begin(), train.begin() + 8);
  CHECK_THROWS_AS(t.step(batch, 0, 0), NumericError);

  auto bad = small_config(Method::DCL, 2);
  bad.batch_size = 0;
  CHECK_THROWS_AS(Trainer(bad, data), ConfigError);
  auto horizon = small_config(Method::DCL, 2);
  horizon.epochs = 5;
  CHECK_THROWS_AS(Trainer(horizon, data), ConfigError);
}
