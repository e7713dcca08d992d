#include <doctest.h>

#include <cmath>
#include <fstream>

#include "dcl/data.hpp"
#include "dcl/errors.hpp"
#include "oracles.hpp"

using namespace dcl;

namespace {

SyntheticSpec small_spec(std::vector<double> ratios, std::int64_t n = 1000) {
  SyntheticSpec s;
  s.ratios = std::move(ratios);
  s.n_samples = n;
  s.feature_dim = 8;
  return s;
}

std::int64_t count_label(const std::vector<int>& y, int c) {
  return std::count(y.begin(), y.end(), c);
}

void write_file(const std::filesystem::path& p, const std::string& text) {
  std::ofstream(p, std::ios::binary) << text;
}

}  // namespace

TEST_CASE("log_spaced_ratios") {
  const auto r = log_spaced_ratios(20, 100.0);
  REQUIRE(r.size() == 20);
  CHECK(r.front() == 1.0);
  CHECK(r.back() == doctest::Approx(100.0).epsilon(1e-14));
  for (std::size_t i = 1; i < r.size(); ++i) {
    CHECK(r[i] / r[i - 1] == doctest::Approx(std::pow(100.0, 1.0 / 19.0)).epsilon(1e-12));
  }
  const auto d = default_synthetic_spec();
  CHECK(d.ratios.size() == 20);
  CHECK(d.n_samples == 20000);
  CHECK(d.feature_dim == 32);
}

TEST_CASE("generate_synthetic: exact label counts") {
  const auto data = generate_synthetic(small_spec({1.0, 9.0, 3.0}));
  data.validate();
  CHECK(data.num_samples() == 1000);
  CHECK(data.num_attributes() == 3);
  CHECK(data.feature_dim() == 8);
  CHECK(count_label(data.labels[0], 1) == 500);
  CHECK(count_label(data.labels[1], 1) == 100);
  CHECK(count_label(data.labels[1], 0) == 900);
  CHECK(count_label(data.labels[2], 1) == 250);
  CHECK(data.requested_ratios == std::vector<double>{1.0, 9.0, 3.0});
}

TEST_CASE("generate_synthetic: realized ratio within one sample of the request") {
  const auto ratios = log_spaced_ratios(12, 100.0);
  const auto data = generate_synthetic(small_spec(ratios, 5000));
  for (std::size_t a = 0; a < ratios.size(); ++a) {
    const double minority = static_cast<double>(count_label(data.labels[a], 1));
    CHECK(std::abs(minority - 5000.0 / (1.0 + ratios[a])) <= 1.0);
  }
}

TEST_CASE("generate_synthetic: deterministic in the seed") {
  const auto a = generate_synthetic(small_spec({1.0, 5.0}));
  const auto b = generate_synthetic(small_spec({1.0, 5.0}));
  CHECK(a.features == b.features);
  CHECK(a.labels == b.labels);
  CHECK(a.split == b.split);
  auto other = small_spec({1.0, 5.0});
  other.seed = 2;
  CHECK_FALSE(generate_synthetic(other).features == a.features);
}

TEST_CASE("generate_synthetic: stratified 70/10/20 split") {
  const auto data = generate_synthetic(small_spec({1.0, 9.0}, 2000));
  CHECK(data.indices(Split::Train).size() == 1400);
  CHECK(data.indices(Split::Val).size() == 200);
  CHECK(data.indices(Split::Test).size() == 400);
  const auto train = data.class_counts(1, Split::Train);
  CHECK(train[1] == 140);
  CHECK(data.class_counts(1, Split::Test)[1] == 40);
}

TEST_CASE("generate_synthetic: separation moves class means apart") {
  auto spec = small_spec({1.0}, 4000);
  spec.class_separation = 3.0;
  const auto data = generate_synthetic(spec);
  Eigen::VectorXd m0 = Eigen::VectorXd::Zero(8), m1 = Eigen::VectorXd::Zero(8);
  for (std::size_t i = 0; i < data.num_samples(); ++i) {
    const auto row = data.features.row(static_cast<Eigen::Index>(i)).transpose();
    (data.labels[0][i] == 0 ? m0 : m1) += row;
  }
  m0 /= 2000.0;
  m1 /= 2000.0;
  CHECK((m1 - m0).norm() == doctest::Approx(3.0).epsilon(0.05));
}

TEST_CASE("generate_synthetic: zero separation leaves nothing to learn") {
  // Nearest-class-mean on train, scored on test: balanced accuracy near 0.5.
  double total = 0.0;
  const int seeds = 10;
  for (int s = 0; s < seeds; ++s) {
    auto spec = small_spec({4.0}, 2000);
    spec.class_separation = 0.0;
    spec.seed = static_cast<std::uint64_t>(100 + s);
    const auto data = generate_synthetic(spec);
    Eigen::VectorXd mean[2] = {Eigen::VectorXd::Zero(8), Eigen::VectorXd::Zero(8)};
    double n[2] = {0, 0};
    for (auto i : data.indices(Split::Train)) {
      const int y = data.labels[0][i];
      mean[y] += data.features.row(static_cast<Eigen::Index>(i)).transpose();
      n[y] += 1;
    }
    mean[0] /= n[0];
    mean[1] /= n[1];
    double correct[2] = {0, 0}, seen[2] = {0, 0};
    for (auto i : data.indices(Split::Test)) {
      const Eigen::VectorXd x = data.features.row(static_cast<Eigen::Index>(i)).transpose();
      const int pred = (x - mean[1]).squaredNorm() < (x - mean[0]).squaredNorm() ? 1 : 0;
      const int y = data.labels[0][i];
      seen[y] += 1;
      correct[y] += pred == y;
    }
    total += 0.5 * (correct[0] / seen[0] + correct[1] / seen[1]);
  }
  CHECK(std::abs(total / seeds - 0.5) < 0.05);
}

TEST_CASE("generate_synthetic: infeasible specs are rejected") {
  CHECK_THROWS_AS(generate_synthetic(small_spec({0.5})), ConfigError);
  CHECK_THROWS_AS(generate_synthetic(small_spec({})), ConfigError);
  CHECK_THROWS_AS(generate_synthetic(small_spec({500.0}, 1000)), ConfigError);
}

TEST_CASE("csv: export then import is lossless") {
  const auto dir = oracle::temp_dir("data_roundtrip");
  const auto data = generate_synthetic(small_spec({1.0, 7.0}, 300));
  const auto path = (dir / "d.csv").string();
  write_csv(data, path);
  CsvSchema schema;
  schema.attribute_columns = data.attribute_names;
  const auto back = load_csv(path, schema);
  CHECK(back.features == data.features);
  CHECK(back.labels == data.labels);
  CHECK(back.split == data.split);
  CHECK(back.feature_names == data.feature_names);

  write_manifest(data, small_spec({1.0, 7.0}, 300), manifest_path_for(path));
  const auto m = read_manifest(manifest_path_for(path));
  CHECK(m.ratios == std::vector<double>{1.0, 7.0});
  CHECK(m.attribute_names == data.attribute_names);
  const auto auto_loaded = load_dataset(path);
  CHECK(auto_loaded.features == data.features);
  CHECK(auto_loaded.requested_ratios == std::vector<double>{1.0, 7.0});
}

TEST_CASE("csv: small hand-written file") {
  const auto dir = oracle::temp_dir("data_small");
  write_file(dir / "s.csv", "x0,x1,smile\n0.5,1,1\n-2,3e-1,0\n4,5,1\n");
  CsvSchema schema;
  schema.attribute_columns = {"smile"};
  const auto d = load_csv((dir / "s.csv").string(), schema);
  CHECK(d.num_samples() == 3);
  CHECK(d.feature_dim() == 2);
  CHECK(d.features(1, 1) == 0.3);
  CHECK(d.labels[0] == std::vector<int>{1, 0, 1});
}

TEST_CASE("csv: errors name the line") {
  const auto dir = oracle::temp_dir("data_errors");
  CsvSchema schema;
  schema.attribute_columns = {"a"};

  write_file(dir / "bad_num.csv", "x,a\n1,0\nfoo,1\n");
  try {
    load_csv((dir / "bad_num.csv").string(), schema);
    FAIL("expected ParseError");
  } catch (const ParseError& e) {
    CHECK(e.line() == 3);
  }

  write_file(dir / "bad_width.csv", "x,a\n1,0,4\n");
  CHECK_THROWS_AS(load_csv((dir / "bad_width.csv").string(), schema), ParseError);

  write_file(dir / "bad_class.csv", "x,a\n1,0\n2,5\n");
  CHECK_THROWS_AS(load_csv((dir / "bad_class.csv").string(), schema), SchemaError);

  write_file(dir / "bad_split.csv", "x,a,split\n1,0,train\n2,1,holdout\n");
  CHECK_THROWS_AS(load_csv((dir / "bad_split.csv").string(), schema), SchemaError);

  CsvSchema missing;
  missing.attribute_columns = {"nope"};
  CHECK_THROWS_AS(load_csv((dir / "bad_class.csv").string(), missing), SchemaError);
  CHECK_THROWS(load_csv((dir / "absent.csv").string(), schema));
}
