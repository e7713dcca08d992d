#include "dcl/data.hpp"

#include <algorithm>
#include <array>
#include <charconv>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <random>
#include <sstream>

#include <json.hpp>

#include "dcl/errors.hpp"
#include "dcl/seed.hpp"

namespace dcl {

std::string_view to_string(Split split) {
  switch (split) {
    case Split::Train: return "train";
    case Split::Val: return "val";
    case Split::Test: return "test";
  }
  return "unknown";
}

std::optional<Split> split_from_string(std::string_view text) {
  if (text == "train") return Split::Train;
  if (text == "val") return Split::Val;
  if (text == "test") return Split::Test;
  return std::nullopt;
}

std::vector<std::size_t> Dataset::indices(Split which) const {
  std::vector<std::size_t> out;
  for (std::size_t i = 0; i < split.size(); ++i) {
    if (split[i] == which) out.push_back(i);
  }
  return out;
}

std::vector<std::int64_t> Dataset::class_counts(std::size_t attribute, Split which) const {
  std::vector<std::int64_t> counts(num_classes.at(attribute), 0);
  const auto& y = labels.at(attribute);
  for (std::size_t i = 0; i < split.size(); ++i) {
    if (split[i] == which) ++counts[y[i]];
  }
  return counts;
}

void Dataset::validate() const {
  const auto n = static_cast<std::size_t>(features.rows());
  if (split.size() != n) throw ContractViolation("split length differs from sample count");
  if (labels.size() != attribute_names.size() || labels.size() != num_classes.size()) {
    throw ContractViolation("attribute metadata is inconsistent");
  }
  if (feature_names.size() != static_cast<std::size_t>(features.cols())) {
    throw ContractViolation("feature names do not match feature columns");
  }
  for (std::size_t a = 0; a < labels.size(); ++a) {
    if (labels[a].size() != n) throw ContractViolation("label column length mismatch");
    for (int y : labels[a]) {
      if (y < 0 || y >= num_classes[a]) {
        throw ContractViolation("label outside declared classes for " + attribute_names[a]);
      }
    }
  }
}

std::vector<double> log_spaced_ratios(int count, double ratio_max) {
  if (count <= 0) throw ConfigError("attribute count must be positive");
  if (!(ratio_max >= 1.0) || !std::isfinite(ratio_max)) {
    throw ConfigError("maximum imbalance ratio must be >= 1");
  }
  std::vector<double> out(count);
  for (int i = 0; i < count; ++i) {
    const double t = count == 1 ? 0.0 : static_cast<double>(i) / (count - 1);
    out[i] = std::pow(ratio_max, t);
  }
  out.front() = 1.0;
  out.back() = count == 1 ? 1.0 : ratio_max;
  return out;
}

SyntheticSpec default_synthetic_spec() {
  SyntheticSpec spec;
  spec.ratios = log_spaced_ratios(20, 100.0);
  return spec;
}

std::vector<Split> stratified_split(const std::vector<int>& labels, std::uint64_t seed) {
  std::vector<Split> split(labels.size(), Split::Train);
  if (labels.empty()) return split;
  std::mt19937_64 rng(seed);
  const int num_ids = *std::max_element(labels.begin(), labels.end()) + 1;
  for (int c = 0; c < num_ids; ++c) {
    std::vector<std::size_t> members;
    for (std::size_t i = 0; i < labels.size(); ++i) {
      if (labels[i] == c) members.push_back(i);
    }
    std::shuffle(members.begin(), members.end(), rng);
    const auto n = static_cast<double>(members.size());
    const auto n_train = static_cast<std::size_t>(std::llround(0.7 * n));
    const auto n_val = static_cast<std::size_t>(std::llround(0.1 * n));
    for (std::size_t k = 0; k < members.size(); ++k) {
      split[members[k]] = k < n_train ? Split::Train
                          : k < n_train + n_val ? Split::Val
                                                : Split::Test;
    }
  }
  return split;
}

namespace {

std::string indexed_name(const char* prefix, std::size_t i, std::size_t count) {
  const auto width = std::to_string(count > 0 ? count - 1 : 0).size();
  auto digits = std::to_string(i);
  if (digits.size() < width) digits.insert(0, width - digits.size(), '0');
  return prefix + digits;
}

std::size_t most_imbalanced(const std::vector<double>& ratios) {
  return static_cast<std::size_t>(std::max_element(ratios.begin(), ratios.end()) - ratios.begin());
}

}  // namespace

Dataset generate_synthetic(const SyntheticSpec& spec) {
  if (spec.ratios.empty()) throw ConfigError("synthetic spec needs at least one attribute");
  if (spec.feature_dim <= 0) throw ConfigError("feature_dim must be positive");
  if (spec.n_samples <= 0) throw ConfigError("n_samples must be positive");
  if (!(spec.noise_sd >= 0.0) || !std::isfinite(spec.class_separation)) {
    throw ConfigError("noise_sd must be >= 0 and separation finite");
  }
  const auto n = static_cast<std::size_t>(spec.n_samples);
  const auto dim = static_cast<Eigen::Index>(spec.feature_dim);
  const auto num_attrs = spec.ratios.size();

  std::vector<std::int64_t> minority(num_attrs);
  for (std::size_t a = 0; a < num_attrs; ++a) {
    const double r = spec.ratios[a];
    if (!(r >= 1.0) || !std::isfinite(r)) {
      throw ConfigError("imbalance ratio must be >= 1, got " + std::to_string(r));
    }
    minority[a] = std::llround(static_cast<double>(spec.n_samples) / (1.0 + r));
    if (minority[a] < 10 || spec.n_samples - minority[a] < 1) {
      throw ConfigError("ratio 1:" + std::to_string(r) + " with " +
                        std::to_string(spec.n_samples) +
                        " samples leaves fewer than 10 minority samples");
    }
  }

  Dataset data;
  data.requested_ratios = spec.ratios;
  data.num_classes.assign(num_attrs, 2);
  for (Eigen::Index f = 0; f < dim; ++f) {
    data.feature_names.push_back(indexed_name("f", static_cast<std::size_t>(f), static_cast<std::size_t>(dim)));
  }
  for (std::size_t a = 0; a < num_attrs; ++a) {
    data.attribute_names.push_back(indexed_name("attr_", a, num_attrs));
  }

  std::mt19937_64 dir_rng(derive_seed(spec.seed, {1}));
  std::normal_distribution<double> gauss(0.0, 1.0);
  Eigen::MatrixXd directions(static_cast<Eigen::Index>(num_attrs), dim);
  for (std::size_t a = 0; a < num_attrs; ++a) {
    const auto row = static_cast<Eigen::Index>(a);
    Eigen::RowVectorXd v(dim);
    for (Eigen::Index f = 0; f < dim; ++f) v(f) = gauss(dir_rng);
    if (a < static_cast<std::size_t>(dim)) {
      for (Eigen::Index prev = 0; prev < row; ++prev) {
        v -= v.dot(directions.row(prev)) * directions.row(prev);
      }
    }
    directions.row(row) = v / v.norm();
  }

  data.labels.assign(num_attrs, std::vector<int>(n, 0));
  for (std::size_t a = 0; a < num_attrs; ++a) {
    auto& y = data.labels[a];
    std::fill(y.begin(), y.begin() + minority[a], 1);
    std::mt19937_64 label_rng(derive_seed(spec.seed, {2, a}));
    std::shuffle(y.begin(), y.end(), label_rng);
  }

  std::mt19937_64 noise_rng(derive_seed(spec.seed, {3}));
  std::normal_distribution<double> noise(0.0, spec.noise_sd);
  data.features.resize(static_cast<Eigen::Index>(n), dim);
  const double half = 0.5 * spec.class_separation;
  for (std::size_t i = 0; i < n; ++i) {
    const auto row = static_cast<Eigen::Index>(i);
    Eigen::RowVectorXd x(dim);
    for (Eigen::Index f = 0; f < dim; ++f) x(f) = spec.noise_sd > 0.0 ? noise(noise_rng) : 0.0;
    for (std::size_t a = 0; a < num_attrs; ++a) {
      const double sign = data.labels[a][i] == 1 ? 1.0 : -1.0;
      x += (sign * half) * directions.row(static_cast<Eigen::Index>(a));
    }
    data.features.row(row) = x;
  }

  data.split = stratified_split(data.labels[most_imbalanced(spec.ratios)],
                                derive_seed(spec.seed, {4}));
  return data;
}

namespace {

std::vector<std::string_view> split_fields(std::string_view line) {
  std::vector<std::string_view> fields;
  std::size_t start = 0;
  while (true) {
    const auto comma = line.find(',', start);
    if (comma == std::string_view::npos) {
      fields.push_back(line.substr(start));
      break;
    }
    fields.push_back(line.substr(start, comma - start));
    start = comma + 1;
  }
  return fields;
}

std::string_view trim(std::string_view s) {
  while (!s.empty() && (s.front() == ' ' || s.front() == '\t')) s.remove_prefix(1);
  while (!s.empty() && (s.back() == ' ' || s.back() == '\t' || s.back() == '\r')) s.remove_suffix(1);
  return s;
}

std::string format_double(double v) {
  std::array<char, 32> buf{};
  const auto [ptr, ec] = std::to_chars(buf.data(), buf.data() + buf.size(), v);
  return std::string(buf.data(), ptr);
}

}  // namespace

Dataset load_csv(const std::string& path, const CsvSchema& schema) {
  std::ifstream in(path);
  if (!in) throw ParseError("cannot open " + path, 0);

  std::string line;
  if (!std::getline(in, line)) throw ParseError(path + ": missing header row", 1);
  std::vector<std::string> header;
  for (auto f : split_fields(line)) header.emplace_back(trim(f));

  const auto num_attrs = schema.attribute_columns.size();
  if (num_attrs == 0) throw SchemaError("schema declares no attribute columns");
  if (!schema.num_classes.empty() && schema.num_classes.size() != num_attrs) {
    throw SchemaError("schema num_classes must match attribute columns");
  }

  std::vector<std::ptrdiff_t> attr_col(num_attrs, -1);
  std::ptrdiff_t split_col = -1;
  std::vector<std::size_t> feature_cols;
  for (std::size_t c = 0; c < header.size(); ++c) {
    const auto it = std::find(schema.attribute_columns.begin(), schema.attribute_columns.end(), header[c]);
    if (it != schema.attribute_columns.end()) {
      attr_col[it - schema.attribute_columns.begin()] = static_cast<std::ptrdiff_t>(c);
    } else if (!schema.split_column.empty() && header[c] == schema.split_column) {
      split_col = static_cast<std::ptrdiff_t>(c);
    } else {
      feature_cols.push_back(c);
    }
  }
  for (std::size_t a = 0; a < num_attrs; ++a) {
    if (attr_col[a] < 0) {
      throw SchemaError(path + ": attribute column '" + schema.attribute_columns[a] +
                        "' not in header");
    }
  }
  if (feature_cols.empty()) throw SchemaError(path + ": no feature columns");

  Dataset data;
  data.attribute_names = schema.attribute_columns;
  data.num_classes = schema.num_classes.empty() ? std::vector<int>(num_attrs, 2) : schema.num_classes;
  for (auto c : feature_cols) data.feature_names.push_back(header[c]);
  data.labels.assign(num_attrs, {});

  std::vector<double> values;
  std::size_t line_no = 1;
  std::size_t rows = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (trim(line).empty()) continue;
    const auto fields = split_fields(line);
    if (fields.size() != header.size()) {
      throw ParseError(path + ":" + std::to_string(line_no) + ": expected " +
                           std::to_string(header.size()) + " fields, found " +
                           std::to_string(fields.size()),
                       line_no);
    }
    for (auto c : feature_cols) {
      const auto text = trim(fields[c]);
      double v = 0.0;
      const auto [ptr, ec] = std::from_chars(text.data(), text.data() + text.size(), v);
      if (text.empty() || ec != std::errc{} || ptr != text.data() + text.size() || !std::isfinite(v)) {
        throw ParseError(path + ":" + std::to_string(line_no) + ": non-numeric value '" +
                             std::string(text) + "' in column '" + header[c] + "'",
                         line_no);
      }
      values.push_back(v);
    }
    for (std::size_t a = 0; a < num_attrs; ++a) {
      const auto text = trim(fields[attr_col[a]]);
      int y = -1;
      const auto [ptr, ec] = std::from_chars(text.data(), text.data() + text.size(), y);
      if (text.empty() || ec != std::errc{} || ptr != text.data() + text.size() || y < 0 ||
          y >= data.num_classes[a]) {
        throw SchemaError(path + ":" + std::to_string(line_no) + ": unknown class '" +
                          std::string(text) + "' for attribute '" + data.attribute_names[a] + "'");
      }
      data.labels[a].push_back(y);
    }
    if (split_col >= 0) {
      const auto text = trim(fields[split_col]);
      const auto s = split_from_string(text);
      if (!s) {
        throw SchemaError(path + ":" + std::to_string(line_no) + ": unknown split '" +
                          std::string(text) + "'");
      }
      data.split.push_back(*s);
    }
    ++rows;
  }

  const auto dim = static_cast<Eigen::Index>(feature_cols.size());
  data.features.resize(static_cast<Eigen::Index>(rows), dim);
  for (std::size_t r = 0; r < rows; ++r) {
    for (Eigen::Index f = 0; f < dim; ++f) {
      data.features(static_cast<Eigen::Index>(r), f) = values[r * feature_cols.size() + static_cast<std::size_t>(f)];
    }
  }

  if (split_col < 0) {
    // Stratify on the attribute whose rarest class is smallest.
    std::size_t pick = 0;
    std::int64_t rarest = -1;
    for (std::size_t a = 0; a < num_attrs; ++a) {
      std::vector<std::int64_t> counts(data.num_classes[a], 0);
      for (int y : data.labels[a]) ++counts[y];
      const auto m = *std::min_element(counts.begin(), counts.end());
      if (rarest < 0 || m < rarest) {
        rarest = m;
        pick = a;
      }
    }
    data.split = stratified_split(data.labels[pick], schema.split_seed);
  }
  data.validate();
  return data;
}

void write_csv(const Dataset& data, const std::string& path) {
  data.validate();
  std::ofstream out(path, std::ios::binary);
  if (!out) throw std::runtime_error("cannot open " + path + " for writing");
  std::string row;
  for (const auto& f : data.feature_names) row += f + ",";
  for (const auto& a : data.attribute_names) row += a + ",";
  row += "split\n";
  out << row;
  for (std::size_t i = 0; i < data.num_samples(); ++i) {
    row.clear();
    for (Eigen::Index f = 0; f < data.features.cols(); ++f) {
      row += format_double(data.features(static_cast<Eigen::Index>(i), f));
      row += ',';
    }
    for (const auto& y : data.labels) {
      row += std::to_string(y[i]);
      row += ',';
    }
    row += to_string(data.split[i]);
    row += '\n';
    out << row;
  }
  if (!out) throw std::runtime_error("failed writing " + path);
}

void write_manifest(const Dataset& data, const SyntheticSpec& spec, const std::string& path) {
  nlohmann::ordered_json j;
  j["attributes"] = data.attribute_names;
  j["ratios"] = spec.ratios;
  std::vector<std::int64_t> minority;
  for (std::size_t a = 0; a < data.num_attributes(); ++a) {
    minority.push_back(std::count(data.labels[a].begin(), data.labels[a].end(), 1));
  }
  j["minority_counts"] = minority;
  j["n_samples"] = spec.n_samples;
  j["feature_dim"] = spec.feature_dim;
  j["class_separation"] = spec.class_separation;
  j["noise_sd"] = spec.noise_sd;
  j["seed"] = spec.seed;
  j["split"] = {{"train", data.indices(Split::Train).size()},
                {"val", data.indices(Split::Val).size()},
                {"test", data.indices(Split::Test).size()}};
  std::ofstream out(path, std::ios::binary);
  if (!out) throw std::runtime_error("cannot open " + path + " for writing");
  out << j.dump(2) << '\n';
}

Manifest read_manifest(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ParseError("cannot open manifest " + path, 0);
  try {
    const auto j = nlohmann::json::parse(in);
    Manifest m;
    m.attribute_names = j.at("attributes").get<std::vector<std::string>>();
    m.ratios = j.value("ratios", std::vector<double>{});
    m.seed = j.value("seed", std::uint64_t{0});
    return m;
  } catch (const nlohmann::json::exception& e) {
    throw ParseError("bad manifest " + path + ": " + e.what(), 0);
  }
}

std::string manifest_path_for(const std::string& csv_path) {
  return std::filesystem::path(csv_path).replace_extension(".json").string();
}

Dataset load_dataset(const std::string& csv_path,
                     const std::vector<std::string>& attribute_columns) {
  CsvSchema schema;
  std::vector<double> ratios;
  if (attribute_columns.empty()) {
    const auto sidecar = manifest_path_for(csv_path);
    if (!std::filesystem::exists(sidecar)) {
      throw SchemaError("no attribute columns given and no manifest at " + sidecar);
    }
    const auto m = read_manifest(sidecar);
    schema.attribute_columns = m.attribute_names;
    ratios = m.ratios;
  } else {
    schema.attribute_columns = attribute_columns;
  }
  auto data = load_csv(csv_path, schema);
  if (ratios.size() == data.num_attributes()) data.requested_ratios = std::move(ratios);
  return data;
}

}  // namespace dcl
