#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "dcl/batch_composer.hpp"
#include "dcl/class_distribution.hpp"

namespace dcl {

enum class Split : std::uint8_t { Train = 0, Val = 1, Test = 2 };

std::string_view to_string(Split split);
std::optional<Split> split_from_string(std::string_view text);

struct Dataset {
  Eigen::MatrixXd features;  // samples x feature_dim
  LabelMatrix labels;        // [attribute][sample]
  std::vector<std::string> feature_names;
  std::vector<std::string> attribute_names;
  std::vector<int> num_classes;  // per attribute
  std::vector<Split> split;      // per sample
  /// Majority:minority ratio requested at generation time; empty for loaded data.
  std::vector<double> requested_ratios;

  std::size_t num_samples() const noexcept { return split.size(); }
  std::size_t num_attributes() const noexcept { return labels.size(); }
  std::size_t feature_dim() const noexcept { return static_cast<std::size_t>(features.cols()); }

  std::vector<std::size_t> indices(Split which) const;
  /// Per-class counts of `attribute` within `which`.
  std::vector<std::int64_t> class_counts(std::size_t attribute, Split which) const;
  /// Throws ContractViolation when an invariant is broken.
  void validate() const;
};

struct SyntheticSpec {
  std::vector<double> ratios;  // majority:minority per attribute, each >= 1
  std::int64_t n_samples = 20000;
  int feature_dim = 32;
  double class_separation = 2.0;
  double noise_sd = 1.0;
  std::uint64_t seed = 1;
};

/// `count` ratios log-spaced from 1 to `ratio_max`.
std::vector<double> log_spaced_ratios(int count, double ratio_max);

/// 20 attributes, ratios 1..100 log-spaced, 20000 samples, 32 features.
SyntheticSpec default_synthetic_spec();

/// Per attribute, labels hold exactly round(n / (1 + ratio)) minority samples
/// (class 1). Each class is a Gaussian cluster offset by +-separation/2 along
/// a per-attribute unit direction (orthonormal while attributes <= features),
/// plus isotropic noise. Throws ConfigError for an infeasible spec.
Dataset generate_synthetic(const SyntheticSpec& spec);

/// 70/10/20 train/val/test split stratified on `labels`.
std::vector<Split> stratified_split(const std::vector<int>& labels, std::uint64_t seed);

struct CsvSchema {
  std::vector<std::string> attribute_columns;
  /// Name of an optional split column ("train"/"val"/"test").
  std::string split_column = "split";
  /// Classes per attribute; empty means 2 for every attribute.
  std::vector<int> num_classes;
  std::uint64_t split_seed = 0x5eed;
};

/// Columns named in the schema become attributes, the split column (if
/// present) the split, every other column a feature. Throws ParseError with
/// the offending line and SchemaError for missing columns or bad labels.
Dataset load_csv(const std::string& path, const CsvSchema& schema);
void write_csv(const Dataset& data, const std::string& path);

/// JSON sidecar describing a generated dataset.
void write_manifest(const Dataset& data, const SyntheticSpec& spec, const std::string& path);

struct Manifest {
  std::vector<std::string> attribute_names;
  std::vector<double> ratios;
  std::uint64_t seed = 0;
};
Manifest read_manifest(const std::string& path);

/// Loads a CSV, taking attribute columns and requested ratios from the
/// sidecar manifest next to it (same stem, .json) when no columns are given.
Dataset load_dataset(const std::string& csv_path,
                     const std::vector<std::string>& attribute_columns = {});

/// Path of the manifest sidecar for a CSV file.
std::string manifest_path_for(const std::string& csv_path);

}  // namespace dcl
