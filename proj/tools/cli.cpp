#include "cli.hpp"

#include <algorithm>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <optional>
#include <sstream>

#include <CLI11.hpp>
#include <json.hpp>

#include "dcl/data.hpp"
#include "dcl/errors.hpp"
#include "dcl/experiment.hpp"
#include "dcl/trainer.hpp"

namespace dcl::cli {

namespace {

using nlohmann::json;

struct RunFlags {
  std::optional<std::string> config_path;
  std::optional<std::string> method, g, f, distance, anchors, data, out;
  std::optional<double> p, eps, margin, lr, wd;
  std::optional<int> k, epochs, batch, embedding_dim;
  std::optional<std::uint64_t> seed;
  std::vector<int> hidden;
  std::vector<std::string> attr_columns;
};

void add_run_flags(CLI::App& cmd, RunFlags& f, bool with_method) {
  cmd.add_option("--config", f.config_path, "JSON run configuration; flags override it");
  if (with_method) {
    cmd.add_option("--method", f.method, "dcl, ce, sl, crl, oversample, downsample, cost");
  }
  cmd.add_option("--g", f.g, "sampling scheduler kind[:param], e.g. convex, concave:0.99, constant:1");
  cmd.add_option("--f", f.f, "loss scheduler kind[:param]; constant:v pins f to v");
  cmd.add_option("--p", f.p, "self-learning point in [0,1]");
  cmd.add_option("--eps", f.eps, "self-learning ratio");
  cmd.add_option("--k", f.k, "mining count for anchors and hard samples");
  cmd.add_option("--margin", f.margin, "triplet margin");
  cmd.add_option("--epochs", f.epochs, "training epochs L");
  cmd.add_option("--batch", f.batch, "batch size");
  cmd.add_option("--lr", f.lr, "learning rate");
  cmd.add_option("--wd", f.wd, "weight decay");
  cmd.add_option("--seed", f.seed, "run seed");
  cmd.add_option("--distance", f.distance, "squared_euclidean, euclidean or cosine");
  cmd.add_option("--anchors", f.anchors, "easy or all_minority");
  cmd.add_option("--hidden", f.hidden, "trunk hidden widths")->delimiter(',');
  cmd.add_option("--embedding-dim", f.embedding_dim, "per-attribute embedding width");
  cmd.add_option("--data", f.data, "dataset CSV");
  cmd.add_option("--out", f.out, "output directory");
  cmd.add_option("--attr-columns", f.attr_columns,
                 "attribute columns of the CSV (default: from the JSON manifest)")
      ->delimiter(',');
}

json read_json_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot open " + path);
  try {
    return json::parse(in);
  } catch (const json::exception& e) {
    throw ConfigError(path + ": " + e.what());
  }
}

/// Config-file keys overlaid with explicitly given flags.
json merged_config(const RunFlags& f) {
  json j = f.config_path ? read_json_file(*f.config_path) : json::object();
  if (!j.is_object()) throw ConfigError("config file must hold a JSON object");
  auto set = [&](const char* key, const auto& opt) {
    if (opt) j[key] = *opt;
  };
  set("method", f.method);
  set("g", f.g);
  set("f", f.f);
  set("p", f.p);
  set("eps", f.eps);
  set("k", f.k);
  set("margin", f.margin);
  set("epochs", f.epochs);
  set("batch", f.batch);
  set("lr", f.lr);
  set("wd", f.wd);
  set("seed", f.seed);
  set("distance", f.distance);
  set("anchors", f.anchors);
  set("embedding_dim", f.embedding_dim);
  set("data", f.data);
  set("out", f.out);
  if (!f.hidden.empty()) j["hidden"] = f.hidden;
  return j;
}

RunConfig config_from(json j) {
  j.erase("data");
  j.erase("out");
  return run_config_from_json(j.dump());
}

Dataset load_data(const std::string& path, const std::vector<std::string>& columns) {
  if (!std::filesystem::exists(path)) throw ConfigError("dataset not found: " + path);
  return load_dataset(path, columns);
}

struct SyntheticFlags {
  int attrs = 20;
  double ratio_max = 100.0;
  std::vector<double> ratios;
  std::int64_t n = 20000;
  int dim = 32;
  double separation = 2.0;
  double noise = 1.0;
  std::uint64_t seed = 1;
};

void add_synthetic_flags(CLI::App& cmd, SyntheticFlags& s, const std::string& seed_flag) {
  cmd.add_option("--attrs", s.attrs, "number of binary attributes")->capture_default_str();
  cmd.add_option("--ratio-max", s.ratio_max, "largest majority:minority ratio (log-spaced from 1)")
      ->capture_default_str();
  cmd.add_option("--ratios", s.ratios, "explicit per-attribute ratios (overrides --attrs/--ratio-max)")
      ->delimiter(',');
  cmd.add_option("--n", s.n, "number of samples")->capture_default_str();
  cmd.add_option("--dim", s.dim, "feature dimension")->capture_default_str();
  cmd.add_option("--separation", s.separation, "distance between class means")->capture_default_str();
  cmd.add_option("--noise", s.noise, "isotropic noise standard deviation")->capture_default_str();
  cmd.add_option(seed_flag, s.seed, "generator seed")->capture_default_str();
}

SyntheticSpec to_spec(const SyntheticFlags& s) {
  SyntheticSpec spec;
  spec.ratios = s.ratios.empty() ? log_spaced_ratios(s.attrs, s.ratio_max) : s.ratios;
  spec.n_samples = s.n;
  spec.feature_dim = s.dim;
  spec.class_separation = s.separation;
  spec.noise_sd = s.noise;
  spec.seed = s.seed;
  return spec;
}

void write_generated(const Dataset& data, const SyntheticSpec& spec, const std::string& csv_path) {
  const auto parent = std::filesystem::path(csv_path).parent_path();
  if (!parent.empty()) std::filesystem::create_directories(parent);
  write_csv(data, csv_path);
  write_manifest(data, spec, manifest_path_for(csv_path));
}

int cmd_generate(const SyntheticFlags& s, const std::string& out_path, std::ostream& out) {
  const auto spec = to_spec(s);
  const auto data = generate_synthetic(spec);
  write_generated(data, spec, out_path);
  out << "wrote " << out_path << " (" << data.num_samples() << " samples, "
      << data.num_attributes() << " attributes) and " << manifest_path_for(out_path) << '\n';
  return kExitOk;
}

int cmd_train(const RunFlags& f, std::ostream& out) {
  const auto merged = merged_config(f);
  const auto config = config_from(merged);
  const auto data_path = merged.value("data", std::string());
  if (data_path.empty()) throw ConfigError("train needs --data (or \"data\" in the config)");
  const auto out_dir = merged.value("out", std::string("run"));
  const auto data = load_data(data_path, f.attr_columns);
  const auto report = run(config, data, out_dir);
  out << "method " << to_string(config.method) << ", " << config.epochs << " epochs, "
      << report.wall_seconds << " s\n"
      << "best epoch " << report.best_epoch << ", val mA " << report.best_val_mA
      << ", test mA " << report.best_test.mean_balanced << '\n'
      << "artifacts in " << out_dir << '\n';
  return kExitOk;
}

std::vector<std::string> split_list(const std::string& text) {
  std::vector<std::string> out;
  std::stringstream ss(text);
  std::string item;
  while (std::getline(ss, item, ',')) {
    if (!item.empty()) out.push_back(item);
  }
  return out;
}

struct CompareFlags {
  std::optional<std::string> spec_path;
  std::optional<std::string> methods;
  std::vector<std::uint64_t> seeds;
  std::optional<std::string> ablate;
  std::optional<double> tl_weight;
  std::optional<unsigned> threads;
};

std::vector<LabeledConfig> build_runs(const json& base, const std::string& methods,
                                      const std::string& ablate, double tl_weight) {
  std::vector<LabeledConfig> runs;
  if (!ablate.empty()) {
    const auto parts = split_list(ablate);
    for (const auto& p : parts) {
      if (p != "ss" && p != "tl" && p != "ls") {
        throw ConfigError("--ablate accepts ss, tl, ls; got '" + p + "'");
      }
    }
    auto dcl_json = base;
    dcl_json["method"] = "dcl";
    const auto rows = ablation_configs(config_from(dcl_json), tl_weight);
    const auto has = [&](const char* c) { return std::find(parts.begin(), parts.end(), c) != parts.end(); };
    runs.push_back(rows[0]);
    if (has("ss")) runs.push_back(rows[1]);
    if (has("ss") && has("tl")) runs.push_back(rows[2]);
    if (has("ss") && has("tl") && has("ls")) runs.push_back(rows[3]);
    return runs;
  }
  for (const auto& m : split_list(methods)) {
    auto j = base;
    j["method"] = m;
    runs.push_back({std::string(to_string(method_from_string(m))), config_from(j)});
  }
  if (runs.empty()) throw ConfigError("no methods to compare");
  return runs;
}

int cmd_compare(const RunFlags& f, const CompareFlags& c, const SyntheticFlags& synth,
                bool synth_given, std::ostream& out) {
  json spec = c.spec_path ? read_json_file(*c.spec_path) : json::object();
  if (!spec.is_object()) throw ConfigError("experiment spec must be a JSON object");

  json base = spec.value("base", json::object());
  const json overrides = merged_config(f);
  for (const auto& [k, v] : overrides.items()) base[k] = v;
  const auto data_path = base.value("data", spec.value("data", std::string()));
  const auto out_dir = base.value("out", spec.value("out", std::string("compare")));

  const auto methods = c.methods ? *c.methods : spec.value("methods", std::string("ce,dcl"));
  const auto ablate = c.ablate ? *c.ablate : spec.value("ablate", std::string());
  const double tl_weight = c.tl_weight ? *c.tl_weight : spec.value("tl_weight", 1.0);
  auto seeds = c.seeds;
  if (seeds.empty()) seeds = spec.value("seeds", std::vector<std::uint64_t>{1});

  std::filesystem::create_directories(out_dir);
  Dataset data;
  if (!data_path.empty()) {
    data = load_data(data_path, f.attr_columns);
  } else {
    const auto syn = to_spec(synth);
    data = generate_synthetic(syn);
    write_generated(data, syn, out_dir + "/dataset.csv");
  }

  ExperimentSpec experiment;
  experiment.runs = build_runs(base, methods, ablate, tl_weight);
  experiment.seeds = seeds;
  experiment.out_dir = out_dir;
  experiment.threads = c.threads ? *c.threads : threads_from_env();

  json echo;
  echo["data"] = data_path.empty() ? out_dir + "/dataset.csv" : data_path;
  if (data_path.empty() || synth_given) {
    echo["synthetic"] = {{"ratios", to_spec(synth).ratios}, {"n", synth.n},     {"dim", synth.dim},
                         {"separation", synth.separation},  {"noise", synth.noise}, {"seed", synth.seed}};
  }
  echo["methods"] = methods;
  echo["ablate"] = ablate;
  echo["tl_weight"] = tl_weight;
  echo["seeds"] = seeds;
  echo["runs"] = json::array();
  for (const auto& r : experiment.runs) {
    echo["runs"].push_back({{"label", r.label}, {"config", json::parse(run_config_to_json(r.config))}});
  }
  std::ofstream(out_dir + "/experiment.json") << echo.dump(2) << '\n';

  const auto records = run_experiment(experiment, data, [&](const RunRecord& r) {
    out << "  " << r.label << " seed " << r.seed << ": test mA " << r.test_mean << " ("
        << r.wall_seconds << " s)\n";
    out.flush();
  });
  const auto groups = default_ratio_groups();
  const auto rows = aggregate(records, attribute_ratios(data), groups);
  const auto csv = comparison_csv(rows, groups);
  const auto table = comparison_table(rows, groups);
  std::ofstream(out_dir + "/comparison.csv") << csv;
  std::ofstream(out_dir + "/comparison.txt") << table;
  out << table;
  return kExitOk;
}

}  // namespace

int run_cli(const std::vector<std::string>& args, std::ostream& out, std::ostream& err) {
  CLI::App app{"Dynamic curriculum training for imbalanced attribute classification", "dcl"};
  app.require_subcommand(1);

  SyntheticFlags gen_flags;
  std::string gen_out = "synthetic.csv";
  auto* gen = app.add_subcommand("generate", "write a synthetic imbalanced dataset (CSV + JSON manifest)");
  add_synthetic_flags(*gen, gen_flags, "--seed");
  gen->add_option("--out", gen_out, "CSV path; the manifest goes next to it")->capture_default_str();

  RunFlags train_flags;
  auto* train = app.add_subcommand("train", "train one configuration");
  add_run_flags(*train, train_flags, true);

  RunFlags cmp_run;
  CompareFlags cmp;
  SyntheticFlags cmp_synth;
  auto* compare = app.add_subcommand("compare", "compare methods or ablation rows over seeds");
  add_run_flags(*compare, cmp_run, false);
  add_synthetic_flags(*compare, cmp_synth, "--data-seed");
  compare->add_option("--spec", cmp.spec_path, "JSON experiment spec; flags override it");
  compare->add_option("--methods", cmp.methods, "comma-separated methods (default ce,dcl)");
  compare->add_option("--seeds", cmp.seeds, "comma-separated run seeds")->delimiter(',');
  compare->add_option("--ablate", cmp.ablate, "build-up rows from ss,tl,ls");
  compare->add_option("--tl-weight", cmp.tl_weight, "fixed triplet weight of the +SS+TL row");
  compare->add_option("--threads", cmp.threads, "parallel runs (default DCL_THREADS)");

  try {
    std::vector<std::string> reversed(args.rbegin(), args.rend());
    app.parse(reversed);
  } catch (const CLI::CallForHelp&) {
    out << app.help();
    return kExitOk;
  } catch (const CLI::ParseError& e) {
    err << "error: " << e.what() << '\n';
    return kExitConfig;
  }

  try {
    if (*gen) return cmd_generate(gen_flags, gen_out, out);
    if (*train) return cmd_train(train_flags, out);
    if (*compare) {
      bool synth_given = false;
      for (const auto* name : {"--attrs", "--ratio-max", "--ratios", "--n", "--dim", "--separation",
                               "--noise", "--data-seed"}) {
        synth_given = synth_given || compare->count(name) > 0;
      }
      return cmd_compare(cmp_run, cmp, cmp_synth, synth_given, out);
    }
  } catch (const NumericError& e) {
    err << "numeric failure: " << e.what() << '\n';
    return kExitNumeric;
  } catch (const ConfigError& e) {
    err << "config error: " << e.what() << '\n';
    return kExitConfig;
  } catch (const ParseError& e) {
    err << "parse error: " << e.what() << '\n';
    return kExitConfig;
  } catch (const SchemaError& e) {
    err << "schema error: " << e.what() << '\n';
    return kExitConfig;
  } catch (const DegenerateDistributionError& e) {
    err << "data error: " << e.what() << '\n';
    return kExitConfig;
  } catch (const UndefinedMetricError& e) {
    err << "data error: " << e.what() << '\n';
    return kExitConfig;
  } catch (const OutOfRangeError& e) {
    err << "config error: " << e.what() << '\n';
    return kExitConfig;
  } catch (const std::exception& e) {
    err << "error: " << e.what() << '\n';
    return kExitError;
  }
  return kExitError;
}

}  // namespace dcl::cli
