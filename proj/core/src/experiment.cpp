#include "dcl/experiment.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <cstdlib>
#include <exception>
#include <iomanip>
#include <limits>
#include <mutex>
#include <sstream>
#include <thread>

#include "dcl/errors.hpp"

namespace dcl {

std::vector<RatioGroup> default_ratio_groups() {
  return {{"1-25", 1.0, 25.0},
          {"25-50", 25.0, 50.0},
          {">50", 50.0, std::numeric_limits<double>::infinity()}};
}

std::size_t group_of(double ratio, const std::vector<RatioGroup>& groups) {
  for (std::size_t g = 0; g < groups.size(); ++g) {
    const bool above = g == 0 ? ratio >= groups[g].lower : ratio > groups[g].lower;
    if (above && ratio <= groups[g].upper) return g;
  }
  throw OutOfRangeError("ratio " + std::to_string(ratio) + " falls in no group");
}

std::vector<double> attribute_ratios(const Dataset& data) {
  if (data.requested_ratios.size() == data.num_attributes()) return data.requested_ratios;
  std::vector<double> out;
  for (std::size_t a = 0; a < data.num_attributes(); ++a) {
    out.push_back(ClassDistribution::from_counts(data.class_counts(a, Split::Train)).imbalance_ratio());
  }
  return out;
}

std::vector<LabeledConfig> ablation_configs(const RunConfig& dcl_base, double fixed_tl_weight) {
  const int horizon = std::max(dcl_base.epochs, 1);
  auto baseline = dcl_base;
  baseline.method = Method::CE;
  baseline.sampling = SchedulerFn::constant(horizon, 1.0);
  baseline.loss = LossScheduler::fixed(horizon, 0.0);

  auto ss = dcl_base;
  ss.loss = LossScheduler::fixed(horizon, 0.0);

  auto ss_tl = dcl_base;
  ss_tl.loss = LossScheduler::fixed(horizon, fixed_tl_weight);

  return {{"baseline", baseline}, {"+SS", ss}, {"+SS+TL", ss_tl}, {"DCL", dcl_base}};
}

std::vector<RunRecord> run_experiment(const ExperimentSpec& spec, const Dataset& data,
                                      const std::function<void(const RunRecord&)>& on_done) {
  if (spec.runs.empty() || spec.seeds.empty()) {
    throw ConfigError("an experiment needs at least one config and one seed");
  }
  struct Job {
    const LabeledConfig* run;
    std::uint64_t seed;
  };
  std::vector<Job> jobs;
  for (const auto& r : spec.runs) {
    for (auto s : spec.seeds) jobs.push_back({&r, s});
  }
  std::vector<RunRecord> records(jobs.size());
  std::atomic<std::size_t> next{0};
  std::mutex mu;
  std::exception_ptr failure;

  auto worker = [&] {
    while (true) {
      const auto j = next.fetch_add(1);
      if (j >= jobs.size()) return;
      {
        std::lock_guard lock(mu);
        if (failure) return;
      }
      try {
        auto config = jobs[j].run->config;
        config.seed = jobs[j].seed;
        std::string dir;
        if (!spec.out_dir.empty()) {
          dir = spec.out_dir + "/" + jobs[j].run->label + "/seed_" + std::to_string(jobs[j].seed);
        }
        const auto report = run(config, data, dir);
        RunRecord rec;
        rec.label = jobs[j].run->label;
        rec.seed = jobs[j].seed;
        rec.test_balanced = report.best_test.balanced;
        rec.test_mean = report.best_test.mean_balanced;
        rec.best_epoch = report.best_epoch;
        rec.wall_seconds = report.wall_seconds;
        std::lock_guard lock(mu);
        records[j] = rec;
        if (on_done) on_done(rec);
      } catch (...) {
        std::lock_guard lock(mu);
        if (!failure) failure = std::current_exception();
      }
    }
  };

  const unsigned n = std::max(1u, std::min<unsigned>(spec.threads, static_cast<unsigned>(jobs.size())));
  if (n == 1) {
    worker();
  } else {
    std::vector<std::jthread> pool;
    for (unsigned t = 0; t < n; ++t) pool.emplace_back(worker);
  }
  if (failure) std::rethrow_exception(failure);
  return records;
}

std::vector<ComparisonRow> aggregate(const std::vector<RunRecord>& records,
                                     const std::vector<double>& ratios,
                                     const std::vector<RatioGroup>& groups) {
  std::vector<ComparisonRow> rows;
  std::vector<std::vector<double>> sums, counts;
  for (const auto& rec : records) {
    auto it = std::find_if(rows.begin(), rows.end(), [&](const auto& r) { return r.label == rec.label; });
    if (it == rows.end()) {
      rows.push_back({rec.label, std::vector<double>(groups.size(), 0.0), 0.0, 0});
      sums.emplace_back(groups.size() + 1, 0.0);
      counts.emplace_back(groups.size() + 1, 0.0);
      it = rows.end() - 1;
    }
    const auto r = static_cast<std::size_t>(it - rows.begin());
    if (rec.test_balanced.size() != ratios.size()) {
      throw ContractViolation("record and ratio list disagree on attribute count");
    }
    for (std::size_t a = 0; a < ratios.size(); ++a) {
      const auto g = group_of(ratios[a], groups);
      sums[r][g] += rec.test_balanced[a];
      counts[r][g] += 1.0;
      sums[r][groups.size()] += rec.test_balanced[a];
      counts[r][groups.size()] += 1.0;
    }
    ++it->runs;
  }
  for (std::size_t r = 0; r < rows.size(); ++r) {
    for (std::size_t g = 0; g < groups.size(); ++g) {
      rows[r].group_mean[g] = counts[r][g] > 0 ? sums[r][g] / counts[r][g]
                                               : std::numeric_limits<double>::quiet_NaN();
    }
    rows[r].overall_mean = sums[r][groups.size()] / counts[r][groups.size()];
  }
  return rows;
}

std::string comparison_csv(const std::vector<ComparisonRow>& rows,
                           const std::vector<RatioGroup>& groups) {
  std::ostringstream out;
  out << std::setprecision(17) << "method,runs";
  for (const auto& g : groups) out << ",mA_" << g.name;
  out << ",mA_all\n";
  for (const auto& r : rows) {
    out << r.label << ',' << r.runs;
    for (double v : r.group_mean) out << ',' << v;
    out << ',' << r.overall_mean << '\n';
  }
  return out.str();
}

std::string comparison_table(const std::vector<ComparisonRow>& rows,
                             const std::vector<RatioGroup>& groups) {
  std::size_t label_width = 6;
  for (const auto& r : rows) label_width = std::max(label_width, r.label.size());
  std::ostringstream out;
  out << std::left << std::setw(static_cast<int>(label_width) + 2) << "method" << std::right
      << std::setw(5) << "runs";
  for (const auto& g : groups) out << std::setw(10) << g.name;
  out << std::setw(10) << "all" << '\n';
  out << std::fixed << std::setprecision(2);
  for (const auto& r : rows) {
    out << std::left << std::setw(static_cast<int>(label_width) + 2) << r.label << std::right
        << std::setw(5) << r.runs;
    for (double v : r.group_mean) {
      if (std::isnan(v)) {
        out << std::setw(10) << "-";
      } else {
        out << std::setw(10) << 100.0 * v;
      }
    }
    out << std::setw(10) << 100.0 * r.overall_mean << '\n';
  }
  return out.str();
}

unsigned threads_from_env() {
  if (const char* env = std::getenv("DCL_THREADS")) {
    const int v = std::atoi(env);
    if (v > 0) return static_cast<unsigned>(v);
  }
  return std::max(1u, std::thread::hardware_concurrency());
}

}  // namespace dcl
