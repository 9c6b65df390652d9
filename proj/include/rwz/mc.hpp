#pragma once

#include <cstdint>
#include <functional>
#include <optional>
#include <string>
#include <vector>

#include <json.hpp>

#include "rwz/core.hpp"
#include "rwz/pointproc.hpp"

namespace rwz {

struct MCEstimate {
  int n_reps = 0;
  cplx mean = 0.0;
  double variance = 0.0;  // sample E|X - mean|^2, 1/(n-1) normalization
  double stderr_mean = 0.0;
  double stderr_variance = 0.0;  // jackknife
  std::uint64_t base_seed = 0;
  int failures = 0;
};

// Estimate from stored replicate values (pairwise summation, closed-form jackknife).
MCEstimate estimate(const std::vector<cplx>& values, std::uint64_t base_seed = 0, int failures = 0);

struct RunOptions {
  int threads = 0;  // 0: hardware concurrency
  double max_failure_fraction = 0.01;
};

// Replicate i is evaluated with seed split_seed(base_seed, i). A replicate may
// return several statistics that share one realization.
struct MultiRun {
  std::uint64_t base_seed = 0;
  std::vector<std::uint64_t> seeds;
  std::vector<std::vector<cplx>> values;  // [stat][kept replicate]
  std::vector<int> failed;                // replicate indices that threw NumericError
  std::vector<std::string> log;
  std::vector<MCEstimate> estimates;
};

using Replicate = std::function<std::vector<cplx>(std::uint64_t seed)>;

MultiRun run_multi(const Replicate& rep, int n_stats, int n_reps, std::uint64_t base_seed,
                   const RunOptions& opt = {});

using Statistic = std::function<cplx(const PointConfiguration&)>;

MCEstimate run(const Statistic& stat, const ProcessModel& model, double window_radius, int n_reps,
               std::uint64_t base_seed, const RunOptions& opt = {});

// --- comparisons ------------------------------------------------------------

struct Oracle {
  double value = 0.0;
  bool diverges = false;
  static Oracle finite(double v) { return {v, false}; }
  static Oracle divergent() { return {0.0, true}; }
};

enum class RuleKind { KStderr, Relative, Trend, Bound };
enum class Target { Variance, MeanRe, MeanAbs };

struct ToleranceRule {
  RuleKind kind = RuleKind::KStderr;
  Target target = Target::Variance;
  double k = 3.0;           // KStderr
  double rel = 0.05;        // Relative; also the extra allowance added to KStderr
  double extra_rel = 0.0;   // KStderr: |d| <= k se + extra_rel |oracle|
  std::vector<double> min_increments;  // Trend
  std::string describe() const;
};

struct Verdict {
  MCEstimate mc;
  Oracle oracle;
  ToleranceRule rule;
  double observed = 0.0;
  bool pass = false;
};

Verdict compare(const MCEstimate& mc, const Oracle& oracle, const ToleranceRule& rule = {});

// Trend rule over a grid: variance increases by at least min_increments[i]
// between consecutive entries.
Verdict compare_trend(const std::vector<MCEstimate>& grid, const ToleranceRule& rule);

// Paired comparison of two statistics evaluated on the same replicates.
struct PairedDiff {
  double mean_diff = 0.0;  // |mean(a) - mean(b)|
  double mean_se = 0.0;
  double var_diff = 0.0;   // var(a) - var(b)
  double var_se = 0.0;     // jackknife of the difference
  bool pass(double k = 3.0) const {
    return mean_diff <= k * mean_se && std::abs(var_diff) <= k * var_se;
  }
};
PairedDiff paired_difference(const std::vector<cplx>& a, const std::vector<cplx>& b);

nlohmann::json estimate_json(const MCEstimate& e);
nlohmann::json report_json(const std::string& experiment, const std::string& model,
                           const nlohmann::json& params, const Verdict& v);

void write_replicates_csv(const std::string& path, const MultiRun& run,
                          const std::vector<std::string>& stat_names);

}  // namespace rwz
