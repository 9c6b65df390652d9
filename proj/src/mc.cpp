#include "rwz/mc.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <exception>
#include <fstream>
#include <iomanip>
#include <mutex>
#include <sstream>
#include <thread>

#include "rwz/rng.hpp"

namespace rwz {

namespace {

// Pairwise summation over [lo, hi); fixed split points make the result
// independent of how the replicates were scheduled.
template <typename T, typename F>
T tree_sum(const F& term, std::size_t lo, std::size_t hi) {
  if (hi - lo <= 8) {
    T s = T(0);
    for (std::size_t i = lo; i < hi; ++i) s += term(i);
    return s;
  }
  const std::size_t mid = lo + (hi - lo) / 2;
  return tree_sum<T>(term, lo, mid) + tree_sum<T>(term, mid, hi);
}

struct Moments {
  cplx mean;
  double ss;  // sum |x - mean|^2
};

Moments moments(const std::vector<cplx>& x) {
  const std::size_t n = x.size();
  cplx m = tree_sum<cplx>([&](std::size_t i) { return x[i]; }, 0, n) / double(n);
  double ss = tree_sum<double>([&](std::size_t i) { return std::norm(x[i] - m); }, 0, n);
  return {m, ss};
}

// Leave-one-out sample variances, O(n).
std::vector<double> loo_variances(const std::vector<cplx>& x, const Moments& mo) {
  const double n = double(x.size());
  std::vector<double> out(x.size());
  for (std::size_t i = 0; i < x.size(); ++i)
    out[i] = (mo.ss - std::norm(x[i] - mo.mean) * n / (n - 1.0)) / (n - 2.0);
  return out;
}

double jackknife_se(const std::vector<double>& theta) {
  const std::size_t n = theta.size();
  double m = tree_sum<double>([&](std::size_t i) { return theta[i]; }, 0, n) / double(n);
  double ss = tree_sum<double>([&](std::size_t i) { return (theta[i] - m) * (theta[i] - m); }, 0, n);
  return std::sqrt(ss * double(n - 1) / double(n));
}

}  // namespace

MCEstimate estimate(const std::vector<cplx>& values, std::uint64_t base_seed, int failures) {
  const std::size_t n = values.size();
  if (n < 3) throw ParameterError("MC estimate needs at least 3 replicates");
  Moments mo = moments(values);
  MCEstimate e;
  e.n_reps = int(n);
  e.mean = mo.mean;
  e.variance = mo.ss / double(n - 1);
  e.stderr_mean = std::sqrt(e.variance / double(n));
  e.stderr_variance = jackknife_se(loo_variances(values, mo));
  e.base_seed = base_seed;
  e.failures = failures;
  return e;
}

MultiRun run_multi(const Replicate& rep, int n_stats, int n_reps, std::uint64_t base_seed,
                   const RunOptions& opt) {
  require(n_reps >= 2, "n_reps must be >= 2");
  require(n_stats >= 1, "need at least one statistic");
  std::vector<std::vector<cplx>> raw(n_reps);
  std::vector<std::string> err(n_reps);
  std::vector<char> ok(n_reps, 0);
  std::exception_ptr fatal;
  std::mutex fatal_mu;
  std::atomic<int> next{0};

  auto worker = [&] {
    for (;;) {
      int i = next.fetch_add(1);
      if (i >= n_reps) return;
      {
        std::lock_guard<std::mutex> lk(fatal_mu);
        if (fatal) return;
      }
      const std::uint64_t seed = split_seed(base_seed, std::uint64_t(i));
      try {
        auto v = rep(seed);
        if (int(v.size()) != n_stats) throw ParameterError("replicate returned wrong arity");
        raw[i] = std::move(v);
        ok[i] = 1;
      } catch (const NumericError& e) {
        err[i] = e.what();
      } catch (...) {
        std::lock_guard<std::mutex> lk(fatal_mu);
        if (!fatal) fatal = std::current_exception();
      }
    }
  };

  int nt = opt.threads > 0 ? opt.threads : int(std::max(1u, std::thread::hardware_concurrency()));
  nt = std::min(nt, n_reps);
  if (nt <= 1) {
    worker();
  } else {
    std::vector<std::thread> pool;
    for (int t = 0; t < nt; ++t) pool.emplace_back(worker);
    for (auto& th : pool) th.join();
  }
  if (fatal) std::rethrow_exception(fatal);

  MultiRun out;
  out.base_seed = base_seed;
  out.values.assign(n_stats, {});
  for (int i = 0; i < n_reps; ++i) {
    if (ok[i]) {
      out.seeds.push_back(split_seed(base_seed, std::uint64_t(i)));
      for (int s = 0; s < n_stats; ++s) out.values[s].push_back(raw[i][s]);
    } else {
      out.failed.push_back(i);
      out.log.push_back("replicate " + std::to_string(i) + " failed: " + err[i]);
    }
  }
  if (double(out.failed.size()) > opt.max_failure_fraction * n_reps) {
    throw NumericError("experiment error: " + std::to_string(out.failed.size()) + " of " +
                           std::to_string(n_reps) + " replicates failed (first: " +
                           out.log.front() + ")",
                       base_seed);
  }
  for (int s = 0; s < n_stats; ++s)
    out.estimates.push_back(estimate(out.values[s], base_seed, int(out.failed.size())));
  return out;
}

MCEstimate run(const Statistic& stat, const ProcessModel& model, double window_radius, int n_reps,
               std::uint64_t base_seed, const RunOptions& opt) {
  model.validate();
  auto r = run_multi(
      [&](std::uint64_t seed) {
        auto cfg = sample(model, window_radius, seed);
        return std::vector<cplx>{stat(cfg)};
      },
      1, n_reps, base_seed, opt);
  return r.estimates[0];
}

std::string ToleranceRule::describe() const {
  std::ostringstream os;
  const char* tgt = target == Target::Variance ? "variance" : target == Target::MeanRe ? "mean" : "|mean|";
  switch (kind) {
    case RuleKind::KStderr:
      os << tgt << " within " << k << " stderr";
      if (extra_rel > 0) os << " + " << extra_rel * 100 << "% allowance";
      break;
    case RuleKind::Relative: os << tgt << " within " << rel * 100 << "% relative"; break;
    case RuleKind::Bound: os << tgt << " <= oracle"; break;
    case RuleKind::Trend: os << "variance increasing across grid"; break;
  }
  return os.str();
}

namespace {
double target_value(const MCEstimate& mc, Target t) {
  switch (t) {
    case Target::Variance: return mc.variance;
    case Target::MeanRe: return mc.mean.real();
    case Target::MeanAbs: return std::abs(mc.mean);
  }
  return mc.variance;
}
double target_se(const MCEstimate& mc, Target t) {
  return t == Target::Variance ? mc.stderr_variance : mc.stderr_mean;
}
}  // namespace

Verdict compare(const MCEstimate& mc, const Oracle& oracle, const ToleranceRule& rule) {
  Verdict v{mc, oracle, rule, target_value(mc, rule.target), false};
  if (oracle.diverges) {
    // a single estimate can never confirm divergence
    v.pass = false;
    return v;
  }
  const double d = std::abs(v.observed - oracle.value);
  switch (rule.kind) {
    case RuleKind::KStderr:
      v.pass = d <= rule.k * target_se(mc, rule.target) + rule.extra_rel * std::abs(oracle.value);
      break;
    case RuleKind::Relative: v.pass = d <= rule.rel * std::abs(oracle.value); break;
    case RuleKind::Bound: v.pass = v.observed <= oracle.value; break;
    case RuleKind::Trend: v.pass = false; break;
  }
  return v;
}

Verdict compare_trend(const std::vector<MCEstimate>& grid, const ToleranceRule& rule) {
  require(grid.size() >= 2, "trend rule needs at least two grid points");
  require(rule.min_increments.size() + 1 == grid.size(), "one increment per grid step");
  Verdict v{grid.back(), Oracle::divergent(), rule, grid.back().variance, true};
  for (std::size_t i = 1; i < grid.size(); ++i)
    if (!(grid[i].variance - grid[i - 1].variance >= rule.min_increments[i - 1])) v.pass = false;
  return v;
}

PairedDiff paired_difference(const std::vector<cplx>& a, const std::vector<cplx>& b) {
  require(a.size() == b.size() && a.size() >= 3, "paired samples of equal size >= 3");
  const std::size_t n = a.size();
  std::vector<cplx> d(n);
  for (std::size_t i = 0; i < n; ++i) d[i] = a[i] - b[i];
  Moments md = moments(d);
  PairedDiff p;
  p.mean_diff = std::abs(md.mean);
  p.mean_se = std::sqrt(md.ss / double(n - 1) / double(n));
  Moments ma = moments(a), mb = moments(b);
  p.var_diff = (ma.ss - mb.ss) / double(n - 1);
  auto la = loo_variances(a, ma), lb = loo_variances(b, mb);
  for (std::size_t i = 0; i < n; ++i) la[i] -= lb[i];
  p.var_se = jackknife_se(la);
  return p;
}

nlohmann::json estimate_json(const MCEstimate& e) {
  return {{"n_reps", e.n_reps},
          {"mean", {e.mean.real(), e.mean.imag()}},
          {"variance", e.variance},
          {"stderr_mean", e.stderr_mean},
          {"stderr_variance", e.stderr_variance},
          {"base_seed", e.base_seed},
          {"failures", e.failures}};
}

nlohmann::json report_json(const std::string& experiment, const std::string& model,
                           const nlohmann::json& params, const Verdict& v) {
  nlohmann::json j;
  j["experiment"] = experiment;
  j["model"] = model;
  j["params"] = params;
  j["n_reps"] = v.mc.n_reps;
  j["base_seed"] = v.mc.base_seed;
  j["oracle"] = v.oracle.diverges ? nlohmann::json("DIVERGES") : nlohmann::json(v.oracle.value);
  j["mc_mean"] = {v.mc.mean.real(), v.mc.mean.imag()};
  j["mc_variance"] = v.mc.variance;
  j["stderr"] = {{"mean", v.mc.stderr_mean}, {"variance", v.mc.stderr_variance}};
  j["verdict"] = {{"rule", v.rule.describe()}, {"pass", v.pass}};
  return j;
}

void write_replicates_csv(const std::string& path, const MultiRun& run,
                          const std::vector<std::string>& stat_names) {
  std::ofstream os(path);
  if (!os) throw ParameterError("cannot open " + path);
  os << "seed,stat,re,im\n" << std::setprecision(17);
  for (std::size_t s = 0; s < run.values.size(); ++s) {
    const std::string name = s < stat_names.size() ? stat_names[s] : "stat" + std::to_string(s);
    for (std::size_t i = 0; i < run.values[s].size(); ++i)
      os << run.seeds[i] << ',' << name << ',' << run.values[s][i].real() << ','
         << run.values[s][i].imag() << '\n';
  }
}

}  // namespace rwz
