#include <doctest.h>

#include <cmath>
#include <cstdio>
#include <fstream>

#include <json.hpp>

#include "rwz/mc.hpp"
#include "rwz/rng.hpp"

using namespace rwz;

namespace {

std::vector<cplx> gaussians(int n, std::uint64_t seed) {
  Engine eng = make_engine(seed);
  std::vector<cplx> v(n);
  for (auto& x : v) x = complex_normal(eng);
  return v;
}

long unit_disk_count(const PointConfiguration& c) {
  long n = 0;
  for (Eigen::Index i = 0; i < c.points.size(); ++i)
    if (std::abs(c.points[i]) <= 1.0) ++n;
  return n;
}

}  // namespace

TEST_SUITE("mc") {
  TEST_CASE("seed splitting") {
    CHECK(split_seed(1, 2) == split_seed(1, 2));
    CHECK(split_seed(1, 2) != split_seed(1, 3));
    CHECK(split_seed(1, 2) != split_seed(2, 2));
  }

  TEST_CASE("estimate on small samples") {
    auto e = estimate({cplx(1, 0), cplx(0, 1), cplx(-1, 0), cplx(0, -1)});
    CHECK(std::abs(e.mean) == 0.0);
    CHECK(e.variance == doctest::Approx(4.0 / 3.0));
    // jackknife of the variance against a direct leave-one-out loop
    std::vector<cplx> x{1.0, 2.5, cplx(0, 3), -1.0, cplx(2, 2), 0.5};
    auto ex = estimate(x);
    std::vector<double> loo;
    for (std::size_t i = 0; i < x.size(); ++i) {
      std::vector<cplx> y;
      for (std::size_t j = 0; j < x.size(); ++j)
        if (j != i) y.push_back(x[j]);
      cplx m = 0.0;
      for (auto v : y) m += v;
      m /= double(y.size());
      double s = 0.0;
      for (auto v : y) s += std::norm(v - m);
      loo.push_back(s / double(y.size() - 1));
    }
    double lm = 0.0;
    for (double v : loo) lm += v;
    lm /= double(loo.size());
    double ss = 0.0;
    for (double v : loo) ss += (v - lm) * (v - lm);
    const double n = double(x.size());
    CHECK(ex.stderr_variance == doctest::Approx(std::sqrt(ss * (n - 1) / n)).epsilon(1e-12));
    CHECK_THROWS_AS(estimate({1.0, 2.0}), ParameterError);
  }

  TEST_CASE("zero statistic") {
    auto e = run([](const PointConfiguration&) { return cplx(0.0); }, ProcessModel::poisson(1), 2, 50, 1);
    CHECK(e.mean == cplx(0.0));
    CHECK(e.variance == 0.0);
    CHECK(e.stderr_variance == 0.0);
  }

  TEST_CASE("Poisson unit-disk count") {
    auto e = run([](const PointConfiguration& c) { return cplx(double(unit_disk_count(c))); },
                 ProcessModel::poisson(1), 1.5, 4000, 2);
    CHECK(std::abs(e.mean.real() - pi) <= 3 * e.stderr_mean);
    CHECK(std::abs(e.variance - pi) <= 3 * e.stderr_variance);
  }

  TEST_CASE("determinism across thread counts") {
    auto stat = [](const PointConfiguration& c) { return cplx(double(unit_disk_count(c)), double(c.size())); };
    RunOptions one, four;
    one.threads = 1;
    four.threads = 4;
    auto a = run(stat, ProcessModel::poisson(1), 3, 300, 42, one);
    auto b = run(stat, ProcessModel::poisson(1), 3, 300, 42, four);
    auto c = run(stat, ProcessModel::poisson(1), 3, 300, 42, four);
    CHECK(a.mean == b.mean);
    CHECK(a.variance == b.variance);
    CHECK(a.stderr_variance == b.stderr_variance);
    CHECK(b.variance == c.variance);
    auto d = run(stat, ProcessModel::poisson(1), 3, 300, 43, one);
    CHECK(d.variance != a.variance);
  }

  TEST_CASE("Gaussian fixture: unbiased variance and stderr scaling") {
    auto e = estimate(gaussians(10000, 5));
    CHECK(std::abs(e.variance - 1.0) <= 3 * e.stderr_variance);
    const double s1 = estimate(gaussians(20000, 6)).stderr_variance;
    const double s2 = estimate(gaussians(40000, 6)).stderr_variance;
    CHECK(s2 / s1 >= 0.6);
    CHECK(s2 / s1 <= 0.82);
  }

  TEST_CASE("failure handling") {
    RunOptions o;
    o.threads = 2;
    auto rep = [](std::uint64_t seed) -> std::vector<cplx> {
      if (seed % 50 == 0) throw NumericError("synthetic", seed);
      return {double(seed % 7)};
    };
    // about 2% of seeds fail
    CHECK_THROWS_AS(run_multi(rep, 1, 2000, 3, o), NumericError);
    o.max_failure_fraction = 0.05;
    auto r = run_multi(rep, 1, 2000, 3, o);
    CHECK(!r.failed.empty());
    CHECK(r.values[0].size() + r.failed.size() == 2000);
    CHECK(r.estimates[0].failures == int(r.failed.size()));
    CHECK(r.log.size() == r.failed.size());
    // non-numeric exceptions propagate
    CHECK_THROWS_AS(run_multi([](std::uint64_t) -> std::vector<cplx> { throw ParameterError("bad"); }, 1, 10, 1, o),
                    ParameterError);
    CHECK_THROWS_AS(run_multi(rep, 1, 1, 3, o), ParameterError);
  }

  TEST_CASE("compare") {
    MCEstimate m;
    m.n_reps = 100;
    m.variance = 2.0;
    m.stderr_variance = 0.1;
    CHECK(compare(m, Oracle::finite(2.0)).pass);
    CHECK(compare(m, Oracle::finite(2.29)).pass);
    CHECK_FALSE(compare(m, Oracle::finite(3.0)).pass);  // 10 stderr
    CHECK_FALSE(compare(m, Oracle::divergent()).pass);
    ToleranceRule rel{RuleKind::Relative};
    rel.rel = 0.1;
    CHECK(compare(m, Oracle::finite(2.1), rel).pass);
    CHECK_FALSE(compare(m, Oracle::finite(2.5), rel).pass);
    ToleranceRule allow;
    allow.extra_rel = 0.05;
    CHECK(compare(m, Oracle::finite(2.4), allow).pass);
    ToleranceRule bound{RuleKind::Bound};
    CHECK(compare(m, Oracle::finite(2.0), bound).pass);
    CHECK_FALSE(compare(m, Oracle::finite(1.9), bound).pass);
  }

  TEST_CASE("trend rule") {
    std::vector<MCEstimate> g(3);
    g[0].variance = 1.0;
    g[1].variance = 1.0 + 2 * pi * std::log(2.0);
    g[2].variance = 1.0 + 4 * pi * std::log(2.0) - 0.1;
    ToleranceRule t{RuleKind::Trend};
    t.min_increments = {4.0, 4.0};
    CHECK(compare_trend(g, t).pass);
    t.min_increments = {4.0, 4.3};
    CHECK_FALSE(compare_trend(g, t).pass);
    g[2].variance = g[1].variance;
    t.min_increments = {0.0, 0.0};
    CHECK(compare_trend(g, t).pass);
    t.min_increments = {0.0, 1e-12};
    CHECK_FALSE(compare_trend(g, t).pass);
  }

  TEST_CASE("paired difference") {
    auto a = gaussians(500, 9);
    auto p = paired_difference(a, a);
    CHECK(p.mean_diff == 0.0);
    CHECK(p.var_diff == 0.0);
    CHECK(p.pass());
    auto b = a;
    for (auto& x : b) x *= 1.5;
    CHECK_FALSE(paired_difference(a, b).pass());
  }

  TEST_CASE("report JSON and replicate CSV") {
    MCEstimate m = estimate(gaussians(50, 3), 3);
    auto j = report_json("demo", "poisson", {{"R", 4}}, compare(m, Oracle::divergent()));
    for (const char* k : {"experiment", "model", "params", "n_reps", "base_seed", "oracle", "mc_mean", "mc_variance",
                          "stderr", "verdict"})
      CHECK(j.contains(k));
    CHECK(j["oracle"] == "DIVERGES");
    CHECK(j["verdict"]["pass"] == false);
    auto j2 = report_json("demo", "poisson", {}, compare(m, Oracle::finite(1.0)));
    CHECK(j2["oracle"].is_number());

    auto r = run_multi([](std::uint64_t s) { return std::vector<cplx>{double(s % 3), cplx(0, 1)}; }, 2, 5, 1);
    const std::string path = "mc_test_reps.csv";
    write_replicates_csv(path, r, {"x", "y"});
    std::ifstream in(path);
    std::string line;
    std::getline(in, line);
    CHECK(line == "seed,stat,re,im");
    int rows = 0;
    while (std::getline(in, line)) ++rows;
    CHECK(rows == 10);
    std::remove(path.c_str());
  }
}
