#include <doctest.h>

#include <cmath>
#include <cstdio>
#include <fstream>
#include <random>

#include <json.hpp>

#include "rwz/mc.hpp"
#include "rwz/pointproc.hpp"
#include "rwz/rng.hpp"

using namespace rwz;

namespace {

long count_within(const PointConfiguration& cfg, double r) {
  long n = 0;
  for (Eigen::Index i = 0; i < cfg.points.size(); ++i)
    if (std::abs(cfg.points[i]) <= r) ++n;
  return n;
}

bool same(const PointConfiguration& a, const PointConfiguration& b) {
  if (a.points.size() != b.points.size()) return false;
  for (Eigen::Index i = 0; i < a.points.size(); ++i)
    if (a.points[i] != b.points[i]) return false;
  return a.cond_intensity == b.cond_intensity && a.window_radius == b.window_radius;
}

// ordered pairs closer than d among points inside radius r
long close_pairs(const PointConfiguration& cfg, double r, double d) {
  std::vector<cplx> p;
  for (Eigen::Index i = 0; i < cfg.points.size(); ++i)
    if (std::abs(cfg.points[i]) <= r) p.push_back(cfg.points[i]);
  long n = 0;
  for (std::size_t i = 0; i < p.size(); ++i)
    for (std::size_t j = i + 1; j < p.size(); ++j)
      if (std::abs(p[i] - p[j]) < d) ++n;
  return n;
}

// chi-square statistic of point angles over 12 sectors
double angle_chi2(const std::vector<double>& angles) {
  std::vector<double> bins(12, 0.0);
  for (double t : angles) {
    int b = static_cast<int>(std::floor((t + pi) / (2 * pi) * 12));
    bins[std::clamp(b, 0, 11)] += 1;
  }
  const double e = angles.size() / 12.0;
  double x = 0.0;
  for (double b : bins) x += (b - e) * (b - e) / e;
  return x;
}

// chi-square(11) critical value at p = 0.001
constexpr double kChi2Crit = 31.264;

}  // namespace

TEST_SUITE("pointproc") {
  TEST_CASE("model declarations") {
    CHECK(ProcessModel::ginibre(10).intensity == doctest::Approx(1 / pi));
    CHECK(ProcessModel::gef_zeros().intensity == doctest::Approx(1 / pi));
    CHECK(ProcessModel::shifted_lattice().intensity == 1.0);
    CHECK(ProcessModel::perturbed_lattice(0.3).intensity == 1.0);
    CHECK(ProcessModel::cox_two_poisson(1, 3, 0.25).intensity == doctest::Approx(2.5));
    CHECK_THROWS_AS(ProcessModel::poisson(0), ParameterError);
    CHECK_THROWS_AS(ProcessModel::cox_two_poisson(1, 3, 1.5), ParameterError);
    CHECK_THROWS_AS(ProcessModel::perturbed_lattice(-1), ParameterError);
    CHECK_THROWS_AS(ProcessModel::ginibre(0), ParameterError);
    CHECK_THROWS_AS(sample_poisson(1.0, -1, 1), ParameterError);
    CHECK_THROWS_AS(sample_poisson(-1.0, 1, 1), ParameterError);
    for (auto f : {Family::Poisson, Family::CoxTwoPoisson, Family::ShiftedLattice, Family::PerturbedLattice,
                   Family::Ginibre, Family::GEFZeros})
      CHECK(family_from_name(family_name(f)) == f);
  }

  TEST_CASE("reproducibility and window invariant") {
    for (auto m : {ProcessModel::poisson(1), ProcessModel::cox_two_poisson(1, 3, 0.5), ProcessModel::shifted_lattice(),
                   ProcessModel::perturbed_lattice(0.04), ProcessModel::ginibre(64), ProcessModel::gef_zeros()}) {
      for (std::uint64_t seed : {1ull, 0xABCDEFull}) {
        auto a = sample(m, 6, seed);
        auto b = sample(m, 6, seed);
        CHECK(same(a, b));
        for (Eigen::Index i = 0; i < a.points.size(); ++i) CHECK(std::abs(a.points[i]) <= a.window_radius);
        CHECK_FALSE(has_duplicates(a.points));
        CHECK(a.cond_intensity >= 0);
        if (m.ergodic()) CHECK(a.cond_intensity == m.intensity);
      }
    }
  }

  TEST_CASE("Poisson count mean and dispersion") {
    std::vector<cplx> counts;
    for (int i = 0; i < 1000; ++i) counts.push_back(double(sample_poisson(1.0, 10, split_seed(3, i)).size()));
    auto e = estimate(counts);
    CHECK(std::abs(e.mean.real() - 100 * pi) <= 3 * e.stderr_mean);
    CHECK(e.variance / e.mean.real() >= 0.9);
    CHECK(e.variance / e.mean.real() <= 1.1);
  }

  TEST_CASE("Cox mixture") {
    for (int i = 0; i < 20; ++i) CHECK(sample_cox_two_poisson(1, 3, 0.0, 3, i).cond_intensity == 3.0);
    std::vector<cplx> cond;
    for (int i = 0; i < 4000; ++i) cond.push_back(sample_cox_two_poisson(1, 3, 0.5, 1, split_seed(4, i)).cond_intensity);
    auto e = estimate(cond);
    CHECK(std::abs(e.variance - 1.0) <= 3 * e.stderr_variance);

    auto m = run([](const PointConfiguration& c) { return cplx(count_within(c, 40) / (pi * 1600)); },
                 ProcessModel::cox_two_poisson(1, 3, 0.5), 40, 1000, 5);
    CHECK(m.variance == doctest::Approx(1.0).epsilon(0.1));
  }

  TEST_CASE("shifted lattice") {
    auto cfg = lattice_with_shift(cplx(0.25, 0.5), 5);
    Eigen::Index best = 0;
    for (Eigen::Index i = 1; i < cfg.points.size(); ++i)
      if (std::abs(cfg.points[i]) < std::abs(cfg.points[best])) best = i;
    // (0.25, -0.5) ties with it
    CHECK(std::abs(cfg.points[best]) == std::abs(cplx(0.25, 0.5)));
    CHECK((cfg.points.array() == cplx(0.25, 0.5)).any());

    auto a = sample_shifted_lattice(20, 1), b = sample_shifted_lattice(20, 2);
    // translation modulo Z^2: fractional parts are constant within each sample
    auto frac = [](cplx z) { return cplx(z.real() - std::floor(z.real()), z.imag() - std::floor(z.imag())); };
    const cplx fa = frac(a.points[0]), fb = frac(b.points[0]);
    CHECK(fa != fb);
    for (Eigen::Index i = 0; i < a.points.size(); ++i) CHECK(std::abs(frac(a.points[i]) - fa) < 1e-12);
    for (Eigen::Index i = 0; i < b.points.size(); ++i) CHECK(std::abs(frac(b.points[i]) - fb) < 1e-12);

    for (std::uint64_t seed = 0; seed < 50; ++seed) {
      auto c = sample_shifted_lattice(30, seed);
      for (double R : {1.0, 3.7, 10.0, 29.0}) CHECK(std::abs(count_within(c, R) - pi * R * R) <= 8 * R);
    }
  }

  TEST_CASE("perturbed lattice") {
    for (std::uint64_t seed : {1ull, 17ull, 404ull}) CHECK(same(sample_perturbed_lattice(0.0, 12, seed), sample_shifted_lattice(12, seed)));

    // displacement from the nearest shifted-lattice site, against an independent Gaussian sampler
    const double a = 0.04;
    auto wrap = [](double x) { return x - std::round(x); };
    std::vector<cplx> d_model, d_oracle;
    for (std::uint64_t seed = 0; seed < 40; ++seed) {
      auto base = sample_shifted_lattice(10, seed);
      const cplx u(base.points[0].real() - std::floor(base.points[0].real()),
                   base.points[0].imag() - std::floor(base.points[0].imag()));
      auto cfg = sample_perturbed_lattice(a, 10, seed);
      for (Eigen::Index i = 0; i < cfg.points.size(); ++i) {
        const cplx w = cfg.points[i] - u;
        d_model.push_back(std::hypot(wrap(w.real()), wrap(w.imag())));
      }
    }
    std::mt19937_64 eng(2024);
    std::normal_distribution<double> g(0.0, std::sqrt(a / 2));
    for (std::size_t i = 0; i < d_model.size(); ++i) d_oracle.push_back(std::hypot(wrap(g(eng)), wrap(g(eng))));
    auto em = estimate(d_model), eo = estimate(d_oracle);
    CHECK(std::abs(em.mean.real() - eo.mean.real()) <= 3 * std::hypot(em.stderr_mean, eo.stderr_mean));

    auto var = run([](const PointConfiguration& c) { return cplx(double(count_within(c, 30))); },
                   ProcessModel::perturbed_lattice(a), 30, 300, 6);
    CHECK(var.variance / (pi * 900) < 0.5);
  }

  TEST_CASE("Ginibre basics") {
    auto one = sample_ginibre(1, 9);
    CHECK(one.size() == 1);
    Engine eng = make_engine(9);
    const cplx z = complex_normal(eng);
    CHECK(std::abs(one.points[0] - z) < 1e-15);
    CHECK(sample_ginibre(400, 1).window_radius >= 20.0);
    CHECK(sample_ginibre(400, 1).usable_radius == doctest::Approx(ginibre_usable_radius(400)));
  }

  TEST_CASE("Ginibre Hessenberg path matches the dense law") {
    // compare radial profile of the Hessenberg model with dense eigenvalues
    const int n = 64;
    std::vector<cplx> hess, dense;
    for (int i = 0; i < 60; ++i) {
      auto c = sample_ginibre(n, split_seed(10, i));
      auto d = ginibre_dense_eigenvalues(n, split_seed(11, i));
      for (Eigen::Index k = 0; k < n; ++k) {
        hess.push_back(std::norm(c.points[k]));
        dense.push_back(std::norm(d[k]));
      }
    }
    auto eh = estimate(hess), ed = estimate(dense);
    // E|z|^2 over eigenvalues = n (trace of A A^*) / n... = (n+1)/2
    CHECK(std::abs(eh.mean.real() - ed.mean.real()) <= 4 * std::hypot(eh.stderr_mean, ed.stderr_mean));
    CHECK(eh.mean.real() == doctest::Approx((n + 1) / 2.0).epsilon(0.03));
  }

  TEST_CASE("Ginibre bulk density and repulsion") {
    const int n = 400;
    const double ru = ginibre_usable_radius(n);
    std::vector<cplx> counts;
    long gin_pairs = 0, poi_pairs = 0;
    for (int i = 0; i < 200; ++i) {
      auto c = sample_ginibre(n, split_seed(12, i));
      counts.push_back(double(count_within(c, ru)));
      if (i < 60) {
        gin_pairs += close_pairs(c, ru, 0.15);
        poi_pairs += close_pairs(sample_poisson(1 / pi, ru, split_seed(13, i)), ru, 0.15);
      }
    }
    CHECK(estimate(counts).mean.real() == doctest::Approx(ru * ru).epsilon(0.05));
    REQUIRE(poi_pairs > 50);
    CHECK(double(gin_pairs) / poi_pairs < 0.2);
  }

  TEST_CASE("GEF zeros") {
    const double R = 5;
    std::vector<cplx> counts;
    for (int i = 0; i < 500; ++i) {
      auto c = sample_gef_zeros(R, split_seed(14, i));
      counts.push_back(double(c.size()));
      for (Eigen::Index k = 0; k < c.points.size(); ++k) CHECK(std::abs(c.points[k]) <= R);
      // |F| at the root against the largest series term there, e^{|z|^2/2} up to O(1)
      double worst = 0.0;
      for (Eigen::Index k = 0; k < c.points.size(); ++k) worst = std::max(worst, std::exp(std::norm(c.points[k]) / 2));
      CHECK(c.root_residual <= 1e-6 * worst);
    }
    auto e = estimate(counts);
    CHECK(std::abs(e.mean.real() - R * R) <= 3 * e.stderr_mean);
    CHECK(gef_degree(5) == 364);
    CHECK_THROWS_AS(sample_gef_zeros(0.5, 1), ParameterError);
  }

  TEST_CASE("empirical intensity of ergodic models") {
    struct Case {
      ProcessModel m;
      double window;
      int reps;
    };
    for (const auto& cs : {Case{ProcessModel::poisson(2), 8, 500}, Case{ProcessModel::perturbed_lattice(0.1), 8, 500},
                           Case{ProcessModel::ginibre(144), 0, 500}, Case{ProcessModel::gef_zeros(), 4, 500}}) {
      auto e = run(
          [](const PointConfiguration& c) {
            return cplx(count_within(c, c.usable_radius) / (pi * c.usable_radius * c.usable_radius));
          },
          cs.m, cs.window, cs.reps, 15);
      CHECK(std::abs(e.mean.real() - cs.m.intensity) <= 3 * e.stderr_mean);
    }
  }

  TEST_CASE("isotropy smoke test") {
    for (auto m : {ProcessModel::poisson(1), ProcessModel::ginibre(100), ProcessModel::gef_zeros()}) {
      std::vector<double> ang;
      for (int i = 0; i < 50; ++i) {
        auto c = sample(m, 5, split_seed(16, i));
        for (Eigen::Index k = 0; k < c.points.size(); ++k) ang.push_back(std::arg(c.points[k]));
      }
      CHECK(angle_chi2(ang) < kChi2Crit);
    }
  }

  TEST_CASE("CSV and metadata") {
    auto cfg = sample_cox_two_poisson(1, 3, 0.5, 3, 8);
    const std::string path = "pointproc_test_points.csv";
    write_points_csv(cfg, path);
    std::ifstream in(path);
    std::string header;
    std::getline(in, header);
    CHECK(header == "re,im");
    long rows = 0;
    for (std::string line; std::getline(in, line);) ++rows;
    CHECK(rows == cfg.size());
    std::remove(path.c_str());
    auto j = nlohmann::json::parse(config_meta_json(cfg));
    CHECK(j["model"] == "cox");
    CHECK(j["seed"] == 8);
    CHECK(j["cond_intensity"] == cfg.cond_intensity);
    CHECK(j["window_radius"] == 3.0);
  }
}
