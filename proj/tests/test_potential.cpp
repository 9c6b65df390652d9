#include <doctest.h>

#include <cmath>
#include <random>

#include "rwz/field.hpp"
#include "rwz/potential.hpp"
#include "rwz/rng.hpp"

using namespace rwz;

namespace {

PointConfiguration fixture(std::vector<cplx> pts, double window, double c = 0.0) {
  PointConfiguration cfg;
  cfg.points = Points(static_cast<Eigen::Index>(pts.size()));
  for (std::size_t i = 0; i < pts.size(); ++i) cfg.points[static_cast<Eigen::Index>(i)] = pts[i];
  cfg.window_radius = window;
  cfg.usable_radius = window;
  cfg.cond_intensity = c;
  return cfg;
}

Polyline square(cplx center, double half) {
  Polyline p;
  p.closed = true;
  p.vertices = {center + cplx(-half, -half), center + cplx(half, -half), center + cplx(half, half),
                center + cplx(-half, half)};
  return p;
}

// every edge split into k pieces
Polyline refine(const Polyline& g, int k) {
  Polyline r;
  r.closed = g.closed;
  const std::size_t nv = g.vertices.size();
  const std::size_t ne = g.closed ? nv : nv - 1;
  for (std::size_t e = 0; e < ne; ++e) {
    const cplx p = g.vertices[e], q = g.vertices[(e + 1) % nv];
    for (int j = 0; j < k; ++j) r.vertices.push_back(p + (q - p) * (double(j) / k));
  }
  if (!g.closed) r.vertices.push_back(g.vertices.back());
  return r;
}

bool clear_of(const PointConfiguration& cfg, const Polyline& g) {
  const std::size_t nv = g.vertices.size();
  const std::size_t ne = g.closed ? nv : nv - 1;
  for (std::size_t e = 0; e < ne; ++e) {
    const cplx p = g.vertices[e], q = g.vertices[(e + 1) % nv];
    for (Eigen::Index i = 0; i < cfg.points.size(); ++i) {
      const cplx d = q - p;
      const double t = std::clamp(((cfg.points[i] - p) * std::conj(d)).real() / std::norm(d), 0.0, 1.0);
      if (std::abs(cfg.points[i] - (p + t * d)) < 0.01) return false;
    }
  }
  return true;
}

}  // namespace

TEST_SUITE("potential") {
  TEST_CASE("delta_a_pi trivial cases") {
    auto empty = fixture({}, 10);
    CHECK(delta_a_pi(empty, 0.5, 1.0, 4) == 0.0);
    auto cfg = sample_poisson(1.0, 20, 3);
    CHECK(delta_a_pi(cfg, cplx(0.1, 0.2), 0.0, 8) == 0.0);
    CHECK_THROWS_AS(delta_a_pi(cfg, 0.0, 1.0, 19.5), WindowError);
    auto one = fixture({cplx(1, 0)}, 10);
    CHECK_THROWS_AS(delta_a_pi(one, 0.0, 1.0, 4), EvaluationPointError);
    // single point, no background: log|z + a - 1| - log|z - 1|
    CHECK(delta_a_pi(one, cplx(0, 0), cplx(0, 1), 4) == doctest::Approx(std::log(std::sqrt(2.0))).epsilon(1e-14));
  }

  TEST_CASE("gradient relation: d Pi = V / 2") {
    auto cfg = sample_ginibre(400, 7);
    const double R = 8, h = 1e-3;
    for (cplx z : {cplx(0.3, 0.1), cplx(-1.1, 2.0), cplx(2.5, -0.7)}) {
      const cplx v = v_truncated(cfg, z, R);
      // forward difference along x and y; d/dx Pi = Re V, d/dy Pi = -Im V. The O(h) remainder is
      // (h/2) Pi_xx with Pi_xx = -Re wp - pi c (and Pi_yy = Re wp - pi c).
      const cplx w = wp_moving(cfg, z, R);
      const double c = cfg.cond_intensity;
      const double fx = delta_a_pi(cfg, z, h, R) / h - v.real();
      const double fy = delta_a_pi(cfg, z, cplx(0, h), R) / h + v.imag();
      CHECK(std::abs(fx) <= 1e-3 * std::max({1.0, std::abs(v), std::abs(w)}));
      CHECK(std::abs(fy) <= 1e-3 * std::max({1.0, std::abs(v), std::abs(w)}));
      CHECK(std::abs(fx - 0.5 * h * (-w.real() - pi * c)) <= 2e-5 * std::max(1.0, std::abs(w)));
      CHECK(std::abs(fy - 0.5 * h * (w.real() - pi * c)) <= 2e-5 * std::max(1.0, std::abs(w)));
      // central differences with a shared center resolve the drift to O(h^2)
      const double dx = (delta_a_pi(cfg, z, h, R, z) - delta_a_pi(cfg, z, -h, R, z)) / (2 * h);
      const double dy = (delta_a_pi(cfg, z, cplx(0, h), R, z) - delta_a_pi(cfg, z, cplx(0, -h), R, z)) / (2 * h);
      CHECK(std::abs(dx - v.real()) <= 1e-5 * std::max(1.0, std::abs(v)));
      CHECK(std::abs(dy + v.imag()) <= 1e-5 * std::max(1.0, std::abs(v)));
    }
  }

  TEST_CASE("property: increment antisymmetry with a shared center") {
    std::mt19937_64 eng(12);
    std::uniform_real_distribution<double> d(-2, 2);
    for (int trial = 0; trial < 30; ++trial) {
      auto cfg = sample_poisson(1.0, 20, eng());
      const cplx z(d(eng), d(eng)), a(d(eng), d(eng)), m(d(eng) / 2, d(eng) / 2);
      try {
        const double s = delta_a_pi(cfg, z, a, 12, m) + delta_a_pi(cfg, z + a, -a, 12, m);
        CHECK(std::abs(s) <= 1e-11);
      } catch (const EvaluationPointError&) {
      }
    }
  }

  TEST_CASE("polyline validation and JSON") {
    Polyline p;
    p.vertices = {0.0};
    CHECK_THROWS_AS(p.validate(), ParameterError);
    p.vertices = {0.0, 0.0, 1.0};
    CHECK_THROWS_AS(p.validate(), ParameterError);
    CHECK(square(0.0, 1).signed_area() == doctest::Approx(4.0));
    CHECK(square(0.0, 1).reversed().signed_area() == doctest::Approx(-4.0));
    auto j = Polyline::from_json(R"({"vertices": [[0,0],[1,0],[1,1]], "closed": true})");
    CHECK(j.vertices.size() == 3);
    CHECK_THROWS_AS(Polyline::from_json(R"({"vertices": [[0,0],[1,1],[1,0]], "closed": true})"), ParameterError);
    CHECK_THROWS_AS(Polyline::from_json(R"({"vertices": 3})"), ParameterError);
    auto open = Polyline::from_json(R"({"vertices": [[0,0],[1,0]]})");
    CHECK_FALSE(open.closed);
  }

  TEST_CASE("argument increment: single pole and open segment") {
    auto one = fixture({cplx(0.2, -0.1)}, 10);
    CHECK(std::abs(argument_increment(one, square(0.0, 1), 5) - 1.0) <= 1e-8);
    CHECK(std::abs(argument_increment(one, square(3.0, 1), 5)) <= 1e-8);
    auto empty = fixture({}, 10, 1.0);
    Polyline seg;
    seg.vertices = {0.0, 1.0};
    CHECK(std::abs(argument_increment(empty, seg, 5)) <= 1e-14);
    CHECK(std::abs(gradient_flux(empty, seg, 5)) <= 1e-14);
    CHECK_THROWS_AS(argument_increment(one, square(cplx(0.2, -0.1) + cplx(1.0005, 0), 1), 5), GeometryError);
  }

  TEST_CASE("closed circle: count and charge fluctuation") {
    for (std::uint64_t seed = 0; seed < 6; ++seed) {
      auto cfg = sample_poisson(1.0, 20, split_seed(44, seed));
      for (double r : {2.0, 3.5}) {
        auto c = Polyline::circle(r, 256);
        if (!clear_of(cfg, c)) continue;
        long n = 0;
        for (Eigen::Index i = 0; i < cfg.points.size(); ++i)
          if (std::abs(cfg.points[i]) <= r) ++n;
        CHECK(std::abs(argument_increment(cfg, c, 12) - n) <= 1e-8);
        // the polygon inscribed in the circle has the polygon's area, not pi r^2
        CHECK(std::abs(gradient_flux(cfg, c, 12) - (n - cfg.cond_intensity * c.signed_area())) <= 1e-8);
      }
    }
  }

  TEST_CASE("property: refinement, concatenation, reversal") {
    std::mt19937_64 eng(31);
    std::uniform_real_distribution<double> d(-3, 3);
    int tried = 0;
    for (int trial = 0; trial < 20; ++trial) {
      auto cfg = sample_poisson(1.0, 16, eng());
      const cplx c(d(eng), d(eng));
      auto sq = square(c, 1.3);
      if (!clear_of(cfg, sq)) continue;
      ++tried;
      const double base = argument_increment(cfg, sq, 8, 0.0);
      CHECK(std::abs(argument_increment(cfg, refine(sq, 3), 8, 0.0) - base) <= 1e-9);
      CHECK(argument_increment(cfg, sq.reversed(), 8, 0.0) == -base);
      // open pieces sharing the same edges add up exactly
      Polyline a, b;
      a.vertices = {sq.vertices[0], sq.vertices[1], sq.vertices[2]};
      b.vertices = {sq.vertices[2], sq.vertices[3], sq.vertices[0]};
      Polyline all = sq;
      const double pa = argument_increment(cfg, a, 8, 0.0), pb = argument_increment(cfg, b, 8, 0.0);
      CHECK(std::abs(pa + pb - argument_increment(cfg, all, 8, 0.0)) <= 1e-15);
      CHECK(gradient_flux(cfg, sq.reversed(), 8, 0.0) == -gradient_flux(cfg, sq, 8, 0.0));
    }
    CHECK(tried >= 10);
  }

  TEST_CASE("charge fluctuation variance") {
    auto p = charge_fluctuation_variance(ProcessModel::poisson(1), {4.0}, 2000, 51);
    CHECK(std::abs(p[0].estimate.variance - 16 * pi) <= 3 * p[0].estimate.stderr_variance);

    auto l = charge_fluctuation_variance(ProcessModel::shifted_lattice(), {4.0, 8.0, 16.0}, 2000, 52);
    CHECK(l[1].estimate.variance / 64 < l[0].estimate.variance / 16);
    CHECK(l[2].estimate.variance / 256 < l[1].estimate.variance / 64);

    auto c = charge_fluctuation_variance(ProcessModel::cox_two_poisson(1, 3, 0.5), {16.0}, 1000, 53);
    const double area = pi * 256;
    // Var[n - c pi r^2] / area^2 -> Var[c_Lambda] = 1 plus the Poisson part 2 / area
    CHECK(c[0].estimate.variance / (area * area) == doctest::Approx(1.0 + 2.0 / area).epsilon(0.1));
  }
}
