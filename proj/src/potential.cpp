#include "rwz/potential.hpp"

#include <algorithm>
#include <cmath>

#include <json.hpp>

#include "rwz/rng.hpp"
#include "rwz/special.hpp"
#include "rwz/sums.hpp"

namespace rwz {

double delta_a_pi(const PointConfiguration& cfg, cplx z, cplx a, double R, std::optional<cplx> center) {
  require(R > 0, "delta_a_pi: R must be positive");
  const cplx m = center.value_or(z);
  if (std::abs(m) + R + std::abs(a) > cfg.window_radius * (1 + 1e-12))
    throw WindowError("delta_a_pi: summation disk exceeds the window");
  if (a == 0.0) return 0.0;
  const double a2 = std::norm(a);
  CompensatedSum<double> acc;
  for (Eigen::Index i = 0; i < cfg.points.size(); ++i) {
    const cplx l = cfg.points[i];
    if (std::abs(l - m) > R) continue;
    const cplx w = z - l;
    const double w2 = std::norm(w);
    if (std::sqrt(w2) < 1e-9 || std::abs(w + a) < 1e-9)
      throw EvaluationPointError("delta_a_pi: evaluation point within pole guard");
    // log|w + a| - log|w|
    acc.add(0.5 * std::log1p((2 * (a.real() * w.real() + a.imag() * w.imag()) + a2) / w2));
  }
  const double c = cfg.cond_intensity;
  const double drift = -pi * c * (std::conj(a) * (z - m)).real() - 0.5 * pi * c * a2;
  return acc.value() + drift;
}

void Polyline::validate() const {
  require(vertices.size() >= 2, "polyline needs at least 2 vertices");
  for (std::size_t i = 1; i < vertices.size(); ++i)
    require(vertices[i] != vertices[i - 1], "polyline has repeated consecutive vertices");
  if (closed) {
    require(vertices.size() >= 3, "closed polyline needs at least 3 vertices");
    require(vertices.front() != vertices.back(), "closed polyline: do not repeat the first vertex");
  }
}

double Polyline::signed_area() const {
  if (!closed) return 0.0;
  double s = 0.0;
  for (std::size_t i = 0; i < vertices.size(); ++i) {
    const cplx p = vertices[i], q = vertices[(i + 1) % vertices.size()];
    s += p.real() * q.imag() - q.real() * p.imag();
  }
  return 0.5 * s;
}

Polyline Polyline::reversed() const {
  Polyline r = *this;
  std::reverse(r.vertices.begin(), r.vertices.end());
  return r;
}

Polyline Polyline::from_json(const std::string& text) {
  Polyline p;
  nlohmann::json j;
  try {
    j = nlohmann::json::parse(text);
    for (const auto& v : j.at("vertices")) p.vertices.emplace_back(v.at(0).get<double>(), v.at(1).get<double>());
    p.closed = j.value("closed", false);
  } catch (const nlohmann::json::exception& e) {
    throw ParameterError(std::string("polyline JSON: ") + e.what());
  }
  p.validate();
  if (p.closed) require(p.signed_area() > 0, "closed polyline must be counterclockwise");
  return p;
}

Polyline Polyline::circle(double r, int n, cplx center) {
  require(r > 0 && n >= 3, "circle polyline needs r > 0 and n >= 3");
  Polyline p;
  p.closed = true;
  for (int k = 0; k < n; ++k) p.vertices.push_back(center + std::polar(r, 2 * pi * k / n));
  return p;
}

namespace {

double dist_to_segment(cplx x, cplx p, cplx q) {
  const cplx d = q - p;
  double t = ((x - p) * std::conj(d)).real() / std::norm(d);
  t = std::clamp(t, 0.0, 1.0);
  return std::abs(x - (p + t * d));
}

enum class LineKind { Argument, Gradient };

double line_integral(const PointConfiguration& cfg, const Polyline& gamma, double R, cplx anchor,
                     LineKind kind) {
  gamma.validate();
  require(R > 0, "line integral: R must be positive");
  if (std::abs(anchor) + R > cfg.window_radius * (1 + 1e-12))
    throw WindowError("line integral: summation disk exceeds the window");
  std::vector<double> pr, pi_;
  for (Eigen::Index i = 0; i < cfg.points.size(); ++i) {
    const cplx l = cfg.points[i];
    if (std::abs(l - anchor) <= R) {
      pr.push_back(l.real());
      pi_.push_back(l.imag());
    }
  }
  const std::size_t nv = gamma.vertices.size();
  const std::size_t ne = gamma.closed ? nv : nv - 1;
  for (std::size_t e = 0; e < ne; ++e) {
    const cplx p = gamma.vertices[e], q = gamma.vertices[(e + 1) % nv];
    for (Eigen::Index i = 0; i < cfg.points.size(); ++i)
      if (dist_to_segment(cfg.points[i], p, q) < kLineGuard)
        throw GeometryError("polyline passes within 1e-3 of a point; unusable for this realization",
                            cfg.seed);
  }
  const double c = cfg.cond_intensity;
  auto g = [&](cplx z) {
    double sr = 0.0, si = 0.0;
    for (std::size_t j = 0; j < pr.size(); ++j) {
      const double dr = z.real() - pr[j], di = z.imag() - pi_[j];
      const double n2 = dr * dr + di * di;
      sr += dr / n2;
      si -= di / n2;
    }
    const cplx s(sr, si);
    return kind == LineKind::Argument ? s + pi * c * std::conj(anchor)
                                      : s - pi * c * std::conj(z - anchor);
  };
  QuadratureSpec spec;
  spec.abs_tol = 1e-12;
  spec.rel_tol = 1e-12;
  spec.max_subdivisions = 20000;
  struct Edge {
    cplx a, b;
    cplx val;
  };
  std::vector<Edge> edges;
  for (std::size_t e = 0; e < ne; ++e) {
    cplx p = gamma.vertices[e], q = gamma.vertices[(e + 1) % nv];
    // integrate every edge in a canonical direction so that reversal is exact
    const bool flip = std::make_pair(p.real(), p.imag()) > std::make_pair(q.real(), q.imag());
    if (flip) std::swap(p, q);
    const cplx d = q - p;
    cplx v = d * integrate<cplx>([&](double t) { return g(p + t * d); }, 0.0, 1.0, spec);
    edges.push_back({p, q, flip ? -v : v});
  }
  std::sort(edges.begin(), edges.end(), [](const Edge& x, const Edge& y) {
    auto kx = std::make_tuple(x.a.real(), x.a.imag(), x.b.real(), x.b.imag());
    auto ky = std::make_tuple(y.a.real(), y.a.imag(), y.b.real(), y.b.imag());
    return kx < ky;
  });
  CompensatedSum<double> acc;
  for (const auto& e : edges) acc.add(e.val.imag());
  return acc.value() / (2 * pi);
}

}  // namespace

double argument_increment(const PointConfiguration& cfg, const Polyline& gamma, double R, cplx anchor) {
  return line_integral(cfg, gamma, R, anchor, LineKind::Argument);
}

double gradient_flux(const PointConfiguration& cfg, const Polyline& gamma, double R, cplx anchor) {
  return line_integral(cfg, gamma, R, anchor, LineKind::Gradient);
}

std::vector<ChargeFluctuation> charge_fluctuation_variance(const ProcessModel& model,
                                                           const std::vector<double>& r_grid,
                                                           int n_reps, std::uint64_t base_seed,
                                                           const RunOptions& opt) {
  require(!r_grid.empty(), "empty r grid");
  const double rmax = *std::max_element(r_grid.begin(), r_grid.end());
  // One realization serves every radius. The model intensity (not the
  // conditional one) is subtracted, so Cox runs keep the mixture variance.
  auto res = run_multi(
      [&](std::uint64_t seed) {
        PointConfiguration cfg = sample(model, rmax, seed);
        if (rmax > cfg.usable_radius) throw WindowError("radius exceeds usable window");
        std::vector<cplx> v;
        for (double r : r_grid) {
          long n = 0;
          for (Eigen::Index i = 0; i < cfg.points.size(); ++i)
            if (std::abs(cfg.points[i]) <= r) ++n;
          v.push_back(double(n) - pi * model.intensity * r * r);
        }
        return v;
      },
      int(r_grid.size()), n_reps, base_seed, opt);
  std::vector<ChargeFluctuation> out;
  for (std::size_t i = 0; i < r_grid.size(); ++i) out.push_back({r_grid[i], res.estimates[i]});
  return out;
}

}  // namespace rwz
