#include "rwz/sums.hpp"

#include <algorithm>

namespace rwz {

cplx symmetric_sum(std::vector<cplx> terms) {
  struct Item {
    double ar, ai;
    int sr, si;
  };
  std::vector<Item> items;
  items.reserve(terms.size());
  for (cplx t : terms) {
    const double r = t.real(), i = t.imag();
    items.push_back({std::abs(r), std::abs(i), r > 0 ? 1 : (r < 0 ? -1 : 0),
                     i > 0 ? 1 : (i < 0 ? -1 : 0)});
  }
  std::sort(items.begin(), items.end(), [](const Item& a, const Item& b) {
    return a.ar != b.ar ? a.ar < b.ar : a.ai < b.ai;
  });
  CompensatedSum<cplx> acc;
  std::size_t g = 0;
  while (g < items.size()) {
    std::size_t h = g;
    long cr = 0, ci = 0;
    while (h < items.size() && items[h].ar == items[g].ar && items[h].ai == items[g].ai) {
      cr += items[h].sr;
      ci += items[h].si;
      ++h;
    }
    acc.add(cplx(double(cr) * items[g].ar, double(ci) * items[g].ai));
    g = h;
  }
  return acc.value();
}

void TruncationSpec::check(const PointConfiguration& cfg, double margin) const {
  require(radius > 0, "truncation radius must be positive");
  if (std::abs(center) + radius + margin > cfg.window_radius * (1 + 1e-12))
    throw WindowError("truncation disk (center " + std::to_string(std::abs(center)) + ", radius " +
                      std::to_string(radius) + ") exceeds window radius " +
                      std::to_string(cfg.window_radius));
}

cplx psi_sum(const PointConfiguration& cfg, int ell, double R) {
  require(ell == 1 || ell == 2, "psi_sum: ell must be 1 or 2");
  require(R >= 1, "psi_sum: need R >= 1");
  TruncationSpec{0.0, R}.check(cfg);
  std::vector<cplx> terms;
  for (Eigen::Index i = 0; i < cfg.points.size(); ++i) {
    const cplx l = cfg.points[i];
    const double a = std::abs(l);
    if (a < 1.0 || a > R) continue;
    const cplx inv = reciprocal(l);
    if (ell == 1) {
      terms.push_back(inv);
    } else {
      const double x = inv.real(), y = inv.imag();
      terms.push_back(cplx(x * x - y * y, 2 * x * y));
    }
  }
  return symmetric_sum(std::move(terms));
}

double psi3_abs_sum(const PointConfiguration& cfg, double R) {
  require(R >= 1, "psi3_abs_sum: need R >= 1");
  TruncationSpec{0.0, R}.check(cfg);
  std::vector<double> terms;
  for (Eigen::Index i = 0; i < cfg.points.size(); ++i) {
    const double a = std::abs(cfg.points[i]);
    if (a >= 1.0 && a <= R) terms.push_back(1.0 / (a * a * a));
  }
  std::sort(terms.begin(), terms.end());
  CompensatedSum<double> acc;
  for (double t : terms) acc.add(t);
  return acc.value();
}

cplx lunar_difference(const PointConfiguration& cfg, cplx u, cplx v, cplx z, double R) {
  require(R > 0, "lunar_difference: need R > 0");
  if (std::max(std::abs(u), std::abs(v)) + std::abs(z) + R > cfg.window_radius * (1 + 1e-12))
    throw WindowError("lunar domains exceed the window");
  const TruncationSpec A{u, R}, B{v, R};
  std::vector<cplx> terms;
  for (Eigen::Index i = 0; i < cfg.points.size(); ++i) {
    const cplx l = cfg.points[i];
    const bool in_a = A.contains(l), in_b = B.contains(l);
    if (in_a == in_b) continue;
    if (l == z) throw EvaluationPointError("evaluation point coincides with a point");
    const cplx t = reciprocal(z - l);
    terms.push_back(in_a ? t : -t);
  }
  const cplx drift = pi * cfg.cond_intensity * (std::conj(u) - std::conj(v));
  return symmetric_sum(std::move(terms)) + drift;
}

}  // namespace rwz
