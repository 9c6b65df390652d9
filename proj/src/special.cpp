#include "rwz/special.hpp"

#include <array>
#include <map>
#include <mutex>

namespace rwz {

namespace {

void check_order(int order) {
  require(order >= 0 && order <= 2, "Bessel order must be 0, 1 or 2");
}

// Hankel expansion coefficient a_k(nu) = prod_{j=1..k}(4nu^2 - (2j-1)^2) / (k! 8^k).
void hankel_pq(int order, double x, double& p, double& q) {
  const double mu = 4.0 * order * order;
  double term = 1.0;
  p = 1.0;
  q = 0.0;
  double last = INFINITY;
  for (int k = 1; k < 60; ++k) {
    const double odd = 2.0 * k - 1.0;
    term *= (mu - odd * odd) / (k * 8.0 * x);
    const double mag = std::abs(term);
    if (mag > last || mag < 1e-18) break;  // asymptotic series: stop at the smallest term
    last = mag;
    // k odd -> Q, signs alternate in pairs
    switch (k % 4) {
      case 1: q += term; break;
      case 2: p -= term; break;
      case 3: q -= term; break;
      case 0: p += term; break;
    }
  }
}

}  // namespace

double bessel_j_series(int order, double x) {
  check_order(order);
  const long double h = 0.5L * x;
  const long double h2 = h * h;
  long double term = 1.0L;
  for (int i = 1; i <= order; ++i) term *= h / i;
  long double sum = term;
  for (int k = 1; k < 200; ++k) {
    term *= -h2 / (static_cast<long double>(k) * (k + order));
    sum += term;
    if (std::abs(term) < 1e-22L * std::max(1.0L, std::abs(sum))) break;
  }
  return static_cast<double>(sum);
}

double bessel_j_asymptotic(int order, double x) {
  check_order(order);
  const double ax = std::abs(x);
  double p, q;
  hankel_pq(order, ax, p, q);
  // cos(x - theta) with theta = nu pi/2 + pi/4, expanded so x itself is never rounded.
  const double th = order * pi / 2 + pi / 4;
  const double cx = std::cos(ax), sx = std::sin(ax);
  const double ct = std::cos(th), st = std::sin(th);
  const double cchi = cx * ct + sx * st;
  const double schi = sx * ct - cx * st;
  double v = std::sqrt(2.0 / (pi * ax)) * (p * cchi - q * schi);
  if (x < 0 && order % 2 == 1) v = -v;
  return v;
}

double bessel_j(int order, double x) {
  check_order(order);
  if (std::abs(x) <= kBesselCrossover) return bessel_j_series(order, x);
  return bessel_j_asymptotic(order, x);
}

double bessel_i_scaled(int order, double x) {
  require(order == 0 || order == 1, "scaled I supports orders 0 and 1");
  require(x >= 0, "scaled I needs x >= 0");
  if (x <= 50.0) {
    const long double h = 0.5L * x;
    long double term = order == 0 ? 1.0L : h;
    long double sum = term;
    for (int k = 1; k < 400; ++k) {
      term *= h * h / (static_cast<long double>(k) * (k + order));
      sum += term;
      if (term < 1e-21L * sum) break;
    }
    return static_cast<double>(sum * std::exp(-static_cast<long double>(x)));
  }
  const double mu = 4.0 * order * order;
  double term = 1.0, sum = 1.0;
  for (int k = 1; k < 30; ++k) {
    const double odd = 2.0 * k - 1.0;
    term *= -(mu - odd * odd) / (k * 8.0 * x);
    sum += term;
    if (std::abs(term) < 1e-17) break;
  }
  return sum / std::sqrt(2.0 * pi * x);
}

double bessel_identity_check(double x, double h) {
  if (x == 0.0) throw std::domain_error("bessel_identity_check: x = 0");
  require(h > 0 && h < 0.1, "step must lie in (0, 0.1)");
  auto g = [](double t) { return bessel_j(1, t) / t; };
  const double d = (g(x + h) - g(x - h)) / (2 * h);
  return std::abs(d + bessel_j(2, x) / x);
}

double bessel_asymptotic_residual(int order, double x) {
  require(x >= 1, "asymptotic residual needs x >= 1");
  const double th = order * pi / 2 + pi / 4;
  const double c = std::cos(x) * std::cos(th) + std::sin(x) * std::sin(th);
  return std::pow(x, 1.5) * std::abs(bessel_j(order, x) - std::sqrt(2.0 / (pi * x)) * c);
}

void QuadratureSpec::validate() const {
  require(abs_tol > 0 && rel_tol > 0, "quadrature tolerances must be positive");
  require(max_subdivisions > 0, "max_subdivisions must be positive");
  if (!divergence_mode)
    require(singularity_exponent < 2, "singularity exponent >= 2 needs divergence mode");
}

const GaussRule& gauss_legendre(int n) {
  static std::mutex mu;
  static std::map<int, GaussRule> cache;
  std::lock_guard<std::mutex> lock(mu);
  auto it = cache.find(n);
  if (it != cache.end()) return it->second;
  GaussRule r;
  r.x.resize(n);
  r.w.resize(n);
  for (int i = 0; i < n; ++i) {
    double x = std::cos(pi * (i + 0.75) / (n + 0.5));
    for (int it2 = 0; it2 < 100; ++it2) {
      double p0 = 1.0, p1 = x;
      for (int k = 2; k <= n; ++k) {
        double p2 = ((2.0 * k - 1) * x * p1 - (k - 1.0) * p0) / k;
        p0 = p1;
        p1 = p2;
      }
      const double dp = n * (x * p1 - p0) / (x * x - 1.0);
      const double dx = p1 / dp;
      x -= dx;
      if (std::abs(dx) < 1e-16) {
        double q0 = 1.0, q1 = x;
        for (int k = 2; k <= n; ++k) {
          double q2 = ((2.0 * k - 1) * x * q1 - (k - 1.0) * q0) / k;
          q0 = q1;
          q1 = q2;
        }
        const double d = n * (x * q1 - q0) / (x * x - 1.0);
        r.w[i] = 2.0 / ((1.0 - x * x) * d * d);
        break;
      }
    }
    r.x[i] = x;
  }
  return cache.emplace(n, std::move(r)).first->second;
}

QuadResult radial_integral(const std::function<double(double)>& f, double r_min, double r_max,
                           const QuadratureSpec& spec) {
  spec.validate();
  require(r_min >= 0 && r_max > r_min, "radial_integral: need 0 <= r_min < r_max");
  auto g = [&f](double r) { return f(r) * 2.0 * pi * r; };
  QuadResult res;
  QuadratureSpec inner = spec;

  const bool singular = r_min == 0.0 && spec.singularity_exponent > 0.0;
  double lo = r_min;
  double hi = std::isinf(r_max) ? std::max(1.0, 2.0 * r_min) : r_max;

  if (singular) {
    // Dyadic blocks [hi/2^{k+1}, hi/2^k] toward the origin.
    const double top = std::isinf(r_max) ? 1.0 : r_max;
    double first = 0.0, sum = 0.0, prev = 0.0;
    double b = top;
    for (int k = 0; k < 1000; ++k) {
      double e;
      const double blk = integrate<double>(g, 0.5 * b, b, inner, &e);
      res.error += e;
      sum += blk;
      if (k == 0) first = std::abs(blk);
      if (spec.divergence_mode && k >= 8) {
        // Geometric projection of the remaining blocks.
        const double q = prev != 0.0 ? std::abs(blk / prev) : 0.0;
        const double projected =
            q >= 1.0 - 1e-3 ? INFINITY : std::abs(sum) + std::abs(blk) * q / (1.0 - q);
        if (projected > 1e6 * std::max(first, 1e-300)) {
          res.diverges = true;
          res.value = INFINITY;
          return res;
        }
      }
      prev = blk;
      b *= 0.5;
      if (k >= 8 && std::abs(blk) < 0.01 * spec.abs_tol) break;
      if (b < 1e-300) break;
    }
    res.value = sum;
    if (!std::isinf(r_max)) return res;
    hi = top;
  } else {
    double e;
    res.value = integrate<double>(g, lo, hi, inner, &e);
    res.error = e;
    if (!std::isinf(r_max)) return res;
  }

  // Outward dyadic blocks until the envelope is negligible.
  double a = hi;
  int quiet = 0;
  for (int k = 0; k < 2000; ++k) {
    double e;
    const double blk = integrate<double>(g, a, 2 * a, inner, &e);
    res.value += blk;
    res.error += e;
    const double tol = std::max(spec.abs_tol, spec.rel_tol * std::abs(res.value));
    quiet = std::abs(blk) < 0.1 * tol ? quiet + 1 : 0;
    if (quiet >= 3) return res;
    a *= 2;
  }
  throw AccuracyError("radial_integral: tail did not decay", res.value);
}

cplx oscillatory_integral(const std::function<double(double)>& f, double a, double b,
                          double omega) {
  require(omega >= 1, "omega must be >= 1");
  require(b >= a, "oscillatory_integral: need a <= b");
  if (a == b) return 0.0;
  const GaussRule& gl = gauss_legendre(20);
  const double period = 2 * pi / omega;
  const long panels = std::max<long>(8, static_cast<long>(std::ceil((b - a) / period)));
  if (panels > 5'000'000) throw AccuracyError("oscillatory_integral: node budget exceeded", 0.0);
  const double h = (b - a) / panels;
  cplx total = 0.0;
  for (long p = 0; p < panels; ++p) {
    const double c = a + (p + 0.5) * h;
    cplx s = 0.0;
    for (std::size_t i = 0; i < gl.x.size(); ++i) {
      const double t = c + 0.5 * h * gl.x[i];
      const double ph = -omega * std::cos(t);
      s += gl.w[i] * f(t) * cplx(std::cos(ph), std::sin(ph));
    }
    total += 0.5 * h * s;
  }
  return total;
}

std::vector<PhaseSample> stationary_phase_ratio(const std::function<double(double)>& f, double a,
                                                double b, const std::vector<double>& omega_grid) {
  // |f|_inf and |f'|_1 (total variation) on a fine grid.
  const int m = 20000;
  double sup = 0.0, tv = 0.0, prev = f(a);
  sup = std::abs(prev);
  for (int i = 1; i <= m; ++i) {
    const double v = f(a + (b - a) * i / m);
    sup = std::max(sup, std::abs(v));
    tv += std::abs(v - prev);
    prev = v;
  }
  const double norm = sup + tv;
  std::vector<PhaseSample> out;
  for (double w : omega_grid) {
    require(w >= 1 && w <= 1e4, "omega grid must lie in [1, 1e4]");
    const double mag = std::abs(oscillatory_integral(f, a, b, w));
    out.push_back({w, mag, norm > 0 ? std::sqrt(w) * mag / norm : 0.0});
  }
  return out;
}

double fit_loglog_slope(const std::vector<double>& x, const std::vector<double>& y) {
  require(x.size() == y.size() && x.size() >= 2, "slope fit needs >= 2 points");
  double sx = 0, sy = 0, sxx = 0, sxy = 0;
  const double n = static_cast<double>(x.size());
  for (std::size_t i = 0; i < x.size(); ++i) {
    const double lx = std::log(x[i]), ly = std::log(y[i]);
    sx += lx;
    sy += ly;
    sxx += lx * lx;
    sxy += lx * ly;
  }
  return (n * sxy - sx * sy) / (n * sxx - sx * sx);
}

double envelope_slope(const std::vector<PhaseSample>& samples, int bins_per_decade) {
  std::map<long, PhaseSample> best;
  for (const auto& s : samples) {
    const long bin = static_cast<long>(std::floor(std::log10(s.omega) * bins_per_decade + 1e-9));
    auto it = best.find(bin);
    if (it == best.end() || s.magnitude > it->second.magnitude) best[bin] = s;
  }
  std::vector<double> x, y;
  for (auto& [k, s] : best) {
    if (s.magnitude <= 0) continue;
    x.push_back(s.omega);
    y.push_back(s.magnitude);
  }
  return fit_loglog_slope(x, y);
}

std::vector<double> log_grid(double lo, double hi, int n) {
  require(lo > 0 && hi > lo && n >= 2, "log_grid: bad range");
  std::vector<double> g(n);
  for (int i = 0; i < n; ++i) g[i] = lo * std::pow(hi / lo, double(i) / (n - 1));
  g.back() = hi;
  return g;
}

double expint_e1(double x) {
  require(x > 0, "E1 needs x > 0");
  return -std::expint(-x);
}

}  // namespace rwz
