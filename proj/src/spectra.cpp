#include "rwz/spectra.hpp"

#include <algorithm>
#include <cmath>

#include <json.hpp>

#include "rwz/rng.hpp"
#include "rwz/special.hpp"

namespace rwz {

namespace {

// Lattice points nu with k <= |nu| < k+1.
template <typename F>
void for_lattice_shell(long k, F&& fn) {
  const long lo2 = k * k, hi2 = (k + 1) * (k + 1);
  for (long i = -(k + 1); i <= k + 1; ++i) {
    const long rem_hi = hi2 - i * i;
    if (rem_hi <= 0) continue;
    long jh = static_cast<long>(std::sqrt(double(rem_hi)));
    while (jh * jh >= rem_hi) --jh;
    while ((jh + 1) * (jh + 1) < rem_hi) ++jh;
    for (long j = -jh; j <= jh; ++j) {
      const long r2 = i * i + j * j;
      if (r2 >= lo2 && r2 > 0) fn(cplx(double(i), double(j)));
    }
  }
}

// sum over explicit atoms and lattice atoms of term(atom). Shells stop once
// they are negligible against the running total or past the mass cutoff.
// For unit lattices the caller supplies a shell limit and handles the tail.
double atom_sum(const SpectralMeasure& rho, const std::function<double(cplx, double)>& term,
                long max_shell = 100000) {
  double total = 0.0;
  for (const auto& a : rho.atoms) total += term(a.location, a.mass);
  if (!rho.lattice_mass) return total;
  int quiet = 0;
  for (long k = 0; k < max_shell; ++k) {
    if (double(k) > rho.lattice_cutoff) break;
    double shell = 0.0;
    for_lattice_shell(k, [&](cplx nu) { shell += term(nu, rho.lattice_mass(nu)); });
    total += shell;
    quiet = (k >= 3 && std::abs(shell) <= 1e-17 * std::abs(total)) ? quiet + 1 : 0;
    if (quiet >= 2) break;
  }
  return total;
}

// \sum_{l >= 1} l^{-3} e^{-x/l}; direct to l = L, midpoint-integral tail.
double gef_series(double x) {
  const int L = 1000;
  double s = 0.0;
  for (int l = L; l >= 1; --l) {
    const double dl = l;
    s += std::exp(-x / dl) / (dl * dl * dl);
  }
  const double c = L + 0.5;
  const double U = x / c;
  double t;  // 1 - (1+U) e^{-U}
  if (U < 0.1) {
    // sum_{n >= 2} (-1)^n (n-1) U^n / n!
    t = 0.0;
    double fact = 2.0, pw = U * U;
    for (int n = 2; n < 30; ++n) {
      t += ((n % 2 == 0) ? 1.0 : -1.0) * (n - 1) * pw / fact;
      pw *= U;
      fact *= (n + 1);
    }
  } else {
    t = -std::expm1(-U) - U * std::exp(-U);
  }
  const double tail = x > 0 ? t / (x * x) : 1.0 / (2.0 * c * c);
  return s + tail;
}

QuadratureSpec spec_singular() {
  QuadratureSpec q;
  q.abs_tol = 1e-14;
  q.rel_tol = 1e-11;
  q.singularity_exponent = 2.0;
  q.divergence_mode = true;
  return q;
}

}  // namespace

double SpectralMeasure::ac_density(cplx xi) const {
  if (!radial) return 0.0;
  return radial(std::abs(xi)) * weight_at(xi);
}

std::vector<Atom> SpectralMeasure::atoms_within(double radius) const {
  std::vector<Atom> out;
  for (const auto& a : atoms)
    if (std::abs(a.location) <= radius) out.push_back(a);
  if (lattice_mass) {
    const long K = static_cast<long>(std::floor(std::min(radius, lattice_cutoff)));
    for (long k = 0; k <= K; ++k)
      for_lattice_shell(k, [&](cplx nu) {
        if (std::abs(nu) <= radius && std::abs(nu) <= lattice_cutoff)
          out.push_back({nu, lattice_mass(nu)});
      });
  }
  return out;
}

SpectralMeasure spectral_measure(const ProcessModel& model) {
  model.validate();
  SpectralMeasure m;
  m.name = family_name(model.family);
  switch (model.family) {
    case Family::Poisson: {
      const double c = model.intensity;
      m.radial = [c](double) { return c; };
      m.radial_limit = c;
      break;
    }
    case Family::CoxTwoPoisson: {
      const double c = model.p * model.c1 + (1 - model.p) * model.c2;
      m.radial = [c](double) { return c; };
      m.radial_limit = c;
      m.atom_at_zero = model.p * (1 - model.p) * (model.c1 - model.c2) * (model.c1 - model.c2);
      break;
    }
    case Family::Ginibre:
      // Fourier transform of c delta_0 - pi^{-2} e^{-|x|^2} with c = 1/pi
      m.radial = [](double r) { return -std::expm1(-pi * pi * r * r) / pi; };
      m.radial_limit = 1.0 / pi;
      break;
    case Family::GEFZeros:
      m.radial = [](double r) {
        const double r2 = r * r;
        return pi * pi * pi * r2 * r2 * gef_series(pi * pi * r2);
      };
      m.radial_limit = 1.0 / pi;
      break;
    case Family::PerturbedLattice: {
      const double a = model.a;
      m.radial = [a](double r) { return -std::expm1(-2 * a * pi * pi * r * r); };
      m.radial_limit = 1.0;
      m.lattice_mass = [a](cplx nu) { return std::exp(-2 * a * pi * pi * std::norm(nu)); };
      m.lattice_cutoff = std::sqrt(std::log(1e16) / (2 * a * pi * pi));
      break;
    }
    case Family::ShiftedLattice:
      m.lattice_mass = [](cplx) { return 1.0; };
      break;
  }
  return m;
}

SpectralMeasure transform_measure(const SpectralMeasure& rho, FieldTransform t, cplx a) {
  std::function<double(cplx)> w;
  switch (t) {
    case FieldTransform::Wp: w = [](cplx) { return pi * pi; }; break;
    case FieldTransform::V: w = [](cplx xi) { return 1.0 / std::norm(xi); }; break;
    case FieldTransform::DeltaZeta:
      w = [a](cplx xi) {
        const double ph = 2 * pi * (a.real() * xi.real() + a.imag() * xi.imag());
        return 2.0 * (1.0 - std::cos(ph)) / std::norm(xi);
      };
      break;
    case FieldTransform::DeltaPi:
      w = [a](cplx xi) {
        const double ph = 2 * pi * (a.real() * xi.real() + a.imag() * xi.imag());
        const double n2 = std::norm(xi);
        return 2.0 * (1.0 - std::cos(ph)) / (4 * pi * pi * n2 * n2);
      };
      break;
  }
  SpectralMeasure out = rho;
  auto inner = rho.weight;
  out.weight = [w, inner](cplx xi) { return w(xi) * (inner ? inner(xi) : 1.0); };
  out.atoms.clear();
  for (const auto& at : rho.atoms) out.atoms.push_back({at.location, at.mass * w(at.location)});
  if (rho.lattice_mass) {
    auto lm = rho.lattice_mass;
    out.lattice_mass = [lm, w](cplx nu) { return lm(nu) * w(nu); };
  }
  out.atom_at_zero = 0.0;
  out.radial_limit = 0.0;  // not meaningful after reweighting
  return out;
}

DivergentOr check_condition_a(const SpectralMeasure& rho) {
  DivergentOr out;
  if (rho.radial) {
    // angular average of the weight is only needed for transformed measures
    auto f = [&](double r) {
      if (!rho.weight) return rho.radial(r) / (r * r);
      const int m = 64;
      double s = 0.0;
      for (int j = 0; j < m; ++j) s += rho.weight(std::polar(r, 2 * pi * j / m));
      return rho.radial(r) * s / m / (r * r);
    };
    QuadResult q = radial_integral(f, 0.0, 1.0, spec_singular());
    if (q.diverges) {
      out.diverges = true;
      return out;
    }
    out.value += q.value;
  }
  for (const auto& a : rho.atoms_within(1.0)) out.value += a.mass / std::norm(a.location);
  return out;
}

namespace {

// (1/2pi) \int_0^{2pi} g(theta) d theta by the periodic trapezoid rule, doubled until settled.
double angular_mean(const std::function<double(double)>& g) {
  int m = 16;
  double prev = 0.0;
  for (int j = 0; j < m; ++j) prev += g(2 * pi * j / m);
  prev /= m;
  while (m < 8192) {
    double odd = 0.0;
    for (int j = 0; j < m; ++j) odd += g(2 * pi * (j + 0.5) / m);
    const double next = 0.5 * (prev + odd / m);
    m *= 2;
    if (std::abs(next - prev) <= 1e-14 * std::abs(next) + 1e-300) return next;
    prev = next;
  }
  return prev;
}

}  // namespace

LinearVariance variance_linear_statistic(const SpectralMeasure& rho,
                                         const std::function<double(double)>& fhat_radial) {
  if (rho.weight) {
    return variance_linear_statistic_2d(rho, [&](cplx xi) { return cplx(fhat_radial(std::abs(xi))); });
  }
  LinearVariance out;
  if (rho.radial) {
    auto f = [&](double r) {
      const double v = fhat_radial(r);
      return v * v * rho.radial(r);
    };
    QuadResult q = radial_integral(f, 0.0, INFINITY, spec_singular());
    if (q.diverges) throw AccuracyError("linear statistic variance diverges at the origin", INFINITY);
    out.value += q.value;
  }
  out.value += atom_sum(rho, [&](cplx xi, double mass) {
    const double v = fhat_radial(std::abs(xi));
    return mass * v * v;
  });
  const double f0 = fhat_radial(0.0);
  out.atom_part = rho.atom_at_zero * f0 * f0;
  return out;
}

LinearVariance variance_linear_statistic_2d(const SpectralMeasure& rho,
                                            const std::function<cplx(cplx)>& fhat) {
  LinearVariance out;
  if (rho.radial) {
    auto f = [&](double r) {
      const double rad = rho.radial(r);
      if (rad == 0.0) return 0.0;
      return rad * angular_mean([&](double th) {
        const cplx xi = std::polar(r, th);
        return std::norm(fhat(xi)) * rho.weight_at(xi);
      });
    };
    QuadResult q = radial_integral(f, 0.0, INFINITY, spec_singular());
    if (q.diverges) throw AccuracyError("linear statistic variance diverges at the origin", INFINITY);
    out.value += q.value;
  }
  out.value += atom_sum(rho, [&](cplx xi, double mass) { return mass * std::norm(fhat(xi)); });
  out.atom_part = rho.atom_at_zero * std::norm(fhat(0.0));
  return out;
}

namespace {

constexpr long kUnitLatticeShells = 400;

// \int_0^P g(r) 2 pi r dr on panels of width `width`.
double panel_integral(const std::function<double(double)>& g, double P, double width) {
  QuadratureSpec q;
  q.abs_tol = 1e-15;
  q.rel_tol = 1e-12;
  const long n = static_cast<long>(std::ceil(P / width));
  double total = 0.0, comp = 0.0;
  auto h = [&](double r) { return g(r) * 2 * pi * r; };
  for (long k = 0; k < n; ++k) {
    const double v = integrate<double>(h, k * width, std::min(P, (k + 1) * width), q);
    // Neumaier
    const double t = total + v;
    comp += std::abs(total) >= std::abs(v) ? (total - t) + v : (v - t) + total;
    total = t;
  }
  return total + comp;
}

double cutoff_P(double Rmax) { return std::min(2000.0, 4e5 / Rmax); }

}  // namespace

DivergentOr variance_psi1_diff(const SpectralMeasure& rho, double R, double Rprime) {
  require(R >= 1 && Rprime >= R, "variance_psi1_diff: need 1 <= R <= R'");
  DivergentOr out;
  if (Rprime == R) return out;
  const bool limit = std::isinf(Rprime);
  if (limit && check_condition_a(rho).diverges) {
    out.diverges = true;
    return out;
  }
  auto kernel = [&](double r) {
    const double b = bessel_j(0, 2 * pi * R * r);
    const double a = limit ? 0.0 : bessel_j(0, 2 * pi * Rprime * r);
    return (a - b) * (a - b) / (r * r);
  };
  const double Rmax = limit ? R : Rprime;
  const double inv_sum = (limit ? 0.0 : 1.0 / Rprime) + 1.0 / R;
  if (rho.radial) {
    const double P = cutoff_P(Rmax);
    out.value += panel_integral([&](double r) { return r == 0 ? 0.0 : kernel(r) * rho.radial(r); }, P,
                                0.5 / Rmax);
    out.value += rho.radial_limit * inv_sum / (pi * P);
  }
  const bool unit_lattice = rho.lattice_mass && std::isinf(rho.lattice_cutoff);
  out.value += atom_sum(rho, [&](cplx xi, double mass) { return mass * kernel(std::abs(xi)); },
                        unit_lattice ? kUnitLatticeShells : 100000);
  if (unit_lattice) out.value += inv_sum / (pi * kUnitLatticeShells);
  return out;
}

double variance_psi2_diff(const SpectralMeasure& rho, double R, double Rprime) {
  require(R >= 1 && Rprime >= R, "variance_psi2_diff: need 1 <= R <= R'");
  require(std::isfinite(Rprime), "variance_psi2_diff: use a finite proxy for R' = inf");
  if (Rprime == R) return 0.0;
  auto kernel = [&](double r) {
    const double a = bessel_j(1, 2 * pi * Rprime * r) / (Rprime * r);
    const double b = bessel_j(1, 2 * pi * R * r) / (R * r);
    return (a - b) * (a - b);
  };
  const double inv3 = 1.0 / (Rprime * Rprime * Rprime) + 1.0 / (R * R * R);
  double v = 0.0;
  if (rho.radial) {
    const double P = cutoff_P(Rprime);
    v += panel_integral([&](double r) { return r == 0 ? 0.0 : kernel(r) * rho.radial(r); }, P,
                        0.5 / Rprime);
    v += rho.radial_limit * inv3 / (pi * P);
  }
  const bool unit_lattice = rho.lattice_mass && std::isinf(rho.lattice_cutoff);
  v += atom_sum(rho, [&](cplx xi, double mass) { return mass * kernel(std::abs(xi)); },
                unit_lattice ? kUnitLatticeShells : 100000);
  if (unit_lattice) v += inv3 / (pi * kUnitLatticeShells);
  return v;
}

RadialCovariance ginibre_covariance() {
  return {[](double t) { return -std::exp(-t * t) / (pi * pi); }, 1.0 / pi};
}

RadialCovariance ginibre_covariance_alternative() {
  return {[](double t) { return -std::exp(-pi * t * t) / (pi * pi); }, 1.0 / pi};
}

namespace {

// \int_a^inf f(t) dt by blocks [a, a+1], then doubling widths until quiet.
double half_line(const std::function<double(double)>& f, double a) {
  QuadratureSpec q;
  q.abs_tol = 1e-16;
  q.rel_tol = 1e-12;
  double total = integrate<double>(f, a, a + 1.0, q);
  double lo = a + 1.0, w = 1.0;
  int quiet = 0;
  for (int k = 0; k < 200 && quiet < 3; ++k) {
    const double v = integrate<double>(f, lo, lo + w, q);
    total += v;
    quiet = std::abs(v) <= 1e-17 * std::max(1.0, std::abs(total)) ? quiet + 1 : 0;
    lo += w;
    w *= 2;
  }
  return total;
}

}  // namespace

SumRules check_sum_rules(const RadialCovariance& rc) {
  SumRules s;
  s.tau1 = half_line([&](double t) { return t * t * std::abs(rc.k(t)); }, 0.0);
  s.tau2 = half_line([&](double t) { return t * rc.k(t); }, 0.0);
  s.expected = -rc.intensity / (2 * pi);
  const double scale = std::max(std::abs(s.expected), 1e-300);
  s.rel_error = (s.expected == 0.0 && s.tau2 == 0.0) ? 0.0 : std::abs(s.tau2 - s.expected) / scale;
  return s;
}

double covariance_density_V(const RadialCovariance& rc, double r) {
  require(r > 0, "covariance_density_V: need r > 0");
  SumRules s = check_sum_rules(rc);
  if (!std::isfinite(s.tau1))
    throw ModelInconsistencyError("pair density has infinite second moment");
  if (s.rel_error > 1e-4)
    throw ModelInconsistencyError("zeroth sum rule violated: int t k dt = " + std::to_string(s.tau2) +
                                  ", expected " + std::to_string(s.expected));
  return -4 * pi * pi * half_line([&](double t) { return std::log(t / r) * rc.k(t) * t; }, r);
}

std::vector<HyperfluctuationPoint> hyperfluctuation_limit(const ProcessModel& model,
                                                          const std::vector<double>& R_grid,
                                                          int n_reps, std::uint64_t base_seed,
                                                          const RunOptions& opt) {
  require(!R_grid.empty(), "empty R grid");
  for (std::size_t i = 1; i < R_grid.size(); ++i)
    require(R_grid[i] > R_grid[i - 1], "R grid must be increasing");
  const double limit = spectral_measure(model).atom_at_zero;
  std::vector<HyperfluctuationPoint> out;
  for (std::size_t i = 0; i < R_grid.size(); ++i) {
    const double R = R_grid[i];
    auto stat = [R](const PointConfiguration& cfg) {
      if (R > cfg.usable_radius) throw WindowError("disk exceeds usable radius");
      long n = 0;
      for (Eigen::Index j = 0; j < cfg.points.size(); ++j)
        if (std::abs(cfg.points[j]) <= R) ++n;
      return cplx(double(n) / (pi * R * R));
    };
    out.push_back({R, run(stat, model, R, n_reps, split_seed(base_seed, 0xF00 + i), opt), limit});
  }
  return out;
}

std::string spectral_measure_json(const SpectralMeasure& rho, const std::vector<double>& radial_grid,
                                  double atom_radius) {
  nlohmann::json j;
  j["name"] = rho.name;
  j["radial_grid"] = radial_grid;
  std::vector<double> dens;
  for (double r : radial_grid) dens.push_back(rho.ac_density(cplx(r, 0.0)));
  j["ac_density"] = dens;
  j["radial_limit"] = rho.radial_limit;
  nlohmann::json atoms = nlohmann::json::array();
  for (const auto& a : rho.atoms_within(atom_radius))
    atoms.push_back({a.location.real(), a.location.imag(), a.mass});
  j["atoms"] = atoms;
  j["atom_radius"] = atom_radius;
  j["atom_at_zero"] = rho.atom_at_zero;
  return j.dump(2);
}

}  // namespace rwz
