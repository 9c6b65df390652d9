#include "rwz/pointproc.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <random>

#include <json.hpp>

#include "eig.hpp"
#include "rwz/rng.hpp"

namespace rwz {

namespace {

constexpr int kMaxRedraws = 16;

PointConfiguration make_config(const ProcessModel& m, double window, double cond,
                               std::uint64_t seed, std::vector<cplx>&& pts) {
  PointConfiguration cfg;
  cfg.points = Eigen::Map<const Points>(pts.data(), static_cast<Eigen::Index>(pts.size()));
  cfg.window_radius = window;
  cfg.usable_radius = window;
  cfg.model = m;
  cfg.cond_intensity = cond;
  cfg.seed = seed;
  return cfg;
}

std::uint64_t attempt_seed(std::uint64_t seed, int attempt) {
  return attempt == 0 ? seed : split_seed(seed, 0xD0D0u + static_cast<std::uint64_t>(attempt));
}

void poisson_points(double c, double window, Engine& eng, std::vector<cplx>& out) {
  std::poisson_distribution<long> count(c * pi * window * window);
  const long n = count(eng);
  out.reserve(static_cast<std::size_t>(n));
  for (long i = 0; i < n; ++i) {
    double r = window * std::sqrt(uniform01(eng));
    double th = 2.0 * pi * uniform01(eng);
    out.push_back(std::polar(r, th));
  }
}

template <class Draw>
PointConfiguration with_redraw(std::uint64_t seed, Draw draw) {
  std::vector<std::string> log;
  for (int attempt = 0; attempt < kMaxRedraws; ++attempt) {
    PointConfiguration cfg = draw(attempt_seed(seed, attempt));
    if (!has_duplicates(cfg.points)) {
      cfg.seed = seed;
      cfg.log.insert(cfg.log.begin(), log.begin(), log.end());
      return cfg;
    }
    log.push_back("duplicate points, redraw " + std::to_string(attempt + 1));
  }
  throw NumericError("sampler kept producing duplicate points", seed);
}

}  // namespace

std::string family_name(Family f) {
  switch (f) {
    case Family::Poisson: return "poisson";
    case Family::CoxTwoPoisson: return "cox";
    case Family::ShiftedLattice: return "lattice";
    case Family::PerturbedLattice: return "perturbed";
    case Family::Ginibre: return "ginibre";
    case Family::GEFZeros: return "gef";
  }
  return "?";
}

Family family_from_name(const std::string& name) {
  for (Family f : {Family::Poisson, Family::CoxTwoPoisson, Family::ShiftedLattice,
                   Family::PerturbedLattice, Family::Ginibre, Family::GEFZeros})
    if (family_name(f) == name) return f;
  throw UnsupportedModelError("unknown model family: " + name);
}

ProcessModel ProcessModel::poisson(double c) {
  ProcessModel m;
  m.family = Family::Poisson;
  m.intensity = c;
  m.validate();
  return m;
}

ProcessModel ProcessModel::cox_two_poisson(double c1, double c2, double p) {
  ProcessModel m;
  m.family = Family::CoxTwoPoisson;
  m.c1 = c1;
  m.c2 = c2;
  m.p = p;
  m.intensity = p * c1 + (1 - p) * c2;
  m.validate();
  return m;
}

ProcessModel ProcessModel::shifted_lattice() {
  ProcessModel m;
  m.family = Family::ShiftedLattice;
  m.intensity = 1.0;
  return m;
}

ProcessModel ProcessModel::perturbed_lattice(double a) {
  ProcessModel m;
  m.family = Family::PerturbedLattice;
  m.intensity = 1.0;
  m.a = a;
  m.validate();
  return m;
}

ProcessModel ProcessModel::ginibre(int n) {
  ProcessModel m;
  m.family = Family::Ginibre;
  m.intensity = 1.0 / pi;
  m.n = n;
  m.validate();
  return m;
}

ProcessModel ProcessModel::gef_zeros() {
  ProcessModel m;
  m.family = Family::GEFZeros;
  m.intensity = 1.0 / pi;
  return m;
}

void ProcessModel::validate() const {
  require(intensity > 0, "intensity must be positive");
  switch (family) {
    case Family::CoxTwoPoisson:
      require(c1 > 0 && c2 > 0, "Cox intensities must be positive");
      require(p >= 0 && p <= 1, "Cox mixing probability must lie in [0,1]");
      break;
    case Family::PerturbedLattice: require(a >= 0, "perturbation variance must be >= 0"); break;
    case Family::Ginibre: require(n >= 1, "Ginibre size must be >= 1"); break;
    default: break;
  }
}

bool has_duplicates(const Points& pts) {
  std::vector<cplx> v(pts.data(), pts.data() + pts.size());
  auto less = [](cplx a, cplx b) {
    return a.real() < b.real() || (a.real() == b.real() && a.imag() < b.imag());
  };
  std::sort(v.begin(), v.end(), less);
  return std::adjacent_find(v.begin(), v.end()) != v.end();
}

PointConfiguration sample_poisson(double intensity, double window_radius, std::uint64_t seed) {
  require(intensity > 0, "intensity must be positive");
  require(window_radius > 0, "window radius must be positive");
  const ProcessModel m = ProcessModel::poisson(intensity);
  return with_redraw(seed, [&](std::uint64_t s) {
    Engine eng = make_engine(s);
    std::vector<cplx> pts;
    poisson_points(intensity, window_radius, eng, pts);
    return make_config(m, window_radius, intensity, s, std::move(pts));
  });
}

PointConfiguration sample_cox_two_poisson(double c1, double c2, double p, double window_radius,
                                          std::uint64_t seed) {
  const ProcessModel m = ProcessModel::cox_two_poisson(c1, c2, p);
  require(window_radius > 0, "window radius must be positive");
  return with_redraw(seed, [&](std::uint64_t s) {
    Engine eng = make_engine(s);
    const double c = uniform01(eng) < p ? c1 : c2;
    std::vector<cplx> pts;
    poisson_points(c, window_radius, eng, pts);
    return make_config(m, window_radius, c, s, std::move(pts));
  });
}

PointConfiguration lattice_with_shift(cplx shift, double window_radius) {
  require(window_radius > 0, "window radius must be positive");
  const int k = static_cast<int>(std::ceil(window_radius)) + 1;
  std::vector<cplx> pts;
  for (int i = -k; i <= k; ++i)
    for (int j = -k; j <= k; ++j) {
      cplx z = cplx(i, j) + shift;
      if (std::abs(z) <= window_radius) pts.push_back(z);
    }
  return make_config(ProcessModel::shifted_lattice(), window_radius, 1.0, 0, std::move(pts));
}

PointConfiguration sample_shifted_lattice(double window_radius, std::uint64_t seed) {
  require(window_radius >= 1, "lattice window radius must be >= 1");
  Engine eng = make_engine(seed);
  const double ux = uniform01(eng);
  const double uy = uniform01(eng);
  PointConfiguration cfg = lattice_with_shift({ux, uy}, window_radius);
  cfg.seed = seed;
  return cfg;
}

PointConfiguration sample_perturbed_lattice(double a, double window_radius, std::uint64_t seed) {
  const ProcessModel m = ProcessModel::perturbed_lattice(a);
  require(window_radius >= 1, "lattice window radius must be >= 1");
  const double guard = 6.0 * std::sqrt(a) + 1.0;
  const double sd = std::sqrt(a);
  return with_redraw(seed, [&](std::uint64_t s) {
    Engine eng = make_engine(s);
    const double ux = uniform01(eng);
    const double uy = uniform01(eng);
    const cplx shift(ux, uy);
    const int k = static_cast<int>(std::ceil(window_radius + guard)) + 1;
    std::vector<cplx> pts;
    for (int i = -k; i <= k; ++i)
      for (int j = -k; j <= k; ++j) {
        const cplx zeta = sd * complex_normal(eng);
        cplx z = cplx(i, j) + zeta + shift;
        if (std::abs(z) <= window_radius) pts.push_back(z);
      }
    return make_config(m, window_radius, 1.0, s, std::move(pts));
  });
}

double ginibre_usable_radius(int n) { return std::max(0.0, std::sqrt(double(n)) - 4.0); }

PointConfiguration sample_ginibre(int n, std::uint64_t seed) {
  const ProcessModel m = ProcessModel::ginibre(n);
  return with_redraw(seed, [&](std::uint64_t s) {
    Engine eng = make_engine(s);
    // Hessenberg model: same eigenvalue law as the dense Ginibre matrix.
    Eigen::MatrixXcd h = Eigen::MatrixXcd::Zero(n, n);
    for (int k = 0; k < n; ++k) {
      for (int i = 0; i <= k; ++i) h(i, k) = complex_normal(eng);
      if (k + 1 < n) {
        std::gamma_distribution<double> g(double(n - 1 - k), 1.0);
        h(k + 1, k) = std::sqrt(g(eng));
      }
    }
    Points ev;
    if (!detail::hessenberg_eigenvalues(h, false, ev))
      throw NumericError("Ginibre eigensolver did not converge", s);
    double window = std::sqrt(double(n));
    if (ev.size() > 0) window = std::max(window, ev.cwiseAbs().maxCoeff());
    std::vector<cplx> pts(ev.data(), ev.data() + ev.size());
    PointConfiguration cfg = make_config(m, window, 1.0 / pi, s, std::move(pts));
    cfg.usable_radius = ginibre_usable_radius(n);
    return cfg;
  });
}

Points ginibre_dense_eigenvalues(int n, std::uint64_t seed) {
  require(n >= 1, "Ginibre size must be >= 1");
  Engine eng = make_engine(seed);
  Eigen::MatrixXcd a(n, n);
  for (int j = 0; j < n; ++j)
    for (int i = 0; i < n; ++i) a(i, j) = complex_normal(eng);
  Eigen::ComplexEigenSolver<Eigen::MatrixXcd> es(a, false);
  if (es.info() != Eigen::Success) throw NumericError("dense eigensolver failed", seed);
  return es.eigenvalues();
}

int gef_degree(double keep_radius) {
  return static_cast<int>(std::ceil(12.0 * keep_radius * keep_radius)) + 64;
}

PointConfiguration sample_gef_zeros(double keep_radius, std::uint64_t seed) {
  require(keep_radius >= 1, "GEF keep radius must be >= 1");
  // Beyond this the scaled coefficient profile spans more than the double range.
  require(keep_radius <= 16, "GEF keep radius must be <= 16");
  const ProcessModel m = ProcessModel::gef_zeros();
  const int deg = gef_degree(keep_radius);
  std::vector<std::string> log;

  for (int attempt = 0; attempt < kMaxRedraws; ++attempt) {
    const std::uint64_t s = attempt_seed(seed, attempt);
    Engine eng = make_engine(s);
    std::vector<cplx> zeta(deg + 1);
    for (auto& z : zeta) z = complex_normal(eng);

    // z = sigma w with sigma^N ~ sqrt(N!) so both ends of the profile are comparable.
    const double log_sigma = std::lgamma(deg + 1.0) / (2.0 * deg);
    const double sigma = std::exp(log_sigma);
    std::vector<double> logmag(deg + 1);
    double logmax = -INFINITY;
    for (int k = 0; k <= deg; ++k) {
      logmag[k] = k * log_sigma - 0.5 * std::lgamma(k + 1.0);
      logmax = std::max(logmax, logmag[k]);
    }
    Eigen::VectorXcd b(deg + 1);  // scaled polynomial in w, normalized
    for (int k = 0; k <= deg; ++k) b[k] = zeta[k] * std::exp(logmag[k] - logmax);
    if (!std::isnormal(std::abs(b[deg]))) {
      log.push_back("GEF leading coefficient underflow, redraw " + std::to_string(attempt + 1));
      continue;
    }

    Eigen::MatrixXcd comp = Eigen::MatrixXcd::Zero(deg, deg);
    for (int j = 0; j < deg; ++j) comp(0, j) = -b[deg - 1 - j] / b[deg];
    for (int i = 1; i < deg; ++i) comp(i, i - 1) = 1.0;
    Points w;
    if (!detail::hessenberg_eigenvalues(comp, true, w))
      throw NumericError("GEF companion eigensolver did not converge", s);

    auto poly = [&](cplx x, cplx& dp) {
      cplx p = b[deg];
      dp = 0.0;
      for (int k = deg - 1; k >= 0; --k) {
        dp = dp * x + p;
        p = p * x + b[k];
      }
      return p;
    };
    const double scale = std::exp(logmax);  // F(z) = scale * p(z / sigma)

    std::vector<cplx> roots;
    double residual = 0.0;
    for (Eigen::Index i = 0; i < w.size(); ++i) {
      cplx x = w[i];
      if (std::abs(x) * sigma > keep_radius + 0.5) continue;
      cplx dp;
      double best = std::abs(poly(x, dp));
      for (int it = 0; it < 8 && best > 0; ++it) {
        if (dp == 0.0) break;
        cplx y = x - poly(x, dp) / dp;
        cplx dq;
        double r = std::abs(poly(y, dq));
        if (!(r < best)) break;
        x = y;
        best = r;
        poly(x, dp);
      }
      cplx z = x * sigma;
      if (std::abs(z) <= keep_radius) {
        roots.push_back(z);
        residual = std::max(residual, best * scale);
      }
    }
    bool dup = false;
    for (std::size_t i = 0; i < roots.size() && !dup; ++i)
      for (std::size_t j = i + 1; j < roots.size(); ++j)
        if (std::abs(roots[i] - roots[j]) < 1e-10) {
          dup = true;
          break;
        }
    if (dup) {
      log.push_back("GEF duplicate roots, redraw " + std::to_string(attempt + 1));
      continue;
    }
    PointConfiguration cfg = make_config(m, keep_radius, 1.0 / pi, seed, std::move(roots));
    cfg.root_residual = residual;
    cfg.log = std::move(log);
    return cfg;
  }
  throw NumericError("GEF root finding failed after redraws", seed);
}

PointConfiguration sample(const ProcessModel& m, double window_radius, std::uint64_t seed) {
  switch (m.family) {
    case Family::Poisson: return sample_poisson(m.intensity, window_radius, seed);
    case Family::CoxTwoPoisson: return sample_cox_two_poisson(m.c1, m.c2, m.p, window_radius, seed);
    case Family::ShiftedLattice: return sample_shifted_lattice(window_radius, seed);
    case Family::PerturbedLattice: return sample_perturbed_lattice(m.a, window_radius, seed);
    case Family::Ginibre: return sample_ginibre(m.n, seed);
    case Family::GEFZeros: return sample_gef_zeros(window_radius, seed);
  }
  throw UnsupportedModelError("unknown family");
}

void write_points_csv(const PointConfiguration& cfg, const std::string& path) {
  std::ofstream out(path);
  if (!out) throw NumericError("cannot open " + path);
  out.precision(17);
  out << "re,im\n";
  for (Eigen::Index i = 0; i < cfg.points.size(); ++i)
    out << cfg.points[i].real() << ',' << cfg.points[i].imag() << '\n';
}

std::string config_meta_json(const PointConfiguration& cfg) {
  nlohmann::json j;
  const ProcessModel& m = cfg.model;
  j["model"] = family_name(m.family);
  nlohmann::json params;
  params["intensity"] = m.intensity;
  switch (m.family) {
    case Family::CoxTwoPoisson:
      params["c1"] = m.c1;
      params["c2"] = m.c2;
      params["p"] = m.p;
      break;
    case Family::PerturbedLattice: params["a"] = m.a; break;
    case Family::Ginibre: params["n"] = m.n; break;
    case Family::GEFZeros: params["degree"] = gef_degree(cfg.window_radius); break;
    default: break;
  }
  j["params"] = params;
  j["seed"] = cfg.seed;
  j["window_radius"] = cfg.window_radius;
  j["usable_radius"] = cfg.usable_radius;
  j["cond_intensity"] = cfg.cond_intensity;
  j["n_points"] = cfg.points.size();
  if (!std::isnan(cfg.root_residual)) j["root_residual"] = cfg.root_residual;
  if (!cfg.log.empty()) j["log"] = cfg.log;
  return j.dump(2);
}

}  // namespace rwz
