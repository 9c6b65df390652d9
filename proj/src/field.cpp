#include "rwz/field.hpp"

#include <cmath>
#include <memory>

#include "rwz/spectra.hpp"
#include "rwz/sums.hpp"

namespace rwz {

namespace {

void guard_window(const PointConfiguration& cfg, double needed, const char* what) {
  if (needed > cfg.window_radius * (1 + 1e-12))
    throw WindowError(std::string(what) + ": needs radius " + std::to_string(needed) +
                      " but window is " + std::to_string(cfg.window_radius));
}

cplx pole_term(cplx d, int power) {
  if (std::abs(d) < kPoleGuard) throw EvaluationPointError("evaluation point within pole guard");
  const cplx inv = reciprocal(d);
  if (power == 1) return inv;
  const double x = inv.real(), y = inv.imag();
  return cplx(x * x - y * y, 2 * x * y);
}

// sign * sum_{|l - center| <= R} (z - l)^{-power}, appended to terms
void collect(const PointConfiguration& cfg, cplx center, double R, cplx z, int power, double sign,
             std::vector<cplx>& terms) {
  for (Eigen::Index i = 0; i < cfg.points.size(); ++i) {
    const cplx l = cfg.points[i];
    if (std::abs(l - center) <= R) terms.push_back(sign * pole_term(z - l, power));
  }
}

}  // namespace

cplx v_truncated(const PointConfiguration& cfg, cplx z, double R) {
  require(R > 0, "v_truncated: R must be positive");
  guard_window(cfg, std::abs(z) + R, "v_truncated");
  std::vector<cplx> t;
  collect(cfg, z, R, z, 1, 1.0, t);
  return symmetric_sum(std::move(t));
}

cplx zeta_centered(const PointConfiguration& cfg, cplx z, double R) {
  require(R >= 1, "zeta_centered: need R >= 1");
  guard_window(cfg, std::max(std::abs(z), R), "zeta_centered");
  std::vector<cplx> t;
  collect(cfg, 0.0, R, z, 1, 1.0, t);
  return symmetric_sum(std::move(t)) + psi_sum(cfg, 1, R);
}

cplx wp_truncated(const PointConfiguration& cfg, cplx z, double R) {
  require(R > 0, "wp_truncated: R must be positive");
  guard_window(cfg, std::max(std::abs(z), R), "wp_truncated");
  std::vector<cplx> t;
  collect(cfg, 0.0, R, z, 2, 1.0, t);
  return symmetric_sum(std::move(t));
}

cplx wp_moving(const PointConfiguration& cfg, cplx z, double R) {
  require(R > 0, "wp_moving: R must be positive");
  guard_window(cfg, std::abs(z) + R, "wp_moving");
  std::vector<cplx> t;
  collect(cfg, z, R, z, 2, 1.0, t);
  return symmetric_sum(std::move(t));
}

cplx delta_a_zeta(const PointConfiguration& cfg, cplx z, cplx a, double R) {
  require(R > 0, "delta_a_zeta: R must be positive");
  guard_window(cfg, std::abs(z) + std::abs(a) + R, "delta_a_zeta");
  if (a == 0.0) return 0.0;
  std::vector<cplx> t;
  const cplx za = z + a;
  collect(cfg, za, R, za, 1, 1.0, t);
  collect(cfg, z, R, z, 1, -1.0, t);
  return symmetric_sum(std::move(t)) + pi * cfg.cond_intensity * std::conj(a);
}

cplx evaluate_nudged(const std::function<cplx(cplx)>& f, cplx z, std::vector<std::string>* log) {
  for (int k = 0; k <= 5; ++k) {
    const cplx zk = z + cplx(1e-6 * k, 0.0);
    try {
      return f(zk);
    } catch (const EvaluationPointError&) {
      if (log)
        log->push_back("evaluation point " + std::to_string(zk.real()) + "+" +
                       std::to_string(zk.imag()) + "i within pole guard; nudged by 1e-6");
    }
  }
  throw EvaluationPointError("evaluation point still within pole guard after 5 nudges");
}

FieldSample sample_field(const PointConfiguration& cfg, FieldKind kind, cplx z, double R, cplx a,
                         std::vector<std::string>* log) {
  std::function<cplx(cplx)> f;
  switch (kind) {
    case FieldKind::ZetaCentered: f = [&](cplx w) { return zeta_centered(cfg, w, R); }; break;
    case FieldKind::VTrunc: f = [&](cplx w) { return v_truncated(cfg, w, R); }; break;
    case FieldKind::WpTrunc: f = [&](cplx w) { return wp_truncated(cfg, w, R); }; break;
    case FieldKind::DeltaAZeta: f = [&](cplx w) { return delta_a_zeta(cfg, w, a, R); }; break;
  }
  return {kind, z, kind == FieldKind::DeltaAZeta ? a : cplx(0.0), R, evaluate_nudged(f, z, log)};
}

// ---------------------------------------------------------------------------

cplx pair_v_moving(const PointConfiguration& cfg, const MovingKernel& k, cplx z) {
  guard_window(cfg, std::abs(z) + k.reach(), "pair_v_moving");
  CompensatedSum<cplx> acc;
  for (Eigen::Index i = 0; i < cfg.points.size(); ++i) acc.add(k(cfg.points[i] - z));
  return acc.value();
}

cplx pair_delta_zeta_moving(const PointConfiguration& cfg, const MovingKernel& k, cplx a, cplx z) {
  guard_window(cfg, std::abs(z) + std::abs(a) + k.reach(), "pair_delta_zeta_moving");
  CompensatedSum<cplx> acc;
  for (Eigen::Index i = 0; i < cfg.points.size(); ++i) {
    const cplx l = cfg.points[i];
    acc.add(k(l - a - z) - k(l - z));
  }
  return acc.value() + pi * cfg.cond_intensity * std::conj(a);
}

cplx pair_wp_origin(const PointConfiguration& cfg, const GaussianBump& b, cplx z, double S) {
  guard_window(cfg, S, "pair_wp_origin");
  CompensatedSum<cplx> acc;
  for (Eigen::Index i = 0; i < cfg.points.size(); ++i) {
    const cplx l = cfg.points[i];
    if (std::abs(l) <= S) acc.add(pv_pairing(b, l - z));
  }
  return acc.value();
}

cplx pair_delta_zeta_origin(const PointConfiguration& cfg, const GaussianBump& b, cplx a, cplx z,
                            double S) {
  guard_window(cfg, S, "pair_delta_zeta_origin");
  CompensatedSum<cplx> acc;
  for (Eigen::Index i = 0; i < cfg.points.size(); ++i) {
    const cplx l = cfg.points[i];
    if (std::abs(l) <= S) acc.add(cauchy_pairing(b, l - a - z) - cauchy_pairing(b, l - z));
  }
  return acc.value();
}

cplx pair_v_full(const PointConfiguration& cfg, const GaussianBump& b, cplx z) {
  CompensatedSum<cplx> acc;
  for (Eigen::Index i = 0; i < cfg.points.size(); ++i) acc.add(cauchy_pairing(b, cfg.points[i] - z));
  return acc.value() - pi * cfg.cond_intensity * std::conj(z);
}

// ---------------------------------------------------------------------------

FluxCheck charge_flux_identity(const PointConfiguration& cfg, double r, double R, int n_nodes,
                               double margin) {
  require(r > 0 && n_nodes >= 8, "charge_flux_identity: need r > 0 and n_nodes >= 8");
  require(r + margin <= R, "charge_flux_identity: need r + margin <= R");
  guard_window(cfg, R, "charge_flux_identity");
  FluxCheck out;

  std::vector<cplx> pts;
  for (Eigen::Index i = 0; i < cfg.points.size(); ++i)
    if (std::abs(cfg.points[i]) <= R) pts.push_back(cfg.points[i]);

  auto too_close = [&](double rr) {
    for (cplx l : pts)
      if (std::abs(std::abs(l) - rr) < 1e-3) return true;
    return false;
  };
  static const double offsets[] = {0.002, -0.002, 0.004, -0.004, 0.006};
  double rr = r;
  while (too_close(rr)) {
    if (out.nudges == 5)
      throw GeometryError("contour |z| = " + std::to_string(r) + " collides with a point after 5 nudges",
                          cfg.seed);
    rr = r + offsets[out.nudges++];
    out.log.push_back("contour radius nudged to " + std::to_string(rr));
  }
  out.r_used = rr;

  // Trapezoid error for one pole is q^N / (1 - q^N), q = min(|l|/r, r/|l|).
  std::vector<double> fre, fim;
  std::vector<std::pair<cplx, long>> near;
  for (cplx l : pts) {
    const double a = std::abs(l);
    const double q = a < rr ? a / rr : rr / a;
    const double qn = std::pow(q, n_nodes);
    if (qn / (1 - qn) > 1e-13) {
      long m = n_nodes;
      const long need = static_cast<long>(std::ceil(std::log(1e-16) / std::log(q)));
      while (m < need && m < (1L << 26)) m *= 2;
      near.emplace_back(l, m);
    } else {
      fre.push_back(l.real());
      fim.push_back(l.imag());
    }
  }
  out.refined_poles = int(near.size());

  const double c = cfg.cond_intensity;
  CompensatedSum<cplx> acc;
  const std::size_t nf = fre.size();
  for (int k = 0; k < n_nodes; ++k) {
    const double th = 2 * pi * k / n_nodes;
    const double zr = rr * std::cos(th), zi = rr * std::sin(th);
    double sr = 0.0, si = 0.0;
    for (std::size_t j = 0; j < nf; ++j) {
      const double dr = zr - fre[j], di = zi - fim[j];
      const double n2 = dr * dr + di * di;
      sr += dr / n2;
      si -= di / n2;
    }
    const cplx zk(zr, zi);
    acc.add(zk * (cplx(sr, si) - pi * c * std::conj(zk)) / double(n_nodes));
  }
  for (auto [l, m] : near) {
    CompensatedSum<cplx> one;
    for (long k = 0; k < m; ++k) {
      const cplx zk = std::polar(rr, 2 * pi * double(k) / double(m));
      one.add(zk / (zk - l));
    }
    acc.add(one.value() / double(m));
  }
  out.lhs = acc.value();
  long count = 0;
  for (cplx l : pts)
    if (std::abs(l) <= rr) ++count;
  out.rhs = double(count) - pi * c * rr * rr;
  return out;
}

// ---------------------------------------------------------------------------

StationarityReport stationarity_second_moment(const ProcessModel& model, double window_radius,
                                              const PointStatistic& stat,
                                              const std::vector<cplx>& z_list, int n_reps,
                                              std::uint64_t base_seed, const RunOptions& opt) {
  require(z_list.size() >= 2, "stationarity check needs at least two points");
  StationarityReport rep;
  rep.z_list = z_list;
  rep.run = run_multi(
      [&](std::uint64_t seed) {
        PointConfiguration cfg = sample(model, window_radius, seed);
        std::vector<cplx> v;
        for (cplx z : z_list) v.push_back(stat(cfg, z));
        return v;
      },
      int(z_list.size()), n_reps, base_seed, opt);
  rep.at_z = rep.run.estimates;
  rep.pass = true;
  for (int i = 0; i < int(z_list.size()); ++i)
    for (int j = i + 1; j < int(z_list.size()); ++j) {
      PairedDiff d = paired_difference(rep.run.values[i], rep.run.values[j]);
      rep.pairs.push_back({i, j, d});
      if (!d.pass(rep.k)) rep.pass = false;
    }
  return rep;
}

PairingResult variance_pairing_test(const ProcessModel& model, PairingKind kind, double scale,
                                    int n_reps, std::uint64_t base_seed, const PairingOptions& opt) {
  GaussianBump b(scale);
  const SpectralMeasure rho = spectral_measure(model);
  const double amp = opt.amplitude;
  const double W = opt.window > 0 ? opt.window : 32.0;
  PairingResult res;

  FieldTransform t = kind == PairingKind::Wp ? FieldTransform::Wp
                     : kind == PairingKind::V ? FieldTransform::V
                                              : FieldTransform::DeltaZeta;
  if (kind == PairingKind::V && check_condition_a(rho).diverges)
    throw ParameterError("V pairing needs spectral condition (a); " + family_name(model.family) +
                         " fails it");

  std::function<cplx(const PointConfiguration&)> stat;
  std::shared_ptr<MovingKernel> mk;
  switch (kind) {
    case PairingKind::Wp: {
      const double S = opt.sum_radius > 0 ? opt.sum_radius : W - b.support();
      res.estimator = "origin-centered sum over |l| <= " + std::to_string(S);
      stat = [b, S](const PointConfiguration& cfg) { return pair_wp_origin(cfg, b, 0.0, S); };
      break;
    }
    case PairingKind::DeltaZeta: {
      const cplx a = opt.a;
      const double S = opt.sum_radius > 0 ? opt.sum_radius : W - b.support() - std::abs(a);
      res.estimator = "origin-centered sum over |l| <= " + std::to_string(S);
      stat = [b, a, S](const PointConfiguration& cfg) {
        return pair_delta_zeta_origin(cfg, b, a, 0.0, S);
      };
      break;
    }
    case PairingKind::V:
      if (model.family == Family::Ginibre) {
        res.estimator = "full finite system with background";
        stat = [b](const PointConfiguration& cfg) { return pair_v_full(cfg, b, 0.0); };
      } else {
        const double R = opt.moving_R > 0 ? opt.moving_R : W - b.support();
        mk = std::make_shared<MovingKernel>(b, R);
        res.estimator = "moving-center truncation R = " + std::to_string(R);
        stat = [mk](const PointConfiguration& cfg) { return pair_v_moving(cfg, *mk, 0.0); };
      }
      break;
  }

  if (amp == 0.0) {
    res.mc = estimate(std::vector<cplx>(std::max(n_reps, 3), 0.0), base_seed);
    res.oracle = 0.0;
    return res;
  }
  res.mc = run([&](const PointConfiguration& cfg) { return amp * stat(cfg); }, model, W, n_reps,
               base_seed, opt.run);
  const SpectralMeasure tr = transform_measure(rho, t, opt.a);
  res.oracle = amp * amp * variance_linear_statistic(tr, [&](double r) { return b.fhat(r); }).value;
  return res;
}

}  // namespace rwz
