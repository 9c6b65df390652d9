#pragma once

#include <functional>
#include <string>
#include <vector>

#include "rwz/core.hpp"
#include "rwz/mc.hpp"
#include "rwz/pointproc.hpp"

namespace rwz {

struct Atom {
  cplx location;
  double mass;
};

// rho = radial(|xi|) * weight(xi) dm  +  sum of atoms  +  atom_at_zero delta_0.
// Atoms off the origin either come from an explicit list or from a mass
// function on Z^2 \ {0} (lattice families).
struct SpectralMeasure {
  std::string name;
  std::function<double(double)> radial;  // isotropic ac density; empty if none
  double radial_limit = 0.0;             // lim radial(r), r -> inf
  std::function<double(cplx)> weight;    // non-radial multiplier; empty means 1
  std::vector<Atom> atoms;
  std::function<double(cplx)> lattice_mass;
  double lattice_cutoff = INFINITY;  // lattice masses below 1e-16 beyond this radius
  double atom_at_zero = 0.0;

  bool has_ac() const { return static_cast<bool>(radial); }
  double ac_density(cplx xi) const;
  double weight_at(cplx xi) const { return weight ? weight(xi) : 1.0; }
  // Explicit atoms plus lattice atoms with 0 < |xi| <= radius (and above the mass cutoff).
  std::vector<Atom> atoms_within(double radius) const;
};

SpectralMeasure spectral_measure(const ProcessModel& model);

// Transformed measures of the derived fields, restricted off the origin.
enum class FieldTransform { Wp, V, DeltaZeta, DeltaPi };
SpectralMeasure transform_measure(const SpectralMeasure& rho, FieldTransform t, cplx a = 0.0);

struct DivergentOr {
  bool diverges = false;
  double value = 0.0;
};

DivergentOr check_condition_a(const SpectralMeasure& rho);

struct LinearVariance {
  double value = 0.0;      // over C \ {0}
  double atom_part = 0.0;  // atom_at_zero * |fhat(0)|^2, reported separately
};

// fhat given as a function of |xi| (radial test functions).
LinearVariance variance_linear_statistic(const SpectralMeasure& rho,
                                         const std::function<double(double)>& fhat_radial);
// General fhat; the ac part is integrated in polar coordinates.
LinearVariance variance_linear_statistic_2d(const SpectralMeasure& rho,
                                            const std::function<cplx(cplx)>& fhat);

// E|Psi_1(R') - Psi_1(R)|^2; Rprime = inf gives the limit (DIVERGES without condition (a)).
DivergentOr variance_psi1_diff(const SpectralMeasure& rho, double R, double Rprime);
// E|Psi_2(R') - Psi_2(R)|^2
double variance_psi2_diff(const SpectralMeasure& rho, double R, double Rprime);

struct RadialCovariance {
  std::function<double(double)> k;  // truncated two-point density at distance t
  double intensity = 0.0;
};

// Pair density of the unscaled Ginibre ensemble, as audited: -pi^{-2} e^{-t^2}.
RadialCovariance ginibre_covariance();
// Alternative normalization -pi^{-2} e^{-pi t^2}; fails the zeroth sum rule, kept for the audit.
RadialCovariance ginibre_covariance_alternative();

struct SumRules {
  double tau1 = 0.0;      // int t^2 |k| dt
  double tau2 = 0.0;      // int t k dt
  double expected = 0.0;  // -c / (2 pi)
  double rel_error = 0.0;
};
SumRules check_sum_rules(const RadialCovariance& rc);

// -4 pi^2 int_r^inf log(t/r) k(t) t dt
double covariance_density_V(const RadialCovariance& rc, double r);

struct HyperfluctuationPoint {
  double R;
  MCEstimate estimate;  // of n(R D) / (pi R^2)
  double limit;         // atom_at_zero
};
std::vector<HyperfluctuationPoint> hyperfluctuation_limit(const ProcessModel& model,
                                                          const std::vector<double>& R_grid,
                                                          int n_reps, std::uint64_t base_seed,
                                                          const RunOptions& opt = {});

std::string spectral_measure_json(const SpectralMeasure& rho, const std::vector<double>& radial_grid,
                                  double atom_radius = 3.0);

}  // namespace rwz
