#pragma once

#include <cmath>
#include <functional>
#include <vector>

#include "rwz/core.hpp"

namespace rwz {

// --- Bessel functions -------------------------------------------------------

// Series/asymptotic crossover for J_nu.
inline constexpr double kBesselCrossover = 17.0;

double bessel_j(int order, double x);
double bessel_j_series(int order, double x);
double bessel_j_asymptotic(int order, double x);

// e^{-x} I_nu(x) for x >= 0, nu in {0, 1}.
double bessel_i_scaled(int order, double x);

// |centered difference of J1(x)/x + J2(x)/x|
double bessel_identity_check(double x, double h);

// x^{3/2} |J_nu(x) - sqrt(2/(pi x)) cos(x - nu pi/2 - pi/4)|
double bessel_asymptotic_residual(int order, double x);

// --- Quadrature -------------------------------------------------------------

struct QuadratureSpec {
  double abs_tol = 1e-13;
  double rel_tol = 1e-11;
  int max_subdivisions = 4000;
  // integrand may blow up like r^{-p} at 0
  double singularity_exponent = 0.0;
  bool divergence_mode = false;

  void validate() const;
};

struct QuadResult {
  double value = 0.0;
  double error = 0.0;
  bool diverges = false;
};

struct GaussRule {
  std::vector<double> x, w;  // on [-1, 1]
};
const GaussRule& gauss_legendre(int n);

namespace detail {
// Gauss-Kronrod 7/15 on one panel; returns the K15 estimate and |K15 - G7|.
template <typename Scalar, typename F>
Scalar gk15(F& f, double a, double b, double& err);
}  // namespace detail

// Adaptive Gauss-Kronrod over [a, b]; Scalar is double or cplx.
template <typename Scalar, typename F>
Scalar integrate(F&& f, double a, double b, const QuadratureSpec& spec, double* err = nullptr);

// \int_{r_min}^{r_max} f(r) 2 pi r dr. r_max may be +inf. In divergence mode
// the dyadic block sums toward the singular endpoint are projected and
// DIVERGES is reported when they would exceed 1e6 times the first block.
QuadResult radial_integral(const std::function<double(double)>& f, double r_min, double r_max,
                           const QuadratureSpec& spec);

// \int_a^b e^{-i omega cos t} f(t) dt with one 20-node Gauss-Legendre panel per period.
cplx oscillatory_integral(const std::function<double(double)>& f, double a, double b,
                          double omega);

struct PhaseSample {
  double omega;
  double magnitude;  // |integral|
  double ratio;      // omega^{1/2} |integral| / (|f|_inf + |f'|_1)
};

std::vector<PhaseSample> stationary_phase_ratio(const std::function<double(double)>& f, double a,
                                                double b, const std::vector<double>& omega_grid);

double fit_loglog_slope(const std::vector<double>& x, const std::vector<double>& y);

// Slope of the upper envelope: maxima over bins of `bins_per_decade` in log omega.
double envelope_slope(const std::vector<PhaseSample>& samples, int bins_per_decade = 4);

std::vector<double> log_grid(double lo, double hi, int n);

// E_1(x) for x > 0
double expint_e1(double x);

}  // namespace rwz

#include "rwz/special_impl.hpp"
