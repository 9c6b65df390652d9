#pragma once

#include <vector>

#include "rwz/core.hpp"

namespace rwz {

// phi_s(x) = s^{-2} exp(-pi |x|^2 / s^2): unit mass, fhat(xi) = exp(-pi s^2 |xi|^2).
struct GaussianBump {
  double s = 1.0;

  explicit GaussianBump(double scale);
  double phi(double r) const;
  double mass_within(double r) const;  // 1 - exp(-pi r^2 / s^2)
  double fhat(double rho) const;
  double support() const;  // mass outside is below 1e-17
};

// Per-pole pairings with phi(x) = phi_s(|x|), lambda relative to the bump center.
// int phi(x) / (x - lambda) dm(x)
cplx cauchy_pairing(const GaussianBump& b, cplx lambda);
// p.v. int phi(x) / (x - lambda)^2 dm(x)
cplx pv_pairing(const GaussianBump& b, cplx lambda);

// h_R(mu) = int_{|u| <= R} phi(mu + u) / u dm(u) = H_R(|mu|) conj(mu) / |mu|.
// Pairing of the moving-center truncated sum: int phi(w - z) sum_{|l - w| <= R} 1/(w - l) dm(w)
// = sum_l h_R(l - z).
class MovingKernel {
 public:
  MovingKernel(const GaussianBump& b, double R);
  cplx operator()(cplx mu) const;
  double profile(double m) const;  // H_R(m)
  double reach() const { return R_ + bump_.support(); }
  double R() const { return R_; }
  const GaussianBump& bump() const { return bump_; }

  // Direct quadrature of H_R(m); used to build the table and by tests.
  static double profile_quadrature(const GaussianBump& b, double R, double m);

 private:
  GaussianBump bump_;
  double R_;
  double lo_, hi_, width_;
  int degree_;
  std::vector<std::vector<double>> coef_;  // Chebyshev coefficients per piece
};

}  // namespace rwz
