#include "rwz/pairing.hpp"

#include <cmath>

#include "rwz/special.hpp"
#include "rwz/sums.hpp"

namespace rwz {

namespace {

constexpr double kSupport = 3.6;  // exp(-pi 3.6^2) < 1e-17

// 1 - (1 + t) e^{-t}, accurate for small t
double one_minus_1pt_exp(double t) {
  if (t < 0.1) {
    double s = 0.0, fact = 2.0, pw = t * t;
    for (int n = 2; n < 30; ++n) {
      s += ((n % 2 == 0) ? 1.0 : -1.0) * (n - 1) * pw / fact;
      pw *= t;
      fact *= (n + 1);
    }
    return s;
  }
  return -std::expm1(-t) - t * std::exp(-t);
}

}  // namespace

GaussianBump::GaussianBump(double scale) : s(scale) {
  require(scale > 0, "test function scale must be positive");
}

double GaussianBump::phi(double r) const { return std::exp(-pi * r * r / (s * s)) / (s * s); }

double GaussianBump::mass_within(double r) const { return -std::expm1(-pi * r * r / (s * s)); }

double GaussianBump::fhat(double rho) const { return std::exp(-pi * s * s * rho * rho); }

double GaussianBump::support() const { return kSupport * s; }

cplx cauchy_pairing(const GaussianBump& b, cplx lambda) {
  if (lambda == 0.0) return 0.0;
  return -b.mass_within(std::abs(lambda)) * reciprocal(lambda);
}

cplx pv_pairing(const GaussianBump& b, cplx lambda) {
  if (lambda == 0.0) return 0.0;
  const double r = std::abs(lambda);
  const double t = pi * r * r / (b.s * b.s);
  const cplx inv = reciprocal(lambda);
  const double x = inv.real(), y = inv.imag();
  return one_minus_1pt_exp(t) * cplx(x * x - y * y, 2 * x * y);
}

double MovingKernel::profile_quadrature(const GaussianBump& b, double R, double m) {
  if (m == 0.0) return 0.0;
  const double s2 = b.s * b.s;
  const double lo = std::max(0.0, m - b.support()), hi = std::min(R, m + b.support());
  if (hi <= lo) return 0.0;
  auto f = [&](double rho) {
    const double bb = 2 * pi * rho * m / s2;
    return std::exp(-pi * (m - rho) * (m - rho) / s2) * bessel_i_scaled(1, bb);
  };
  QuadratureSpec q;
  q.abs_tol = 1e-16;
  q.rel_tol = 1e-13;
  return -2 * pi / s2 * integrate<double>(f, lo, hi, q);
}

MovingKernel::MovingKernel(const GaussianBump& b, double R) : bump_(b), R_(R) {
  require(R > 0, "truncation radius must be positive");
  lo_ = std::max(0.0, R - b.support());
  hi_ = R + b.support();
  width_ = 0.5 * b.s;
  degree_ = 24;
  const int pieces = static_cast<int>(std::ceil((hi_ - lo_) / width_));
  width_ = (hi_ - lo_) / pieces;
  const int n = degree_ + 1;
  for (int p = 0; p < pieces; ++p) {
    const double a = lo_ + p * width_;
    std::vector<double> fx(n);
    for (int k = 0; k < n; ++k) {
      const double x = std::cos(pi * (k + 0.5) / n);
      fx[k] = profile_quadrature(b, R, a + 0.5 * width_ * (x + 1));
    }
    std::vector<double> c(n);
    for (int j = 0; j < n; ++j) {
      double sacc = 0.0;
      for (int k = 0; k < n; ++k) sacc += fx[k] * std::cos(pi * j * (k + 0.5) / n);
      c[j] = 2.0 * sacc / n;
    }
    c[0] *= 0.5;
    coef_.push_back(std::move(c));
  }
}

double MovingKernel::profile(double m) const {
  if (m <= 0.0) return 0.0;
  if (m < lo_) return -bump_.mass_within(m) / m;
  if (m >= hi_) return 0.0;
  int p = static_cast<int>((m - lo_) / width_);
  if (p >= int(coef_.size())) p = int(coef_.size()) - 1;
  const double a = lo_ + p * width_;
  const double x = 2 * (m - a) / width_ - 1;
  // Clenshaw
  const auto& c = coef_[p];
  double b1 = 0.0, b2 = 0.0;
  for (int j = int(c.size()) - 1; j >= 1; --j) {
    const double t = 2 * x * b1 - b2 + c[j];
    b2 = b1;
    b1 = t;
  }
  return x * b1 - b2 + c[0];
}

cplx MovingKernel::operator()(cplx mu) const {
  const double m = std::abs(mu);
  if (m == 0.0 || m >= hi_) return 0.0;
  return profile(m) / m * std::conj(mu);
}

}  // namespace rwz
