#pragma once

#include <cmath>
#include <type_traits>
#include <vector>

#include "rwz/core.hpp"
#include "rwz/pointproc.hpp"

namespace rwz {

// Neumaier-compensated accumulator for double or cplx.
template <typename T>
class CompensatedSum {
 public:
  void add(T v) {
    if constexpr (std::is_same_v<T, cplx>) {
      add_real(s_re_, c_re_, v.real());
      add_real(s_im_, c_im_, v.imag());
    } else {
      add_real(s_re_, c_re_, v);
    }
  }
  CompensatedSum& operator+=(T v) {
    add(v);
    return *this;
  }
  T value() const {
    if constexpr (std::is_same_v<T, cplx>)
      return cplx(s_re_ + c_re_, s_im_ + c_im_);
    else
      return s_re_ + c_re_;
  }

 private:
  static void add_real(double& s, double& c, double v) {
    const double t = s + v;
    c += std::abs(s) >= std::abs(v) ? (s - t) + v : (v - t) + s;
    s = t;
  }
  double s_re_ = 0, c_re_ = 0, s_im_ = 0, c_im_ = 0;
};

// Sum that is exact under sign symmetries: terms sharing (|re|, |im|) are
// combined through signed counts, then the groups are added with compensation
// in key order. Centrally symmetric term sets sum to exactly zero, and
// negating every term negates the result bit for bit.
cplx symmetric_sum(std::vector<cplx> terms);

// 1/w computed as conj(w)/|w|^2 (sign-exact: 1/(-w) == -(1/w)).
inline cplx reciprocal(cplx w) {
  const double n = w.real() * w.real() + w.imag() * w.imag();
  return cplx(w.real() / n, -w.imag() / n);
}

struct TruncationSpec {
  cplx center = 0.0;
  double radius = 0.0;
  // |center| + radius (+ margin) must fit inside the window.
  void check(const PointConfiguration& cfg, double margin = 0.0) const;
  bool contains(cplx lambda) const { return std::abs(lambda - center) <= radius; }
};

// sum_{1 <= |lambda| <= R} lambda^{-ell}, ell in {1, 2}
cplx psi_sum(const PointConfiguration& cfg, int ell, double R);

// sum_{1 <= |lambda| <= R} |lambda|^{-3}
double psi3_abs_sum(const PointConfiguration& cfg, double R);

// sum_{|l-u|<=R} 1/(z-l) - sum_{|l-v|<=R} 1/(z-l) + pi c (conj u - conj v)
cplx lunar_difference(const PointConfiguration& cfg, cplx u, cplx v, cplx z, double R);

}  // namespace rwz
