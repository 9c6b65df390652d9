#pragma once

// Template bodies for special.hpp.

#include <algorithm>
#include <queue>
#include <type_traits>

namespace rwz {

namespace detail {

inline constexpr double kXgk[8] = {
    0.991455371120812639206854697526329, 0.949107912342758524526189684047851,
    0.864864423359769072789712788640926, 0.741531185599394439863864773280788,
    0.586087235467691130294144845693013, 0.405845151377397166906606412076961,
    0.207784955007898467600689403773245, 0.000000000000000000000000000000000};
inline constexpr double kWgk[8] = {
    0.022935322010529224963732008058970, 0.063092092629978553290700663189204,
    0.104790010322250183839876322541518, 0.140653259715525918745189590510238,
    0.169004726639267902826583426598550, 0.190350578064785409913256402421014,
    0.204432940075298892414161999234649, 0.209482141084727828012999174891714};
inline constexpr double kWg[4] = {
    0.129484966168869693270611432679082, 0.279705391489276667901467771423780,
    0.381830050505118944950369775488975, 0.417959183673469387755102040816327};

inline double magnitude(double v) { return std::abs(v); }
inline double magnitude(cplx v) { return std::abs(v); }

template <typename Scalar, typename F>
Scalar gk15(F& f, double a, double b, double& err) {
  const double c = 0.5 * (a + b);
  const double h = 0.5 * (b - a);
  Scalar fc = f(c);
  Scalar k = fc * kWgk[7];
  Scalar g = fc * kWg[3];
  for (int j = 0; j < 7; ++j) {
    const double dx = h * kXgk[j];
    Scalar f1 = f(c - dx);
    Scalar f2 = f(c + dx);
    k += (f1 + f2) * kWgk[j];
    if (j % 2 == 1) g += (f1 + f2) * kWg[j / 2];
  }
  err = magnitude((k - g) * h);
  return k * h;
}

}  // namespace detail

template <typename Scalar, typename F>
Scalar integrate(F&& f, double a, double b, const QuadratureSpec& spec, double* err_out) {
  static_assert(std::is_same_v<Scalar, double> || std::is_same_v<Scalar, cplx>);
  struct Panel {
    double a, b, err;
    Scalar val;
    bool operator<(const Panel& o) const { return err < o.err; }
  };
  if (a == b) {
    if (err_out) *err_out = 0.0;
    return Scalar(0);
  }
  std::priority_queue<Panel> heap;
  double e0;
  Scalar v0 = detail::gk15<Scalar>(f, a, b, e0);
  heap.push({a, b, e0, v0});
  Scalar total = v0;
  double total_err = e0;
  int splits = 0;
  while (total_err > std::max(spec.abs_tol, spec.rel_tol * detail::magnitude(total))) {
    if (splits >= spec.max_subdivisions) {
      if (err_out) *err_out = total_err;
      throw AccuracyError("adaptive quadrature: subdivision limit reached",
                          detail::magnitude(total));
    }
    Panel p = heap.top();
    heap.pop();
    const double m = 0.5 * (p.a + p.b);
    double e1, e2;
    Scalar v1 = detail::gk15<Scalar>(f, p.a, m, e1);
    Scalar v2 = detail::gk15<Scalar>(f, m, p.b, e2);
    total += v1 + v2 - p.val;
    total_err += e1 + e2 - p.err;
    heap.push({p.a, m, e1, v1});
    heap.push({m, p.b, e2, v2});
    ++splits;
    if (total_err < 0) total_err = 0;
  }
  // Re-sum to shed the drift of incremental updates.
  Scalar sum = Scalar(0);
  double esum = 0.0;
  while (!heap.empty()) {
    sum += heap.top().val;
    esum += heap.top().err;
    heap.pop();
  }
  if (err_out) *err_out = esum;
  return sum;
}

}  // namespace rwz
