#pragma once

#include <optional>
#include <string>
#include <vector>

#include "rwz/core.hpp"
#include "rwz/mc.hpp"
#include "rwz/pointproc.hpp"

namespace rwz {

// sum_{|l - m| <= R} (log|z + a - l| - log|z - l|) - pi c Re(conj(a)(z - m)) - (pi/2) c |a|^2
// with sum center m (default z, the moving center).
double delta_a_pi(const PointConfiguration& cfg, cplx z, cplx a, double R,
                  std::optional<cplx> center = std::nullopt);

struct Polyline {
  std::vector<cplx> vertices;
  bool closed = false;

  void validate() const;  // throws ParameterError
  double signed_area() const;
  Polyline reversed() const;
  static Polyline from_json(const std::string& text);  // {"vertices": [[re, im], ...], "closed": b}
  static Polyline circle(double r, int n, cplx center = 0.0);
};

inline constexpr double kLineGuard = 1e-3;

// Im[(1/2pi) int_Gamma (sum_{|l - c| <= R} 1/(z - l) + pi c_Lambda conj(c)) dz]: the increment
// of arg F along Gamma; on a closed curve, the number of enclosed points.
double argument_increment(const PointConfiguration& cfg, const Polyline& gamma, double R,
                          cplx anchor = 0.0);

// Im[(1/2pi) int_Gamma (sum_{|l - c| <= R} 1/(z - l) - pi c_Lambda conj(z - c)) dz]; on a closed
// curve, n(inside) - c_Lambda Area.
double gradient_flux(const PointConfiguration& cfg, const Polyline& gamma, double R,
                     cplx anchor = 0.0);

struct ChargeFluctuation {
  double r;
  MCEstimate estimate;  // of n(r D) - c pi r^2
};

std::vector<ChargeFluctuation> charge_fluctuation_variance(const ProcessModel& model,
                                                           const std::vector<double>& r_grid,
                                                           int n_reps, std::uint64_t base_seed,
                                                           const RunOptions& opt = {});

}  // namespace rwz
