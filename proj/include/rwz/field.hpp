#pragma once

#include <functional>
#include <string>
#include <vector>

#include "rwz/core.hpp"
#include "rwz/mc.hpp"
#include "rwz/pairing.hpp"
#include "rwz/pointproc.hpp"

namespace rwz {

inline constexpr double kPoleGuard = 1e-9;

enum class FieldKind { ZetaCentered, VTrunc, WpTrunc, DeltaAZeta };

struct FieldSample {
  FieldKind kind;
  cplx at;
  cplx shift;  // DeltaAZeta only
  double trunc_radius;
  cplx value;
};

// sum_{|l - z| <= R} 1/(z - l)
cplx v_truncated(const PointConfiguration& cfg, cplx z, double R);
// sum_{|l| <= R} 1/(z - l) + Psi_1(R)
cplx zeta_centered(const PointConfiguration& cfg, cplx z, double R);
// sum_{|l| <= R} (z - l)^{-2}
cplx wp_truncated(const PointConfiguration& cfg, cplx z, double R);
// sum_{|l - z| <= R} (z - l)^{-2}
cplx wp_moving(const PointConfiguration& cfg, cplx z, double R);
// sum_{|l-z-a| <= R} 1/(z+a-l) - sum_{|l-z| <= R} 1/(z-l) + pi c conj(a)
cplx delta_a_zeta(const PointConfiguration& cfg, cplx z, cplx a, double R);

// Retries f at z + k 1e-6 (k = 1..5) when z falls within the pole guard; each retry is logged.
cplx evaluate_nudged(const std::function<cplx(cplx)>& f, cplx z, std::vector<std::string>* log);

FieldSample sample_field(const PointConfiguration& cfg, FieldKind kind, cplx z, double R,
                         cplx a = 0.0, std::vector<std::string>* log = nullptr);

// --- fields paired with a translated Gaussian bump phi(. - z) ---------------

// moving-center V_R
cplx pair_v_moving(const PointConfiguration& cfg, const MovingKernel& k, cplx z);
// moving-center Delta_a zeta
cplx pair_delta_zeta_moving(const PointConfiguration& cfg, const MovingKernel& k, cplx a, cplx z);
// origin-centered, sum over |l| <= S
cplx pair_wp_origin(const PointConfiguration& cfg, const GaussianBump& b, cplx z, double S);
cplx pair_delta_zeta_origin(const PointConfiguration& cfg, const GaussianBump& b, cplx a, cplx z,
                            double S);
// every point of a finite system, with the neutralizing background: sum C(l - z) - pi c conj(z)
cplx pair_v_full(const PointConfiguration& cfg, const GaussianBump& b, cplx z);

// --- residue identity --------------------------------------------------------

struct FluxCheck {
  cplx lhs = 0.0;
  cplx rhs = 0.0;
  double r_used = 0.0;
  int nudges = 0;
  int refined_poles = 0;
  std::vector<std::string> log;
};

// (1/2 pi i) oint_{|z|=r} [sum_{|l|<=R} 1/(z-l) - pi c conj(z)] dz  vs  n(r D) - pi c r^2
FluxCheck charge_flux_identity(const PointConfiguration& cfg, double r, double R, int n_nodes,
                               double margin = 1.0);

// --- stationarity (second moments) -------------------------------------------

using PointStatistic = std::function<cplx(const PointConfiguration&, cplx z)>;

struct StationarityReport {
  std::vector<cplx> z_list;
  std::vector<MCEstimate> at_z;
  struct Pair {
    int i, j;
    PairedDiff diff;
  };
  std::vector<Pair> pairs;
  double k = 3.0;
  bool pass = false;
  MultiRun run;
};

StationarityReport stationarity_second_moment(const ProcessModel& model, double window_radius,
                                              const PointStatistic& stat,
                                              const std::vector<cplx>& z_list, int n_reps,
                                              std::uint64_t base_seed, const RunOptions& opt = {});

// --- spectral pairing tests ------------------------------------------------

enum class PairingKind { Wp, V, DeltaZeta };

struct PairingOptions {
  cplx a = 1.0;             // DeltaZeta shift
  double amplitude = 1.0;   // phi scaled by this; 0 gives the trivial test
  double window = 0.0;      // sampling window (0: default per model)
  double sum_radius = 0.0;  // origin-centered truncation S (0: window - support - |a|)
  double moving_R = 0.0;    // V on non-Ginibre models: moving-center radius
  RunOptions run;
};

struct PairingResult {
  MCEstimate mc;
  double oracle = 0.0;
  std::string estimator;
};

PairingResult variance_pairing_test(const ProcessModel& model, PairingKind kind, double scale,
                                    int n_reps, std::uint64_t base_seed,
                                    const PairingOptions& opt = {});

}  // namespace rwz
