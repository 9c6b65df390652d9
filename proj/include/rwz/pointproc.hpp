#pragma once

#include <cstdint>
#include <limits>
#include <string>
#include <vector>

#include "rwz/core.hpp"

namespace rwz {

enum class Family { Poisson, CoxTwoPoisson, ShiftedLattice, PerturbedLattice, Ginibre, GEFZeros };

std::string family_name(Family f);
Family family_from_name(const std::string& name);  // throws UnsupportedModelError

struct ProcessModel {
  Family family = Family::Poisson;
  double intensity = 1.0;  // c_Lambda, points per unit area
  double c1 = 1.0, c2 = 1.0, p = 0.5;  // Cox pair
  double a = 0.0;                      // perturbation variance E|zeta|^2
  int n = 1;                           // Ginibre matrix size

  static ProcessModel poisson(double c);
  static ProcessModel cox_two_poisson(double c1, double c2, double p);
  static ProcessModel shifted_lattice();
  static ProcessModel perturbed_lattice(double a);
  static ProcessModel ginibre(int n);
  static ProcessModel gef_zeros();

  bool ergodic() const { return family != Family::CoxTwoPoisson; }
  void validate() const;
};

struct PointConfiguration {
  Points points;
  double window_radius = 0.0;
  // Radius inside which statistics match the infinite-volume process.
  double usable_radius = 0.0;
  ProcessModel model;
  double cond_intensity = 0.0;
  std::uint64_t seed = 0;
  // GEF only: max |F(root)| over returned roots.
  double root_residual = std::numeric_limits<double>::quiet_NaN();
  std::vector<std::string> log;

  Eigen::Index size() const { return points.size(); }
};

PointConfiguration sample_poisson(double intensity, double window_radius, std::uint64_t seed);
PointConfiguration sample_cox_two_poisson(double c1, double c2, double p, double window_radius,
                                          std::uint64_t seed);
PointConfiguration sample_shifted_lattice(double window_radius, std::uint64_t seed);
PointConfiguration sample_perturbed_lattice(double a, double window_radius, std::uint64_t seed);
PointConfiguration sample_ginibre(int n, std::uint64_t seed);
PointConfiguration sample_gef_zeros(double keep_radius, std::uint64_t seed);

// Lattice Z^2 + shift clipped to the window, for fixtures with a known shift.
PointConfiguration lattice_with_shift(cplx shift, double window_radius);

// Draws one realization of `model`. Ginibre ignores the window (uses sqrt(n)).
PointConfiguration sample(const ProcessModel& model, double window_radius, std::uint64_t seed);

double ginibre_usable_radius(int n);
int gef_degree(double keep_radius);

// Dense n x n Ginibre eigenvalues (reference path for tests).
Points ginibre_dense_eigenvalues(int n, std::uint64_t seed);

bool has_duplicates(const Points& pts);

void write_points_csv(const PointConfiguration& cfg, const std::string& path);
std::string config_meta_json(const PointConfiguration& cfg);

}  // namespace rwz
