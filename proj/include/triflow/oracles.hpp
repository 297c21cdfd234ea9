#pragma once

// Deliberately simple brute-force oracles used by the test suites. This
// header must stay independent of the solver modules (enforced by a
// dependency test); it may only include types.hpp and Eigen.

#include <complex>

#include "triflow/types.hpp"

namespace triflow::oracles {

// Linearized curve-diffusion decay of the mode cos(k s) on a circle:
// exp(-(k^4 - k^2)/r^4 * dt). k = 1 is the excluded translation mode.
double curve_diffusion_mode_decay(int k, double dt, double radius);

// Fourier analysis on a closed polyline sampled at uniform angles.
struct SpectralCurveOracle {
  int mode_count = 8;
  double radius = 1.0;

  // amplitude sqrt(a_k^2 + b_k^2) of mode k in `samples` (uniform in angle)
  double mode_amplitude(const Vec& samples, int k) const;
};

// Independent construction of the 6x6 boundary matrix of the frozen ODE
// system lambda phi + q^4 phi + phi'''' = 0 with the six junction rows; the
// quartic roots come from a companion-matrix eigensolve rather than the
// closed-form principal argument.
Eigen::Matrix<std::complex<double>, 6, 6> dense_boundary_matrix(
    const Vec3& gamma, const std::array<double, 3>& zeta_norm, std::complex<double> lambda);

double dense_boundary_min_sv(const Vec3& gamma, const std::array<double, 3>& zeta_norm,
                             std::complex<double> lambda);

// Closed forms plus numeric quadrature cross-checks.
double sphere_area(double r);
double sphere_volume(double r);
double spherical_cap_area(double r, double height);
double spherical_cap_area_quadrature(double r, double height, int panels = 4096);
double spherical_cap_volume(double r, double height);
double circle_arc_length(double r, double angle);

}  // namespace triflow::oracles
