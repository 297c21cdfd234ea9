#include "triflow/oracles.hpp"

#include <Eigen/Dense>
#include <Eigen/SVD>
#include <cmath>
#include <numbers>

namespace triflow::oracles {

namespace {
constexpr double kPi = std::numbers::pi;
using Cplx = std::complex<double>;
}  // namespace

double curve_diffusion_mode_decay(int k, double dt, double radius) {
  if (k < 2)
    throw ValidationError("curve_diffusion_mode_decay: k < 2 (translation mode has rate 0)");
  double rate = (std::pow(k, 4) - std::pow(k, 2)) / std::pow(radius, 4);
  return std::exp(-rate * dt);
}

double SpectralCurveOracle::mode_amplitude(const Vec& samples, int k) const {
  const int n = static_cast<int>(samples.size());
  double a = 0, b = 0;
  for (int j = 0; j < n; ++j) {
    double s = 2.0 * kPi * j / n;
    a += samples[j] * std::cos(k * s);
    b += samples[j] * std::sin(k * s);
  }
  a *= 2.0 / n;
  b *= 2.0 / n;
  return std::hypot(a, b);
}

Eigen::Matrix<Cplx, 6, 6> dense_boundary_matrix(const Vec3& gamma,
                                                const std::array<double, 3>& zeta_norm,
                                                Cplx lambda) {
  Eigen::Matrix<Cplx, 6, 6> A = Eigen::Matrix<Cplx, 6, 6>::Zero();
  for (int i = 0; i < 3; ++i) {
    double q = zeta_norm[i];
    Cplx w = lambda + std::pow(q, 4);
    if (std::abs(w) < 1e-14)
      throw ValidationError("dense_boundary_matrix: lambda + q^4 = 0 excluded");
    // roots of z^4 + w = 0 via the companion matrix of the quartic
    Eigen::Matrix<Cplx, 4, 4> comp = Eigen::Matrix<Cplx, 4, 4>::Zero();
    comp(0, 3) = -w;
    comp(1, 0) = 1;
    comp(2, 1) = 1;
    comp(3, 2) = 1;
    Eigen::ComplexEigenSolver<Eigen::Matrix<Cplx, 4, 4>> es(comp);
    int found = 0;
    Cplx roots[2];
    for (int k = 0; k < 4 && found < 2; ++k) {
      Cplx z = es.eigenvalues()[k];
      if (z.real() < -1e-14) roots[found++] = z;
    }
    if (found != 2) throw ValidationError("dense_boundary_matrix: expected two decaying roots");
    double g = gamma[i];
    double q2 = q * q;
    for (int j = 0; j < 2; ++j) {
      Cplx om = roots[j];
      int c = 2 * i + j;
      A(0, c) = g;
      if (i == 0) A(1, c) = om;
      if (i == 1) A(1, c) = -om;
      if (i == 1) A(2, c) = om;
      if (i == 2) A(2, c) = -om;
      A(3, c) = g * (q2 - om * om);
      if (i == 0) A(4, c) = om * om * om - q2 * om;
      if (i == 1) A(4, c) = -(om * om * om) + q2 * om;
      if (i == 1) A(5, c) = om * om * om - q2 * om;
      if (i == 2) A(5, c) = -(om * om * om) + q2 * om;
    }
  }
  return A;
}

double dense_boundary_min_sv(const Vec3& gamma, const std::array<double, 3>& zeta_norm,
                             Cplx lambda) {
  auto A = dense_boundary_matrix(gamma, zeta_norm, lambda);
  Eigen::JacobiSVD<Eigen::Matrix<Cplx, 6, 6>> svd(A);
  return svd.singularValues().minCoeff();
}

double sphere_area(double r) { return 4.0 * kPi * r * r; }
double sphere_volume(double r) { return 4.0 / 3.0 * kPi * r * r * r; }

double spherical_cap_area(double r, double height) { return 2.0 * kPi * r * height; }

double spherical_cap_area_quadrature(double r, double height, int panels) {
  // surface of revolution: integrate 2 pi r sin(psi) * r dpsi up to the cap rim
  double psi_max = std::acos(std::clamp(1.0 - height / r, -1.0, 1.0));
  double sum = 0;
  for (int k = 0; k < panels; ++k) {
    double psi = psi_max * (k + 0.5) / panels;
    sum += 2.0 * kPi * r * std::sin(psi) * r * (psi_max / panels);
  }
  return sum;
}

double spherical_cap_volume(double r, double height) {
  return kPi * height * height * (3.0 * r - height) / 3.0;
}

double circle_arc_length(double r, double angle) { return r * angle; }

}  // namespace triflow::oracles
