#pragma once

#include <complex>
#include <map>

#include "triflow/nonlinear_stepper.hpp"

namespace triflow {

enum class LinearizedQuantity { NormalVelocity, MeanCurvature, NormalProduct };

struct FdTableRow {
  double eps;
  double error;      // discrepancy between central difference and formula
  double order;      // observed order vs the previous rung (0 for the first)
};

// Central-difference check of the linearization formulas for V, H and
// <N_i, N_j> against the assembled discrete formulas. `u` must be admissible
// (gamma-weighted trace sum zero); use make_admissible to project.
std::vector<FdTableRow> fd_check_linearization(const FlowState& state, LinearizedQuantity which,
                                               const TripleField& u,
                                               const std::vector<double>& eps_ladder);

TripleField make_admissible(const FlowState& state, TripleField u);

// Boundary-condition complementarity probe: the 6x6 matrix coupling the
// decaying solutions of lambda phi + |zeta'|^4 phi + phi'''' = 0 through the
// junction conditions. A positive smallest singular value certifies that the
// only decaying solution is zero.
struct LopatinskiiProbe {
  Vec3 gamma;
  std::array<double, 3> zeta_norm;   // |zeta'|_{g_i} per patch
  std::complex<double> lambda;       // Re >= 0, (lambda, zeta') != 0
};

struct LopatinskiiResult {
  double min_singular_value = 0;
  Eigen::Matrix<std::complex<double>, 6, 6> matrix;
  std::array<std::complex<double>, 6> exponents;  // two decaying roots per patch
};

LopatinskiiResult lopatinskii_min_sv(const LopatinskiiProbe& probe);

// Metric norms |zeta'| sampled from the mesh at junction-adjacent elements,
// to connect probes with actual geometry.
std::array<double, 3> sample_metric_norms(const FlowState& state, double zeta_magnitude);

// Compatibility of initial data: geometric (GCC) and analytic (ACC) forms.
struct CompatibilityReport {
  std::map<std::string, double> residuals;  // per-condition max residual
  bool pass(const std::map<std::string, double>& thresholds) const;
  std::string text() const;
};

struct CompatibilityResult {
  CompatibilityReport gcc;
  CompatibilityReport acc;
};

CompatibilityResult check_compatibility(const FlowState& state, const TripleField& rho0);

// Threshold set used by the validate CLI; scaled relative to the mesh size.
std::map<std::string, double> default_compatibility_thresholds(const FlowState& state);

}  // namespace triflow
