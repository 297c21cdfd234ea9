#pragma once

#include <string>
#include <vector>

#include "triflow/nonlinear_stepper.hpp"

namespace triflow {

struct DiagnosticsRecord {
  double time = 0;
  double energy = 0;            // sum gamma_i Area(Gamma_i)
  double vol12 = 0, vol13 = 0;  // enclosed volumes (areas for dim 1)
  double angle_error = 0;       // max |angle(nu_i,nu_j) - theta_k| (radians)
  double fb_residual = 0;       // max |grad H . nu| jump
  double ccp_residual = 0;      // max |gamma . H| on Sigma
  double junction_mismatch = 0;
  int fp_iterations = 0;
  double wall_ms = 0;           // not written to CSV (determinism)
};

DiagnosticsRecord compute_diagnostics(const FlowState& state);

// Enclosed volumes by the divergence theorem with the orientation convention
// (N1 into Omega_12, N2 out of it, N3 into Omega_13).
std::pair<double, double> enclosed_volumes(const ClusterMesh& mesh,
                                           const std::array<MatX, 3>& positions,
                                           const std::array<GeometryCache, 3>& caches);

double cluster_energy(const Vec3& gamma, const std::array<GeometryCache, 3>& caches);

// Legacy ASCII VTK, one file per patch.
void write_frame(const FlowState& state, const std::string& path_prefix);

// CSV series with a fixed header; wall time is deliberately omitted so that
// identical configs produce byte-identical files.
extern const char* kSeriesHeader;
void append_series(const DiagnosticsRecord& rec, const std::string& path);
std::vector<DiagnosticsRecord> read_series(const std::string& path);

struct EnergyReportResult {
  bool energy_ok = true;
  bool volume_ok = true;
  double max_energy_increase = 0;   // relative, worst step
  double vol12_drift = 0, vol13_drift = 0;  // relative over the run
  int violating_steps = 0;
  std::string text;
};
EnergyReportResult energy_report(const std::vector<DiagnosticsRecord>& series,
                                 double energy_tolerance, double volume_tolerance);

}  // namespace triflow
