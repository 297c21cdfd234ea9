#pragma once

#include <memory>
#include <optional>
#include <vector>

#include "triflow/config.hpp"
#include "triflow/linear_solver.hpp"

namespace triflow {

struct DiagnosticsRecord;

// Everything the flow needs about the current reference cluster plus the
// graph state (rho, derived mu) over it.
struct FlowState {
  ClusterMesh mesh;  // reference Gamma_*
  PhysicsParams params;
  Mat3 coupling;     // T(theta)
  std::array<GeometryCache, 3> caches;
  TangentialFrame frame;
  AssembledSystem sys;
  std::shared_ptr<StepOperator> op;  // factorization cache for params.dt

  TripleField rho;
  TripleField mu;                      // always mu_from_rho(rho)
  std::array<MatX, 3> positions;       // deformed positions at rho
  double time = 0;
  int step_index = 0;
  int re_reference_count = 0;
  double eps_ref_abs = 0;

  void set_rho(const TripleField& r);  // updates mu and positions
};

FlowState make_state(ClusterMesh mesh, PhysicsParams params);

// Geometric operators of the deformed cluster, pulled back to reference
// indices. V is zero unless previous positions and dt are supplied.
struct NonlinearOps {
  TripleField V;          // normal velocity
  TripleField H;          // mean curvature
  TripleField lapH;       // Laplace-Beltrami of H on the deformed cluster
  TripleField mass_ratio; // deformed / reference vertex mass (discrete J_rho)
  Vec nn12, nn23;         // <N1,N2>, <N2,N3> at junction nodes
  Vec gammaH;             // sum gamma_i H_i at nodes
  Vec flux12, flux23;     // grad H . nu jumps at nodes (deformed)
  Vec gamma_lapH;         // sum gamma_i (Delta H)_i at nodes
  Vec junction_mismatch;  // max pairwise distance of deformed junction images
  std::array<MatX, 3> deformed;
};

NonlinearOps nonlinear_operators(const FlowState& state, const TripleField& rho,
                                 const std::optional<std::array<MatX, 3>>& prev_positions = {},
                                 double dt = 0);

struct Inhomogeneities {
  TripleField f;
  std::array<Vec, 6> b;
  NonlinearOps ops;  // evaluated at the guess, reused by callers
};

// S(w) of the fixed-point map: inhomogeneities such that a solve_step
// returning u = u_guess again satisfies the nonlinear discrete step.
Inhomogeneities residual_inhomogeneities(const FlowState& state, const TripleField& u_guess,
                                         const Vec& v_guess_stacked,
                                         const std::array<MatX, 3>& prev_positions, double dt);

// Discrete linearized potential of a state: v = M^{-1}[(K + C_v M) u +
// load_v(b2(u), b3(u))]; the iteration's starting guess for v.
Vec initial_potential(const FlowState& state, const TripleField& u,
                      const NonlinearOps& ops);

struct StepReport {
  int iterations = 0;
  double final_update = 0;
  std::vector<double> update_norms;
  std::vector<double> contraction_ratios;
  SolveReport solve;
  bool converged = false;
};

struct StepResult {
  TripleField rho;
  StepReport report;
};

// One time step: the frozen-operator fixed-point iteration (a single pass by
// default, the full Lambda iteration when params.full_fixed_point is set).
StepResult fixed_point_step(FlowState& state, double dt);

// Adopt the deformed cluster as the new reference and reset rho to zero.
void re_reference(FlowState& state);

struct Trajectory {
  std::vector<DiagnosticsRecord> records;
  int steps = 0;
  int re_references = 0;
  int energy_violations = 0;
  double max_energy_increase = 0;  // relative
  bool completed = false;
  std::string failure;
};

Trajectory run(const RunConfig& cfg);

}  // namespace triflow
