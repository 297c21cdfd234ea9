#include <doctest.h>

#include <filesystem>
#include <fstream>

#include "test_helpers.hpp"
#include "triflow/diagnostics.hpp"
#include "triflow/nonlinear_stepper.hpp"
#include "triflow/oracles.hpp"

using namespace triflow;
using namespace triflow::testing;

namespace {

FlowState make_generator_state(const std::string& gen, const Vec3& gamma, int res,
                               double dt = 1e-4) {
  PhysicsParams params;
  params.gamma = gamma;
  params.theta = young_angles(gamma);
  params.dt = dt;
  return make_state(build_reference_cluster({gen, gamma, res}), params);
}

FlowState circle_state(int n, double dt) {
  PhysicsParams params;
  params.dt = dt;
  return make_state(circle_cluster(n), params);
}

}  // namespace

TEST_CASE("one step of curve diffusion matches the k^4 - k^2 dispersion oracle") {
  const double dt = 1e-3;
  FlowState st = circle_state(256, dt);
  TripleField rho(st.mesh);
  const int n = st.mesh.patches[0].vertex_count();
  for (int v = 0; v < n; ++v) {
    double s = 2.0 * kPi * v / n;
    rho[0][v] = 1e-3 * std::cos(2.0 * s);
  }
  st.set_rho(rho);
  StepResult res = fixed_point_step(st, dt);

  oracles::SpectralCurveOracle oracle{8, 1.0};
  double before = oracle.mode_amplitude(rho[0], 2);
  double after = oracle.mode_amplitude(res.rho[0], 2);
  double expected = oracles::curve_diffusion_mode_decay(2, dt, 1.0);
  CHECK(after / before == doctest::Approx(expected).epsilon(0.05));
}

TEST_CASE("nonlinear operators at the unperturbed double bubble") {
  FlowState st = make_generator_state("standard-double-bubble", Vec3(1, 1, 1), 24);
  NonlinearOps ops = nonlinear_operators(st, st.rho);

  // CCP holds for the exact configuration: gamma . H -> 0 under refinement
  double coarse = ops.gammaH.cwiseAbs().maxCoeff();
  FlowState fine = make_generator_state("standard-double-bubble", Vec3(1, 1, 1), 48);
  NonlinearOps fops = nonlinear_operators(fine, fine.rho);
  double refined = fops.gammaH.cwiseAbs().maxCoeff();
  CHECK(refined < 0.7 * coarse);

  // caps have constant curvature, the disk none; interior Delta H is small
  std::vector<char> boundary(st.mesh.patches[1].vertex_count(), 0);
  for (int b : st.mesh.patches[1].boundary_vertices) boundary[b] = 1;
  double h_pole = ops.H[1][0];
  CHECK(std::abs(h_pole) == doctest::Approx(std::sqrt(3.0)).epsilon(0.05));
  CHECK(std::abs(ops.H[0][0]) < 1e-10);  // disk centre
}

TEST_CASE("sphere is discretely stationary for the stepper") {
  const double dt = 1e-3;
  PhysicsParams params;
  params.dt = dt;
  FlowState st = make_state(sphere_cluster(3), params);
  StepResult res = fixed_point_step(st, dt);
  // normal speed below the spatial truncation of Delta H on the sphere
  double speed = res.rho.sup_norm() / dt;
  CHECK(speed < 2.0);
}

TEST_CASE("steps preserve the junction invariants") {
  FlowState st = make_generator_state("theta-network", Vec3(1, 1, 1.2), 96);
  TripleField rho0 = junction_preserving_perturbation(st.mesh, st.frame, 0.03, 5);
  st.set_rho(rho0);
  for (int s = 0; s < 3; ++s) {
    StepResult res = fixed_point_step(st, st.params.dt);
    st.set_rho(res.rho);
    st.time += st.params.dt;
    for (int n = 0; n < st.mesh.junction.node_count(); ++n)
      CHECK(std::abs(st.params.gamma.dot(st.rho.trace(st.mesh, n))) < 1e-10);
    NonlinearOps ops = nonlinear_operators(st, st.rho);
    CHECK(ops.junction_mismatch.maxCoeff() < 1e-12);
  }
}

TEST_CASE("residual inhomogeneities carry b1 = 0 and a silent CLP at equilibrium") {
  FlowState st = make_generator_state("theta-network", Vec3(1, 1, 1), 64);
  NonlinearOps ops = nonlinear_operators(st, st.rho);
  Vec v0 = initial_potential(st, st.rho, ops);
  Inhomogeneities inh = residual_inhomogeneities(st, st.rho, v0, st.positions, st.params.dt);
  CHECK(inh.b[0].cwiseAbs().maxCoeff() == 0.0);
}

TEST_CASE("full fixed-point iteration contracts on a perturbed network") {
  FlowState st = make_generator_state("theta-network", Vec3(1, 1, 1), 128);
  st.params.full_fixed_point = true;
  st.params.fp_max_iters = 12;
  TripleField rho0 =
      junction_preserving_perturbation(st.mesh, st.frame, 0.05 * st.frame.min_inradius(), 9);
  st.set_rho(rho0);
  StepResult res = fixed_point_step(st, 1e-4);
  CHECK(res.report.converged);
  CHECK(res.report.iterations >= 2);
  for (double r : res.report.contraction_ratios) CHECK(r < 0.5);
}

TEST_CASE("huge time steps make the full iteration fail loudly") {
  FlowState st = make_generator_state("theta-network", Vec3(1, 1, 1), 64);
  st.params.full_fixed_point = true;
  st.params.fp_max_iters = 8;
  TripleField rho0 =
      junction_preserving_perturbation(st.mesh, st.frame, 0.05 * st.frame.min_inradius(), 13);
  st.set_rho(rho0);
  CHECK_THROWS_AS(fixed_point_step(st, 1.0), RuntimeFailure);
}

TEST_CASE("re-referencing keeps the geometry and resets the graph") {
  FlowState st = make_generator_state("theta-network", Vec3(1, 1, 1), 64);
  TripleField rho0 =
      junction_preserving_perturbation(st.mesh, st.frame, 0.04 * st.frame.min_inradius(), 21);
  st.set_rho(rho0);
  DiagnosticsRecord before = compute_diagnostics(st);
  int nodes = st.mesh.junction.node_count();
  re_reference(st);
  DiagnosticsRecord after = compute_diagnostics(st);
  CHECK(st.rho.sup_norm() == 0.0);
  CHECK(st.mesh.junction.node_count() == nodes);
  CHECK(after.energy == doctest::Approx(before.energy).epsilon(1e-12));
  CHECK(after.vol12 == doctest::Approx(before.vol12).epsilon(1e-12));
  CHECK(after.vol13 == doctest::Approx(before.vol13).epsilon(1e-12));
  CHECK(st.re_reference_count == 1);
}

TEST_CASE("run() executes a short deterministic flow") {
  RunConfig cfg;
  cfg.generator = "theta-network";
  cfg.gamma = Vec3(1, 1, 1);
  cfg.resolution = 64;
  cfg.dt = 1e-4;
  cfg.t_end = 10 * cfg.dt;
  cfg.perturb_amplitude = 0.03;
  cfg.seed = 4;
  cfg.output_dir = "run_test_out";
  Trajectory traj = run(cfg);
  CHECK(traj.completed);
  CHECK(traj.steps == 10);
  CHECK(traj.energy_violations == 0);
  REQUIRE(traj.records.size() == 11);
  CHECK(traj.records.back().energy < traj.records.front().energy);

  // determinism: identical config -> byte identical series
  RunConfig cfg2 = cfg;
  cfg2.output_dir = "run_test_out2";
  run(cfg2);
  std::ifstream a(cfg.output_dir + "/series.csv"), b(cfg2.output_dir + "/series.csv");
  std::string sa((std::istreambuf_iterator<char>(a)), std::istreambuf_iterator<char>());
  std::string sb((std::istreambuf_iterator<char>(b)), std::istreambuf_iterator<char>());
  CHECK(sa == sb);
  CHECK(sa.size() > 0);
}
