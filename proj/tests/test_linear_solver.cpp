#include <doctest.h>

#include <random>

#include "test_helpers.hpp"
#include "triflow/linear_solver.hpp"
#include "triflow/nonlinear_stepper.hpp"

using namespace triflow;
using namespace triflow::testing;

namespace {

FlowState theta_state(const Vec3& gamma, int n, double dt = 1e-4) {
  PhysicsParams params;
  params.gamma = gamma;
  params.theta = young_angles(gamma);
  params.dt = dt;
  return make_state(build_reference_cluster({"theta-network", gamma, n}), params);
}

LinearStepInput zero_input(const FlowState& st, double dt) {
  LinearStepInput in;
  in.sys = &st.sys;
  in.dt = dt;
  in.C_u = st.params.C_u;
  in.C_v = st.params.C_v;
  in.u_prev = Vec::Zero(st.sys.n_dofs);
  in.f = Vec::Zero(st.sys.n_dofs);
  for (auto& b : in.b) b = Vec::Zero(st.sys.n_nodes());
  return in;
}

Vec random_vec(int n, std::mt19937_64& rng) {
  std::uniform_real_distribution<double> uni(-1.0, 1.0);
  Vec v(n);
  for (int i = 0; i < n; ++i) v[i] = uni(rng);
  return v;
}

}  // namespace

TEST_CASE("zero data yields the zero solution") {
  FlowState st = theta_state(Vec3(1, 1, 1.2), 48);
  StepSolution sol = solve_step(zero_input(st, 1e-3));
  CHECK(sol.u.cwiseAbs().maxCoeff() == 0.0);
  CHECK(sol.v.cwiseAbs().maxCoeff() == 0.0);
  CHECK(sol.report.residual_u < 1e-10);
  CHECK_FALSE(sol.report.clp_warning);
}

TEST_CASE("constraints are enforced exactly, including affine targets") {
  FlowState st = theta_state(Vec3(1.0, 1.2, 0.7), 48);
  std::mt19937_64 rng(3);
  LinearStepInput in = zero_input(st, 1e-3);
  in.u_prev = 0.01 * random_vec(st.sys.n_dofs, rng);

  SUBCASE("homogeneous") {
    StepSolution sol = solve_step(in);
    Vec cu = st.sys.constraints * sol.u;
    Vec cv = st.sys.constraints * sol.v;
    CHECK(cu.cwiseAbs().maxCoeff() < 1e-11);
    CHECK(cv.cwiseAbs().maxCoeff() < 1e-11);
  }
  SUBCASE("affine target on u") {
    in.b[0][0] = 1.0;
    StepSolution sol = solve_step(in);
    Vec cu = st.sys.constraints * sol.u;
    CHECK(cu[0] == doctest::Approx(1.0).epsilon(1e-10));
    CHECK(std::abs(cu[1]) < 1e-10);
  }
}

TEST_CASE("gamma-weighted masses in the constrained space are conserved") {
  // the piecewise-constant test functions of E (gamma . zeta = 0) pair with
  // M to the linearized enclosed volumes; with zero loads they are invariant
  Vec3 g(1.0, 1.2, 0.7);
  FlowState st = theta_state(g, 64);
  std::mt19937_64 rng(11);
  LinearStepInput in = zero_input(st, 1e-3);
  in.u_prev = 0.01 * random_vec(st.sys.n_dofs, rng);
  // start from admissible data (junction sums vanish)
  TripleField up = st.sys.unstack(in.u_prev);
  for (int n = 0; n < st.mesh.junction.node_count(); ++n) {
    Vec3 tr = up.trace(st.mesh, n);
    tr -= g * (g.dot(tr) / g.squaredNorm());
    up.set_trace(st.mesh, n, tr);
  }
  in.u_prev = st.sys.stack(up);

  StepSolution sol = solve_step(in);
  Vec3 zeta1(-1.0 / g[0], 1.0 / g[1], 0.0);  // linearized vol(Omega_12)
  Vec3 zeta2(1.0 / g[0], 0.0, -1.0 / g[2]);  // linearized vol(Omega_13)
  for (const Vec3& zeta : {zeta1, zeta2}) {
    Vec z(st.sys.n_dofs);
    for (int i = 0; i < 3; ++i)
      z.segment(st.sys.offset[i], st.mesh.patches[i].vertex_count()).setConstant(zeta[i]);
    double before = z.dot(st.sys.mass_diag.cwiseProduct(in.u_prev));
    double after = z.dot(st.sys.mass_diag.cwiseProduct(sol.u));
    CHECK(std::abs(after - before) < 1e-10 * std::max(1.0, std::abs(before)));
  }
}

TEST_CASE("solution is additive in the full data tuple") {
  FlowState st = theta_state(Vec3(1, 1, 1.2), 48);
  std::mt19937_64 rng(17);
  auto random_input = [&](unsigned) {
    LinearStepInput in = zero_input(st, 1e-3);
    in.u_prev = 0.01 * random_vec(st.sys.n_dofs, rng);
    in.f = random_vec(st.sys.n_dofs, rng);
    for (auto& b : in.b) b = 0.1 * random_vec(st.sys.n_nodes(), rng);
    return in;
  };
  LinearStepInput a = random_input(1), b = random_input(2);
  LinearStepInput sum = zero_input(st, 1e-3);
  sum.u_prev = a.u_prev + b.u_prev;
  sum.f = a.f + b.f;
  for (int k = 0; k < 6; ++k) sum.b[k] = a.b[k] + b.b[k];

  StepSolution sa = solve_step(a), sb = solve_step(b), ss = solve_step(sum);
  double scale = std::max(1.0, ss.u.cwiseAbs().maxCoeff());
  CHECK((ss.u - sa.u - sb.u).cwiseAbs().maxCoeff() / scale < 1e-10);
  CHECK((ss.v - sa.v - sb.v).cwiseAbs().maxCoeff() / scale < 1e-10);
}

TEST_CASE("repeated solves are bit identical") {
  FlowState st = theta_state(Vec3(1, 1, 1), 48);
  std::mt19937_64 rng(23);
  LinearStepInput in = zero_input(st, 1e-3);
  in.u_prev = random_vec(st.sys.n_dofs, rng);
  in.f = random_vec(st.sys.n_dofs, rng);
  StepSolution s1 = solve_step(in);
  StepSolution s2 = solve_step(in);
  CHECK(std::memcmp(s1.u.data(), s2.u.data(), sizeof(double) * s1.u.size()) == 0);
  CHECK(std::memcmp(s1.v.data(), s2.v.data(), sizeof(double) * s1.v.size()) == 0);
}

TEST_CASE("discrete Lyapunov quantity B_v[u,u] decays with zero data") {
  FlowState st = theta_state(Vec3(1, 1, 1), 64);
  std::mt19937_64 rng(29);
  SparseMat Bv = assemble_Bv(st.sys, 0.0);
  StepOperator op(st.sys, 1e-3, 0.0, 0.0);
  Vec u = 0.01 * random_vec(st.sys.n_dofs, rng);
  TripleField uf = st.sys.unstack(u);
  for (int n = 0; n < st.mesh.junction.node_count(); ++n) {
    Vec3 tr = uf.trace(st.mesh, n);
    tr -= st.params.gamma * (st.params.gamma.dot(tr) / st.params.gamma.squaredNorm());
    uf.set_trace(st.mesh, n, tr);
  }
  u = st.sys.stack(uf);
  Vec f = Vec::Zero(st.sys.n_dofs);
  std::array<Vec, 6> b;
  for (auto& bi : b) bi = Vec::Zero(st.sys.n_nodes());
  double prev = u.dot(Bv * u);
  for (int step = 0; step < 8; ++step) {
    u = op.solve(u, f, b).u;
    double now = u.dot(Bv * u);
    CHECK(now <= prev * (1.0 + 1e-12));
    prev = now;
  }
}

TEST_CASE("CLP monitor warns on incompatible inhomogeneities") {
  FlowState st = theta_state(Vec3(1, 1, 1), 32);
  LinearStepInput in = zero_input(st, 1e-3);
  in.f.setConstant(1.0);  // gamma-weighted junction sum is 3, clearly off
  StepSolution sol = solve_step(in);
  CHECK(sol.report.clp_warning);
  CHECK(sol.report.clp_residual == doctest::Approx(3.0));
}

TEST_CASE("pure linear step damps a circle mode at the biharmonic rate") {
  // without the curvature terms the matrix alone gives u/(1 + k^4 dt)
  ClusterMesh circle = circle_cluster(256);
  std::array<GeometryCache, 3> caches;
  for (int i = 0; i < 3; ++i)
    caches[i] = build_geometry(circle.patches[i], circle.patches[i].positions, 1);
  AssembledSystem sys =
      assemble_system({&caches[0], &caches[1], &caches[2]}, {1.0, 1.0, 1.0});
  const double dt = 1e-3;
  StepOperator op(sys, dt, 0.0, 0.0);
  Vec u = Vec::Zero(sys.n_dofs);
  for (int v = 0; v < circle.patches[0].vertex_count(); ++v) {
    double s = 2.0 * kPi * v / circle.patches[0].vertex_count();
    u[v] = 1e-3 * std::cos(2.0 * s);
  }
  std::array<Vec, 6> b;
  for (auto& bi : b) bi = Vec::Zero(0);
  Vec u1 = op.solve(u, Vec::Zero(sys.n_dofs), b).u;
  double ratio = u1.head(256).cwiseAbs().maxCoeff() / u.head(256).cwiseAbs().maxCoeff();
  CHECK(ratio == doctest::Approx(1.0 / (1.0 + 16.0 * dt)).epsilon(0.01));
}
