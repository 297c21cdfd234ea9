#include <doctest.h>

#include <random>

#include "test_helpers.hpp"
#include "triflow/oracles.hpp"
#include "triflow/verification.hpp"

using namespace triflow;
using namespace triflow::testing;

namespace {

FlowState generator_state(const std::string& gen, const Vec3& gamma, int res) {
  PhysicsParams params;
  params.gamma = gamma;
  params.theta = young_angles(gamma);
  return make_state(build_reference_cluster({gen, gamma, res}), params);
}

FlowState closed_sphere_state(int subdivisions) {
  PhysicsParams params;
  return make_state(sphere_cluster(subdivisions), params);
}

bool order_in_window(const std::vector<FdTableRow>& table, double lo = 1.7, double hi = 2.3) {
  // observed order on the asymptotic (large-eps) segment of the ladder
  REQUIRE(table.size() >= 2);
  double order = table[1].order;
  return order >= lo && order <= hi;
}

}  // namespace

TEST_CASE("fd check: mean curvature linearization on the sphere, constant u") {
  FlowState st = closed_sphere_state(3);
  TripleField u(st.mesh);
  u[0].setConstant(1.0);
  auto table = fd_check_linearization(st, LinearizedQuantity::MeanCurvature, u,
                                      {0.2, 0.1, 0.05, 0.025});
  CHECK(order_in_window(table));
  CHECK(table.back().error < table.front().error);
}

TEST_CASE("fd check: mean curvature on the flat disk equals the Laplacian") {
  FlowState st = generator_state("standard-double-bubble", Vec3(1, 1, 1), 24);
  TripleField u(st.mesh);
  const Patch& disk = st.mesh.patches[0];
  for (int v = 0; v < disk.vertex_count(); ++v) {
    double r2 = disk.positions.row(v).squaredNorm();
    u[0][v] = std::exp(-4.0 * r2);  // radial bump vanishing at the rim scale
  }
  // make the trace admissible (effectively zero at the rim)
  u = make_admissible(st, u);
  auto table = fd_check_linearization(st, LinearizedQuantity::MeanCurvature, u,
                                      {0.1, 0.05, 0.025, 0.0125});
  CHECK(order_in_window(table));
}

TEST_CASE("fd check: normal velocity linearization") {
  FlowState st = generator_state("theta-network", Vec3(1, 1, 1), 96);
  std::mt19937_64 rng(31);
  std::uniform_real_distribution<double> uni(-1, 1);
  TripleField u(st.mesh);
  for (int i = 0; i < 3; ++i)
    for (int v = 0; v < u[i].size(); ++v) u[i][v] = uni(rng);
  // a couple of smoothing passes keep the deformation sane
  u = junction_preserving_perturbation(st.mesh, st.frame, 1.0, 37);
  u = make_admissible(st, u);
  auto table = fd_check_linearization(st, LinearizedQuantity::NormalVelocity, u,
                                      {0.08, 0.04, 0.02, 0.01});
  CHECK(order_in_window(table));
}

TEST_CASE("fd check: normal product jump formula on the theta network") {
  FlowState st = generator_state("theta-network", Vec3(1, 1, 1), 96);
  std::mt19937_64 rng(41);
  std::uniform_real_distribution<double> uni(-1, 1);
  TripleField u(st.mesh);
  for (int i = 0; i < 3; ++i) {
    const Patch& p = st.mesh.patches[i];
    for (int v = 0; v < u[i].size(); ++v) {
      double y = p.positions(v, 1);
      u[i][v] = 0.3 * std::sin(1.7 * y + i) + 0.2 * std::cos(2.3 * p.positions(v, 0));
    }
  }
  u = make_admissible(st, u);
  auto table = fd_check_linearization(st, LinearizedQuantity::NormalProduct, u,
                                      {0.05, 0.025, 0.0125, 0.00625});
  CHECK(order_in_window(table));
}

TEST_CASE("fd check rejects inadmissible data and bad ladders") {
  FlowState st = generator_state("theta-network", Vec3(1, 1, 1), 32);
  TripleField u(st.mesh);
  u[0].setConstant(1.0);  // junction trace breaks the sum condition
  CHECK_THROWS_AS(fd_check_linearization(st, LinearizedQuantity::MeanCurvature, u, {0.1, 0.05}),
                  ValidationError);
  TripleField ok(st.mesh);
  CHECK_THROWS_AS(fd_check_linearization(st, LinearizedQuantity::MeanCurvature, ok, {0.05, 0.1}),
                  ValidationError);
}

TEST_CASE("lopatinskii probe certifies complementarity") {
  using Cplx = std::complex<double>;
  LopatinskiiProbe probe;
  probe.gamma = Vec3(1, 1, 1);
  probe.zeta_norm = {0, 0, 0};
  probe.lambda = Cplx(1, 0);
  LopatinskiiResult res = lopatinskii_min_sv(probe);
  CHECK(res.min_singular_value > 0.1);
  for (const auto& w : res.exponents) CHECK(w.real() < 0);

  SUBCASE("full grid stays positive and matches the independent oracle") {
    std::vector<Cplx> lambdas = {Cplx(0, 0), Cplx(1, 0), Cplx(10, 0),
                                 Cplx(0, 1), Cplx(0, 10), Cplx(1, 1)};
    std::vector<double> zetas = {0.0, 0.5, 1.0, 4.0};
    std::vector<Vec3> gammas = {Vec3(1, 1, 1), Vec3(1, 1, 1.5), Vec3(2, 1, 1.2)};
    for (const Vec3& g : gammas) {
      for (Cplx lam : lambdas) {
        for (double z : zetas) {
          if (std::abs(lam) == 0.0 && z == 0.0) continue;
          LopatinskiiProbe p{g, {z, z, z}, lam};
          double sv = lopatinskii_min_sv(p).min_singular_value;
          CHECK(sv > 1e-6);
          double oracle = oracles::dense_boundary_min_sv(g, {z, z, z}, lam);
          CHECK(std::abs(sv - oracle) < 1e-10 * std::max(1.0, sv));
        }
      }
    }
  }
  SUBCASE("parabolic scaling preserves nonvanishing") {
    LopatinskiiProbe p1{Vec3(1, 1, 1.5), {1.0, 1.0, 1.0}, Cplx(2, 1)};
    LopatinskiiProbe p2{Vec3(1, 1, 1.5), {2.0, 2.0, 2.0}, Cplx(32, 16)};
    double s1 = lopatinskii_min_sv(p1).min_singular_value;
    double s2 = lopatinskii_min_sv(p2).min_singular_value;
    CHECK(s1 > 1e-6);
    CHECK(s2 > 1e-6);
  }
  SUBCASE("purely imaginary lambda is allowed") {
    LopatinskiiProbe p{Vec3(1, 1, 1), {0, 0, 0}, Cplx(0, 1)};
    CHECK(lopatinskii_min_sv(p).min_singular_value > 1e-6);
  }
  SUBCASE("the excluded origin raises") {
    LopatinskiiProbe p{Vec3(1, 1, 1), {0, 0, 0}, Cplx(0, 0)};
    CHECK_THROWS_AS(lopatinskii_min_sv(p), ValidationError);
  }
  SUBCASE("metric norms sampled from the mesh feed the probe") {
    FlowState st = generator_state("standard-double-bubble", Vec3(1, 1, 1), 24);
    auto q = sample_metric_norms(st, 1.0);
    for (double qi : q) CHECK(qi > 0);
    LopatinskiiProbe p{Vec3(1, 1, 1), q, Cplx(1, 0)};
    CHECK(lopatinskii_min_sv(p).min_singular_value > 1e-6);
  }
}

TEST_CASE("compatibility reports at the equilibrium bubble and under violations") {
  FlowState st = generator_state("standard-double-bubble", Vec3(1, 1, 1), 32);
  TripleField zero(st.mesh);
  CompatibilityResult base = check_compatibility(st, zero);
  auto thresholds = default_compatibility_thresholds(st);
  CHECK(base.gcc.pass(thresholds));
  CHECK(base.acc.pass(thresholds));

  // residuals shrink under refinement
  FlowState fine = generator_state("standard-double-bubble", Vec3(1, 1, 1), 48);
  CompatibilityResult fres = check_compatibility(fine, TripleField(fine.mesh));
  CHECK(fres.gcc.residuals.at("AC12") < base.gcc.residuals.at("AC12") * 0.9);

  // rotating one patch's rim values violates the angle conditions in both
  TripleField bad(st.mesh);
  const int J = st.mesh.junction.node_count();
  for (int n = 0; n < J; ++n) {
    double s = 2.0 * kPi * n / J;
    Vec3 tr(0.06 * std::sin(s), -0.06 * std::sin(s), 0.0);
    tr -= st.params.gamma * (st.params.gamma.dot(tr) / st.params.gamma.squaredNorm());
    bad.set_trace(st.mesh, n, tr);
  }
  CompatibilityResult broken = check_compatibility(st, bad);
  CHECK(broken.gcc.residuals.at("AC12") > 3.0 * base.gcc.residuals.at("AC12"));
  CHECK(broken.acc.residuals.at("AC12") > 3.0 * base.acc.residuals.at("AC12"));
  CHECK(broken.gcc.pass(thresholds) == broken.acc.pass(thresholds));
}

TEST_CASE("compatibility verdicts are monotone in the thresholds") {
  FlowState st = generator_state("theta-network", Vec3(1, 1, 1), 64);
  TripleField rho = junction_preserving_perturbation(st.mesh, st.frame, 0.02, 3);
  CompatibilityResult res = check_compatibility(st, rho);
  auto thr = default_compatibility_thresholds(st);
  bool before = res.gcc.pass(thr);
  for (auto& [k, v] : thr) v *= 10.0;
  bool after = res.gcc.pass(thr);
  if (before) CHECK(after);  // loosening never flips pass to fail
}
