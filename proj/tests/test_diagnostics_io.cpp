#include <doctest.h>

#include <filesystem>
#include <fstream>

#include "test_helpers.hpp"
#include "triflow/diagnostics.hpp"
#include "triflow/oracles.hpp"

using namespace triflow;
using namespace triflow::testing;

namespace {

FlowState generator_state(const std::string& gen, const Vec3& gamma, int res) {
  PhysicsParams params;
  params.gamma = gamma;
  params.theta = young_angles(gamma);
  return make_state(build_reference_cluster({gen, gamma, res}), params);
}

}  // namespace

TEST_CASE("double bubble volumes are symmetric and match the cap formula") {
  FlowState st = generator_state("standard-double-bubble", Vec3(1, 1, 1), 32);
  DiagnosticsRecord rec = compute_diagnostics(st);
  CHECK(rec.vol12 == doctest::Approx(rec.vol13).epsilon(1e-10));
  CHECK(rec.vol12 > 0);
  // analytic: cap of R = 2/sqrt(3), height = 1.5 R minus nothing else; the
  // flat disk contributes no volume integrand at x = 0
  double R = 2.0 / std::sqrt(3.0);
  double expect = oracles::spherical_cap_volume(R, 1.5 * R);
  CHECK(rec.vol12 == doctest::Approx(expect).epsilon(0.01));
}

TEST_CASE("energies match the analytic patch areas within half a percent") {
  FlowState st = generator_state("standard-double-bubble", Vec3(1, 1, 1), 32);
  double R = 2.0 / std::sqrt(3.0);
  double cap = oracles::spherical_cap_area(R, 1.5 * R);
  double disk = kPi;
  CHECK(patch_area(st.caches[0]) == doctest::Approx(disk).epsilon(0.005));
  CHECK(patch_area(st.caches[1]) == doctest::Approx(cap).epsilon(0.005));
  CHECK(patch_area(st.caches[2]) == doctest::Approx(cap).epsilon(0.005));
  DiagnosticsRecord rec = compute_diagnostics(st);
  CHECK(rec.energy == doctest::Approx(disk + 2 * cap).epsilon(0.005));
}

TEST_CASE("theta network diagnostics at the generator resolution") {
  FlowState st = generator_state("theta-network", Vec3(1, 1, 1), 64);
  DiagnosticsRecord rec = compute_diagnostics(st);
  CHECK(rec.angle_error < 1e-8);
  CHECK(rec.junction_mismatch < 1e-12);
  CHECK(rec.vol12 > 0);
  CHECK(rec.vol13 > 0);
  CHECK(rec.vol12 == doctest::Approx(rec.vol13).epsilon(1e-10));
}

TEST_CASE("CSV series round trip is exact") {
  std::string path = "series_roundtrip.csv";
  std::filesystem::remove(path);
  DiagnosticsRecord a;
  a.time = 0.1234567890123456;
  a.energy = 9.87654321e-3;
  a.vol12 = 1.0 / 3.0;
  a.vol13 = 2.0 / 7.0;
  a.angle_error = 1e-9;
  a.fb_residual = 3.3e4;
  a.ccp_residual = 0;
  a.junction_mismatch = 5e-16;
  a.fp_iterations = 7;
  DiagnosticsRecord b = a;
  b.time = 0.2;
  append_series(a, path);
  append_series(b, path);
  auto back = read_series(path);
  REQUIRE(back.size() == 2);
  CHECK(back[0].time == a.time);
  CHECK(back[0].energy == a.energy);
  CHECK(back[0].vol12 == a.vol12);
  CHECK(back[0].fb_residual == a.fb_residual);
  CHECK(back[0].fp_iterations == 7);
  CHECK(back[1].time == b.time);
}

TEST_CASE("energy report flags increases and volume drift") {
  std::vector<DiagnosticsRecord> series(4);
  for (int i = 0; i < 4; ++i) {
    series[i].time = i * 0.1;
    series[i].energy = 10.0 - i;
    series[i].vol12 = 1.0;
    series[i].vol13 = 1.0;
  }
  EnergyReportResult ok = energy_report(series, 1e-10, 1e-4);
  CHECK(ok.energy_ok);
  CHECK(ok.volume_ok);

  series[2].energy = 9.5;  // increase after 8

  EnergyReportResult bad = energy_report(series, 1e-10, 1e-4);
  CHECK_FALSE(bad.energy_ok);
  CHECK(bad.violating_steps == 1);

  series[2].energy = 8.0;
  series[3].vol12 = 1.01;
  EnergyReportResult drift = energy_report(series, 1e-10, 1e-4);
  CHECK_FALSE(drift.volume_ok);
}

TEST_CASE("config parsing fills defaults and rejects junk") {
  RunConfig cfg = parse_config_text("generator = theta-network\ndt = 1e-4\nt_end = 1e-3\n");
  CHECK(cfg.generator == "theta-network");
  CHECK(cfg.dt == 1e-4);
  CHECK(cfg.resolution == 64);  // default filled
  CHECK_THROWS_AS(parse_config_text("generator = x\nno_such_key = 1\n"), UsageError);
  CHECK_NOTHROW(parse_config_text("generator = x\nno_such_key = 1\n", false));
  CHECK_THROWS_AS(parse_config_text("dt = banana\n"), UsageError);
  CHECK_THROWS_AS(parse_config_text("gamma = 1,1\n"), UsageError);

  // resolved echo parses back to the same values
  RunConfig full;
  full.gamma = Vec3(1, 1, 1.2);
  full.dt = 2.5e-4;
  full.seed = 77;
  write_resolved_config(full, "resolved_test.cfg");
  RunConfig back = load_config("resolved_test.cfg");
  CHECK(back.gamma[2] == full.gamma[2]);
  CHECK(back.dt == full.dt);
  CHECK(back.seed == full.seed);
}

TEST_CASE("VTK frame matches the golden file byte for byte") {
  PhysicsParams params;
  params.gamma = Vec3(1, 1, 1);
  params.theta = young_angles(params.gamma);
  FlowState st = make_state(build_reference_cluster({"theta-network", Vec3(1, 1, 1), 4}), params);
  write_frame(st, "golden_check");
  std::ifstream got("golden_check.patch0.vtk");
  REQUIRE(got.good());
  std::string got_s((std::istreambuf_iterator<char>(got)), std::istreambuf_iterator<char>());
  std::ifstream want(std::string(TRIFLOW_SOURCE_DIR) + "/tests/golden/theta4.patch0.vtk");
  REQUIRE(want.good());
  std::string want_s((std::istreambuf_iterator<char>(want)), std::istreambuf_iterator<char>());
  CHECK(got_s == want_s);
}
