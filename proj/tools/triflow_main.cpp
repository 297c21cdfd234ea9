// triflow: surface diffusion flow of triple-junction clusters.
//
// Subcommands:
//   simulate <config>           run the flow, emit frames + series + report
//   validate <config|mesh stem> mesh invariants plus GCC/ACC reports
//   linearize-check <config>    central-difference linearization tables
//   lopatinskii-check <config>  complementarity probe sweep
//   energy-report <series.csv>  monotonicity/conservation verdict
//
// Exit codes: 0 success, 1 validation failure, 2 runtime failure, 3 usage.

#include <CLI11.hpp>
#include <complex>
#include <cstdio>
#include <filesystem>
#include <fstream>

#include "triflow/diagnostics.hpp"
#include "triflow/verification.hpp"

using namespace triflow;

namespace {

FlowState state_from_config(const RunConfig& cfg) {
  std::string gen = cfg.generator;
  const std::string prefix = "perturbed-";
  if (gen.rfind(prefix, 0) == 0) gen = gen.substr(prefix.size());
  PhysicsParams params;
  params.gamma = cfg.gamma;
  params.theta = young_angles(cfg.gamma);
  params.dt = cfg.dt;
  params.C_u = cfg.C_u;
  params.C_v = cfg.C_v;
  params.fp_tolerance = cfg.fp_tolerance;
  params.fp_max_iters = cfg.fp_max_iters;
  params.full_fixed_point = cfg.full_fixed_point;
  params.eps_ref = cfg.eps_ref;
  params.w_tau = cfg.w_tau;
  return make_state(build_reference_cluster({gen, cfg.gamma, cfg.resolution}), params);
}

int run_simulate(const std::string& config_path) {
  RunConfig cfg = load_config(config_path);
  Trajectory traj = run(cfg);
  EnergyReportResult rep =
      energy_report(traj.records, cfg.energy_tolerance, cfg.volume_tolerance);
  std::printf("steps: %d, re-references: %d\n", traj.steps, traj.re_references);
  std::printf("%s", rep.text.c_str());
  if (!traj.completed) {
    std::fprintf(stderr, "run failed: %s\n", traj.failure.c_str());
    return 2;
  }
  std::ofstream report(cfg.output_dir + "/report.txt");
  report << "steps: " << traj.steps << "\nre-references: " << traj.re_references << "\n"
         << rep.text;
  return rep.energy_ok && rep.volume_ok ? 0 : 1;
}

int run_validate(const std::string& target) {
  ClusterMesh mesh;
  RunConfig cfg;
  bool have_state = false;
  FlowState st;
  if (std::filesystem::exists(target + ".junction.txt")) {
    mesh = load_cluster(target);
  } else {
    cfg = load_config(target);
    st = state_from_config(cfg);
    mesh = st.mesh;
    have_state = true;
  }
  ValidationReport rep = validate_mesh(mesh);
  std::printf("mesh validation: %s\n", rep.ok() ? "ok" : rep.summary().c_str());
  if (!rep.ok()) return 1;
  if (!have_state) {
    PhysicsParams params;  // tensions unknown for raw meshes; use defaults
    params.theta = young_angles(params.gamma);
    st = make_state(std::move(mesh), params);
  }

  TripleField rho0(st.mesh);
  double amp = cfg.perturb_amplitude;
  if (cfg.generator.rfind("perturbed-", 0) == 0 && amp <= 0) amp = 0.05;
  if (have_state && amp > 0)
    rho0 = junction_preserving_perturbation(st.mesh, st.frame,
                                            amp * st.frame.min_inradius(), cfg.seed);
  CompatibilityResult comp = check_compatibility(st, rho0);
  auto thresholds = default_compatibility_thresholds(st);
  bool gcc = comp.gcc.pass(thresholds), acc = comp.acc.pass(thresholds);
  std::printf("GCC (%s):\n%s", gcc ? "pass" : "fail", comp.gcc.text().c_str());
  std::printf("ACC (%s):\n%s", acc ? "pass" : "fail", comp.acc.text().c_str());
  return gcc && acc ? 0 : 1;
}

int run_linearize_check(const std::string& config_path) {
  RunConfig cfg = load_config(config_path);
  FlowState st = state_from_config(cfg);
  TripleField u(st.mesh);
  for (int i = 0; i < 3; ++i) {
    const Patch& p = st.mesh.patches[i];
    for (int v = 0; v < u[i].size(); ++v)
      u[i][v] = 0.3 * std::sin(1.7 * p.positions(v, 1) + i) +
                0.2 * std::cos(2.3 * p.positions(v, 0));
  }
  u = make_admissible(st, u);
  std::vector<double> ladder = {0.05, 0.025, 0.0125, 0.00625};
  std::filesystem::create_directories(cfg.output_dir);
  std::ofstream csv(cfg.output_dir + "/linearize_check.csv");
  csv << "quantity,eps,error,order\n";
  bool ok = true;
  for (auto [which, name] :
       {std::pair{LinearizedQuantity::NormalVelocity, "V"},
        std::pair{LinearizedQuantity::MeanCurvature, "H"},
        std::pair{LinearizedQuantity::NormalProduct, "NN"}}) {
    auto table = fd_check_linearization(st, which, u, ladder);
    for (const auto& row : table) {
      char buf[160];
      std::snprintf(buf, sizeof buf, "%s,%.17g,%.17g,%.6g\n", name, row.eps, row.error,
                    row.order);
      csv << buf;
      std::printf("%-3s eps %-10g err %-12g order %g\n", name, row.eps, row.error, row.order);
    }
    double order = table[1].order;
    ok = ok && order > 1.7 && order < 2.3;
  }
  std::printf("observed orders %s the [1.7, 2.3] window\n", ok ? "inside" : "OUTSIDE");
  return ok ? 0 : 1;
}

int run_lopatinskii_check(const std::string& config_path) {
  RunConfig cfg = load_config(config_path);
  using Cplx = std::complex<double>;
  std::vector<Cplx> lambdas = {Cplx(0, 0), Cplx(1, 0), Cplx(10, 0),
                               Cplx(0, 1), Cplx(0, 10), Cplx(1, 1)};
  std::vector<double> zetas = {0.0, 0.5, 1.0, 4.0};
  std::filesystem::create_directories(cfg.output_dir);
  std::ofstream csv(cfg.output_dir + "/lopatinskii.csv");
  csv << "re_lambda,im_lambda,zeta,min_sv\n";
  double min_sv = 1e300;
  for (Cplx lam : lambdas) {
    for (double z : zetas) {
      if (std::abs(lam) == 0.0 && z == 0.0) continue;
      LopatinskiiProbe p{cfg.gamma, {z, z, z}, lam};
      double sv = lopatinskii_min_sv(p).min_singular_value;
      min_sv = std::min(min_sv, sv);
      char buf[160];
      std::snprintf(buf, sizeof buf, "%.17g,%.17g,%.17g,%.17g\n", lam.real(), lam.imag(), z, sv);
      csv << buf;
    }
  }
  std::printf("smallest singular value over the grid: %g\n", min_sv);
  return min_sv > 1e-6 ? 0 : 1;
}

int run_energy_report(const std::string& series_path) {
  auto series = read_series(series_path);
  EnergyReportResult rep = energy_report(series, 1e-10, 1e-4);
  std::printf("%s", rep.text.c_str());
  return rep.energy_ok && rep.volume_ok ? 0 : 1;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"surface diffusion flow of triple-junction clusters"};
  app.require_subcommand(1);

  std::string config, target, series;
  auto* simulate = app.add_subcommand("simulate", "run the flow");
  simulate->add_option("config", config, "run configuration file")->required();
  auto* validate = app.add_subcommand("validate", "mesh invariants + GCC/ACC");
  validate->add_option("target", target, "config file or mesh stem")->required();
  auto* lin = app.add_subcommand("linearize-check", "FD linearization tables");
  lin->add_option("config", config, "run configuration file")->required();
  auto* lop = app.add_subcommand("lopatinskii-check", "probe grid sweep");
  lop->add_option("config", config, "run configuration file")->required();
  auto* energy = app.add_subcommand("energy-report", "series verdict");
  energy->add_option("series", series, "series.csv path")->required();

  try {
    app.parse(argc, argv);
    if (simulate->parsed()) return run_simulate(config);
    if (validate->parsed()) return run_validate(target);
    if (lin->parsed()) return run_linearize_check(config);
    if (lop->parsed()) return run_lopatinskii_check(config);
    if (energy->parsed()) return run_energy_report(series);
  } catch (const CLI::ParseError& e) {
    int code = app.exit(e);
    return code == 0 ? 0 : 3;
  } catch (const UsageError& e) {
    std::fprintf(stderr, "usage error: %s\n", e.what());
    return 3;
  } catch (const ValidationError& e) {
    std::fprintf(stderr, "validation failure: %s\n", e.what());
    return 1;
  } catch (const RuntimeFailure& e) {
    std::fprintf(stderr, "runtime failure: %s\n", e.what());
    return 2;
  }
  return 3;
}
