#include "triflow/diagnostics.hpp"

#include <cmath>
#include <cstdio>
#include <fstream>
#include <sstream>

namespace triflow {

const char* kSeriesHeader =
    "time,energy,vol12,vol13,angle_error,fb_residual,ccp_residual,junction_mismatch,fp_iterations";

std::pair<double, double> enclosed_volumes(const ClusterMesh& mesh,
                                           const std::array<MatX, 3>& positions,
                                           const std::array<GeometryCache, 3>& caches) {
  // (1/n) * integral of x . N per patch, combined per the orientation
  // convention (N1 into Omega_13, N2 into Omega_12, N3 out of Omega_13):
  // outward normals of Omega_12 are (N1, -N2), of Omega_13 (-N1, N3).
  std::array<double, 3> I{};
  const int nodes = mesh.dim + 1;
  for (int i = 0; i < 3; ++i) {
    const MatXi& elems = mesh.patches[i].elements;
    for (int e = 0; e < elems.rows(); ++e) {
      Eigen::RowVectorXd centroid = Eigen::RowVectorXd::Zero(positions[i].cols());
      for (int k = 0; k < nodes; ++k) centroid += positions[i].row(elems(e, k));
      centroid /= nodes;
      I[i] += caches[i].element_measure[e] * centroid.dot(caches[i].element_normal.row(e));
    }
  }
  double inv = 1.0 / mesh.ambient_dim();  // divergence theorem factor 1/n in R^n
  return {inv * (I[0] - I[1]), inv * (I[2] - I[0])};
}

double cluster_energy(const Vec3& gamma, const std::array<GeometryCache, 3>& caches) {
  double e = 0;
  for (int i = 0; i < 3; ++i) e += gamma[i] * patch_area(caches[i]);
  return e;
}

DiagnosticsRecord compute_diagnostics(const FlowState& state) {
  DiagnosticsRecord rec;
  rec.time = state.time;

  std::array<GeometryCache, 3> cw;
  for (int i = 0; i < 3; ++i)
    cw[i] = build_geometry(state.mesh.patches[i], state.positions[i], state.mesh.dim,
                           state.mesh.element_floor);
  rec.energy = cluster_energy(state.params.gamma, cw);
  auto [v12, v13] = enclosed_volumes(state.mesh, state.positions, cw);
  rec.vol12 = v12;
  rec.vol13 = v13;

  NonlinearOps ops = nonlinear_operators(state, state.rho);
  rec.ccp_residual = ops.gammaH.size() ? ops.gammaH.cwiseAbs().maxCoeff() : 0.0;
  double fb = 0;
  if (ops.flux12.size()) fb = std::max(ops.flux12.cwiseAbs().maxCoeff(), ops.flux23.cwiseAbs().maxCoeff());
  rec.fb_residual = fb;
  rec.junction_mismatch =
      ops.junction_mismatch.size() ? ops.junction_mismatch.maxCoeff() : 0.0;

  // junction angles vs the Young angles
  ClusterMesh defm = state.mesh;
  for (int i = 0; i < 3; ++i) defm.patches[i].positions = state.positions[i];
  double err = 0;
  for (int n = 0; n < state.mesh.junction.node_count(); ++n) {
    auto nu = junction_conormals(defm, n);
    double a12 = std::acos(std::clamp(nu[0].dot(nu[1]), -1.0, 1.0));
    double a23 = std::acos(std::clamp(nu[1].dot(nu[2]), -1.0, 1.0));
    double a31 = std::acos(std::clamp(nu[2].dot(nu[0]), -1.0, 1.0));
    err = std::max({err, std::abs(a12 - state.params.theta[2]),
                    std::abs(a23 - state.params.theta[0]),
                    std::abs(a31 - state.params.theta[1])});
  }
  rec.angle_error = err;
  return rec;
}

// ---------------------------------------------------------------------------
// VTK frames

static void write_vtk_patch(const ClusterMesh& mesh, int patch, const MatX& pos, const Vec& rho,
                            const Vec& H, const std::string& path) {
  std::ofstream os(path);
  if (!os) throw UsageError("cannot write " + path);
  char buf[160];
  const MatXi& elems = mesh.patches[patch].elements;
  const int nodes = mesh.dim + 1;
  os << "# vtk DataFile Version 3.0\ntriflow patch " << patch << "\nASCII\n";
  os << "DATASET UNSTRUCTURED_GRID\n";
  os << "POINTS " << pos.rows() << " double\n";
  for (int v = 0; v < pos.rows(); ++v) {
    double z = pos.cols() == 3 ? pos(v, 2) : 0.0;
    std::snprintf(buf, sizeof buf, "%.12g %.12g %.12g\n", pos(v, 0), pos(v, 1), z);
    os << buf;
  }
  os << "CELLS " << elems.rows() << " " << elems.rows() * (nodes + 1) << "\n";
  for (int e = 0; e < elems.rows(); ++e) {
    os << nodes;
    for (int k = 0; k < nodes; ++k) os << " " << elems(e, k);
    os << "\n";
  }
  os << "CELL_TYPES " << elems.rows() << "\n";
  for (int e = 0; e < elems.rows(); ++e) os << (mesh.dim == 1 ? 3 : 5) << "\n";
  os << "POINT_DATA " << pos.rows() << "\n";
  auto scalars = [&](const char* name, const Vec& f) {
    os << "SCALARS " << name << " double 1\nLOOKUP_TABLE default\n";
    for (int v = 0; v < f.size(); ++v) {
      std::snprintf(buf, sizeof buf, "%.12g\n", f[v]);
      os << buf;
    }
  };
  scalars("rho", rho);
  scalars("mean_curvature", H);
}

void write_frame(const FlowState& state, const std::string& path_prefix) {
  for (int i = 0; i < 3; ++i) {
    GeometryCache cw = build_geometry(state.mesh.patches[i], state.positions[i], state.mesh.dim,
                                      state.mesh.element_floor);
    write_vtk_patch(state.mesh, i, state.positions[i], state.rho[i], cw.mean_curvature,
                    path_prefix + ".patch" + std::to_string(i) + ".vtk");
  }
}

// ---------------------------------------------------------------------------
// CSV series

void append_series(const DiagnosticsRecord& r, const std::string& path) {
  bool fresh = !std::ifstream(path).good();
  std::ofstream os(path, std::ios::app);
  if (!os) throw UsageError("cannot write " + path);
  if (fresh) os << kSeriesHeader << "\n";
  char buf[400];
  std::snprintf(buf, sizeof buf,
                "%.17g,%.17g,%.17g,%.17g,%.17g,%.17g,%.17g,%.17g,%d\n", r.time, r.energy,
                r.vol12, r.vol13, r.angle_error, r.fb_residual, r.ccp_residual,
                r.junction_mismatch, r.fp_iterations);
  os << buf;
}

std::vector<DiagnosticsRecord> read_series(const std::string& path) {
  std::ifstream is(path);
  if (!is) throw UsageError("cannot read " + path);
  std::string line;
  if (!std::getline(is, line)) throw ValidationError("empty series file");
  if (line != kSeriesHeader) throw ValidationError("unexpected series header: " + line);
  std::vector<DiagnosticsRecord> out;
  while (std::getline(is, line)) {
    if (line.empty()) continue;
    DiagnosticsRecord r;
    if (std::sscanf(line.c_str(), "%lg,%lg,%lg,%lg,%lg,%lg,%lg,%lg,%d", &r.time, &r.energy,
                    &r.vol12, &r.vol13, &r.angle_error, &r.fb_residual, &r.ccp_residual,
                    &r.junction_mismatch, &r.fp_iterations) != 9)
      throw ValidationError("malformed series line: " + line);
    out.push_back(r);
  }
  return out;
}

EnergyReportResult energy_report(const std::vector<DiagnosticsRecord>& series,
                                 double energy_tolerance, double volume_tolerance) {
  EnergyReportResult res;
  std::ostringstream os;
  if (series.size() < 2) {
    res.text = "series too short for a verdict\n";
    return res;
  }
  for (size_t s = 1; s < series.size(); ++s) {
    if (!(series[s].time > series[s - 1].time)) {
      res.energy_ok = false;
      os << "non-increasing time at row " << s << "\n";
    }
    double rel = (series[s].energy - series[s - 1].energy) /
                 std::max(1e-300, std::abs(series[s - 1].energy));
    res.max_energy_increase = std::max(res.max_energy_increase, rel);
    if (rel > energy_tolerance) {
      res.energy_ok = false;
      res.violating_steps += 1;
      if (res.violating_steps <= 5)
        os << "energy increased by " << rel << " (relative) at t=" << series[s].time << "\n";
    }
  }
  double v12_0 = series.front().vol12, v13_0 = series.front().vol13;
  for (const auto& r : series) {
    res.vol12_drift = std::max(res.vol12_drift, std::abs(r.vol12 - v12_0) / std::max(1e-300, std::abs(v12_0)));
    res.vol13_drift = std::max(res.vol13_drift, std::abs(r.vol13 - v13_0) / std::max(1e-300, std::abs(v13_0)));
  }
  if (res.vol12_drift > volume_tolerance || res.vol13_drift > volume_tolerance) {
    res.volume_ok = false;
    os << "volume drift " << res.vol12_drift << " / " << res.vol13_drift << " exceeds "
       << volume_tolerance << "\n";
  }
  os << "steps: " << series.size() - 1 << "\n";
  os << "energy: " << (res.energy_ok ? "PASS" : "FAIL")
     << " (max relative increase " << res.max_energy_increase << ")\n";
  os << "volumes: " << (res.volume_ok ? "PASS" : "FAIL") << " (drift " << res.vol12_drift << ", "
     << res.vol13_drift << ")\n";
  res.text = os.str();
  return res;
}

// ---------------------------------------------------------------------------
// configuration

namespace {

Vec3 parse_gamma(const std::string& s) {
  Vec3 g;
  char c1, c2;
  std::istringstream is(s);
  if (!(is >> g[0] >> c1 >> g[1] >> c2 >> g[2]) || c1 != ',' || c2 != ',')
    throw UsageError("malformed gamma value: " + s);
  return g;
}

}  // namespace

RunConfig parse_config_text(const std::string& text, bool strict) {
  RunConfig cfg;
  std::istringstream is(text);
  std::string line;
  int lineno = 0;
  while (std::getline(is, line)) {
    ++lineno;
    auto hash = line.find('#');
    if (hash != std::string::npos) line = line.substr(0, hash);
    auto eq = line.find('=');
    if (eq == std::string::npos) {
      bool blank = line.find_first_not_of(" \t\r") == std::string::npos;
      if (!blank) throw UsageError("config line " + std::to_string(lineno) + ": expected key = value");
      continue;
    }
    auto trim = [](std::string s) {
      size_t a = s.find_first_not_of(" \t\r");
      size_t b = s.find_last_not_of(" \t\r");
      return a == std::string::npos ? std::string() : s.substr(a, b - a + 1);
    };
    std::string key = trim(line.substr(0, eq));
    std::string val = trim(line.substr(eq + 1));
    if (key.empty() || val.empty())
      throw UsageError("config line " + std::to_string(lineno) + ": empty key or value");
    auto num = [&](double lo = -1e300) {
      try {
        size_t pos = 0;
        double d = std::stod(val, &pos);
        if (pos != val.size()) throw std::invalid_argument(val);
        if (d < lo) throw UsageError("config: " + key + " out of range");
        return d;
      } catch (const std::invalid_argument&) {
        throw UsageError("config: malformed value for " + key + ": " + val);
      }
    };
    if (key == "generator") cfg.generator = val;
    else if (key == "gamma") cfg.gamma = parse_gamma(val);
    else if (key == "resolution") cfg.resolution = static_cast<int>(num(1));
    else if (key == "dt") cfg.dt = num(0);
    else if (key == "t_end") cfg.t_end = num(0);
    else if (key == "max_steps") cfg.max_steps = static_cast<int>(num(0));
    else if (key == "fp_tolerance") cfg.fp_tolerance = num(0);
    else if (key == "fp_max_iters") cfg.fp_max_iters = static_cast<int>(num(1));
    else if (key == "full_fixed_point") cfg.full_fixed_point = num() != 0;
    else if (key == "eps_ref") cfg.eps_ref = num(0);
    else if (key == "w_tau") cfg.w_tau = num(0);
    else if (key == "C_u") cfg.C_u = num(0);
    else if (key == "C_v") cfg.C_v = num(0);
    else if (key == "perturb_amplitude") cfg.perturb_amplitude = num(0);
    else if (key == "seed") cfg.seed = static_cast<unsigned>(num(0));
    else if (key == "output_dir") cfg.output_dir = val;
    else if (key == "frame_stride") cfg.frame_stride = static_cast<int>(num(0));
    else if (key == "energy_tolerance") cfg.energy_tolerance = num(0);
    else if (key == "volume_tolerance") cfg.volume_tolerance = num(0);
    else if (strict) throw UsageError("config: unknown key '" + key + "'");
  }
  return cfg;
}

RunConfig load_config(const std::string& path, bool strict) {
  std::ifstream is(path);
  if (!is) throw UsageError("cannot read config " + path);
  std::stringstream ss;
  ss << is.rdbuf();
  return parse_config_text(ss.str(), strict);
}

void write_resolved_config(const RunConfig& cfg, const std::string& path) {
  std::ofstream os(path);
  if (!os) throw UsageError("cannot write " + path);
  char buf[200];
  os << "generator = " << cfg.generator << "\n";
  std::snprintf(buf, sizeof buf, "gamma = %.17g,%.17g,%.17g\n", cfg.gamma[0], cfg.gamma[1],
                cfg.gamma[2]);
  os << buf;
  os << "resolution = " << cfg.resolution << "\n";
  std::snprintf(buf, sizeof buf, "dt = %.17g\nt_end = %.17g\n", cfg.dt, cfg.t_end);
  os << buf;
  os << "max_steps = " << cfg.max_steps << "\n";
  std::snprintf(buf, sizeof buf, "fp_tolerance = %.17g\n", cfg.fp_tolerance);
  os << buf;
  os << "fp_max_iters = " << cfg.fp_max_iters << "\n";
  os << "full_fixed_point = " << (cfg.full_fixed_point ? 1 : 0) << "\n";
  std::snprintf(buf, sizeof buf, "eps_ref = %.17g\nw_tau = %.17g\nC_u = %.17g\nC_v = %.17g\n",
                cfg.eps_ref, cfg.w_tau, cfg.C_u, cfg.C_v);
  os << buf;
  std::snprintf(buf, sizeof buf, "perturb_amplitude = %.17g\n", cfg.perturb_amplitude);
  os << buf;
  os << "seed = " << cfg.seed << "\n";
  os << "output_dir = " << cfg.output_dir << "\n";
  os << "frame_stride = " << cfg.frame_stride << "\n";
  std::snprintf(buf, sizeof buf, "energy_tolerance = %.17g\nvolume_tolerance = %.17g\n",
                cfg.energy_tolerance, cfg.volume_tolerance);
  os << buf;
}

}  // namespace triflow
