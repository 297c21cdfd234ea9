#include "triflow/nonlinear_stepper.hpp"

#include <chrono>
#include <cmath>
#include <filesystem>

#include "triflow/diagnostics.hpp"

namespace triflow {

void FlowState::set_rho(const TripleField& r) {
  rho = r;
  mu = mu_from_rho(mesh, frame, coupling, rho);
  positions = apply_graph(mesh, caches, frame, rho, mu);
}

FlowState make_state(ClusterMesh mesh, PhysicsParams params) {
  FlowState st;
  st.mesh = std::move(mesh);
  if (params.theta.isZero()) params.theta = young_angles(params.gamma);
  params.validate();
  st.params = params;
  st.coupling = tangent_coupling_matrix(params.theta);
  for (int i = 0; i < 3; ++i)
    st.caches[i] = build_geometry(st.mesh.patches[i], st.mesh.patches[i].positions, st.mesh.dim,
                                  st.mesh.element_floor);
  st.frame = build_tangential_frame(st.mesh, st.caches, params, params.w_tau);
  st.sys = assemble_system(st.mesh, st.caches, params.gamma);
  st.op = std::make_shared<StepOperator>(st.sys, params.dt, params.C_u, params.C_v);
  st.eps_ref_abs = params.eps_ref > 0 ? params.eps_ref : 0.2 * st.frame.min_inradius();
  st.rho = TripleField(st.mesh);
  st.mu = TripleField(st.mesh);
  for (int i = 0; i < 3; ++i) st.positions[i] = st.mesh.patches[i].positions;
  return st;
}

namespace {

Vec3 row3(const MatX& m, int r) {
  Vec3 v = Vec3::Zero();
  v.head(m.cols()) = m.row(r).transpose();
  return v;
}

std::vector<int> patch_junction_vertices(const ClusterMesh& mesh, int patch) {
  std::vector<int> out;
  out.reserve(mesh.junction.node_count());
  for (const auto& n : mesh.junction.nodes) out.push_back(n.vertex[patch]);
  return out;
}

MatX frame_conormals(const FlowState& state, int patch) {
  const int J = state.mesh.junction.node_count();
  MatX out(J, state.mesh.ambient_dim());
  for (int n = 0; n < J; ++n)
    out.row(n) = state.frame.frames[n].nu[patch].head(state.mesh.ambient_dim()).transpose();
  return out;
}

// conormal-derivative jumps of a field on the reference cluster (the highest
// order boundary operators B2/B3 resp. B5/B6 applied to a discrete field)
void reference_jumps(const FlowState& state, const TripleField& f, Vec& jump12, Vec& jump23) {
  std::array<Vec, 3> tr;
  for (int i = 0; i < 3; ++i)
    tr[i] = surface_gradient_normal_trace(state.caches[i], f[i],
                                          patch_junction_vertices(state.mesh, i),
                                          frame_conormals(state, i));
  jump12 = tr[0] - tr[1];
  jump23 = tr[1] - tr[2];
}

}  // namespace

NonlinearOps nonlinear_operators(const FlowState& state, const TripleField& rho,
                                 const std::optional<std::array<MatX, 3>>& prev_positions,
                                 double dt) {
  NonlinearOps ops;
  TripleField mu = mu_from_rho(state.mesh, state.frame, state.coupling, rho);
  ops.deformed = apply_graph(state.mesh, state.caches, state.frame, rho, mu);

  std::array<GeometryCache, 3> cw;
  for (int i = 0; i < 3; ++i)
    cw[i] = build_geometry(state.mesh.patches[i], ops.deformed[i], state.mesh.dim,
                           state.mesh.element_floor);

  ops.V = TripleField(state.mesh);
  ops.H = TripleField(state.mesh);
  ops.lapH = TripleField(state.mesh);
  ops.mass_ratio = TripleField(state.mesh);
  for (int i = 0; i < 3; ++i) {
    ops.H[i] = cw[i].mean_curvature;
    ops.lapH[i] = laplace_beltrami(cw[i], ops.H[i]);
    ops.mass_ratio[i] = cw[i].vertex_mass.cwiseQuotient(state.caches[i].vertex_mass);
    if (prev_positions && dt > 0) {
      for (int v = 0; v < ops.V[i].size(); ++v) {
        Eigen::RowVectorXd d = (ops.deformed[i].row(v) - (*prev_positions)[i].row(v)) / dt;
        ops.V[i][v] = d.dot(cw[i].vertex_normal.row(v));
      }
    }
  }

  const int J = state.mesh.junction.node_count();
  ops.nn12.resize(J);
  ops.nn23.resize(J);
  ops.gammaH.resize(J);
  ops.gamma_lapH.resize(J);
  ops.junction_mismatch.resize(J);

  // deformed cluster for conormal traces
  ClusterMesh defm = state.mesh;
  for (int i = 0; i < 3; ++i) defm.patches[i].positions = ops.deformed[i];
  std::array<Vec, 3> flux;
  std::array<MatX, 3> nu_w;
  for (int i = 0; i < 3; ++i) nu_w[i].resize(J, state.mesh.ambient_dim());
  for (int n = 0; n < J; ++n) {
    auto nus = junction_conormals(defm, n);
    for (int i = 0; i < 3; ++i) nu_w[i].row(n) = nus[i].head(state.mesh.ambient_dim()).transpose();
  }
  for (int i = 0; i < 3; ++i)
    flux[i] = surface_gradient_normal_trace(cw[i], ops.H[i],
                                            patch_junction_vertices(state.mesh, i), nu_w[i]);
  ops.flux12 = flux[0] - flux[1];
  ops.flux23 = flux[1] - flux[2];

  const Vec3& g = state.params.gamma;
  for (int n = 0; n < J; ++n) {
    const auto& jn = state.mesh.junction.nodes[n];
    Vec3 N0 = row3(cw[0].vertex_normal, jn.vertex[0]);
    Vec3 N1 = row3(cw[1].vertex_normal, jn.vertex[1]);
    Vec3 N2 = row3(cw[2].vertex_normal, jn.vertex[2]);
    ops.nn12[n] = N0.dot(N1);
    ops.nn23[n] = N1.dot(N2);
    ops.gammaH[n] = 0;
    ops.gamma_lapH[n] = 0;
    for (int i = 0; i < 3; ++i) {
      ops.gammaH[n] += g[i] * ops.H[i][jn.vertex[i]];
      ops.gamma_lapH[n] += g[i] * ops.lapH[i][jn.vertex[i]];
    }
    Vec3 p0 = row3(ops.deformed[0], jn.vertex[0]);
    Vec3 p1 = row3(ops.deformed[1], jn.vertex[1]);
    Vec3 p2 = row3(ops.deformed[2], jn.vertex[2]);
    ops.junction_mismatch[n] =
        std::max({(p0 - p1).norm(), (p1 - p2).norm(), (p2 - p0).norm()});
  }
  return ops;
}

namespace {

void angle_condition_b23(const FlowState& state, const TripleField& u, const NonlinearOps& ops,
                         Vec& b2, Vec& b3) {
  Vec jump12, jump23;
  reference_jumps(state, u, jump12, jump23);
  double c3 = std::cos(state.params.theta[2]);
  double c1 = std::cos(state.params.theta[0]);
  b2 = jump12 - (ops.nn12.array() - c3).matrix();
  b3 = jump23 - (ops.nn23.array() - c1).matrix();
}

Inhomogeneities build_inhomogeneities(const FlowState& state, const TripleField& u_guess,
                                      const Vec& v_guess, NonlinearOps ops, double dt) {
  const AssembledSystem& sys = state.sys;
  const int J = sys.n_nodes();
  Inhomogeneities out;
  out.ops = std::move(ops);
  const NonlinearOps& O = out.ops;

  out.b[0] = Vec::Zero(J);
  angle_condition_b23(state, u_guess, O, out.b[1], out.b[2]);

  TripleField v_field = sys.unstack(v_guess);
  Vec jv12, jv23;
  reference_jumps(state, v_field, jv12, jv23);
  out.b[4] = jv12 - O.flux12;
  out.b[5] = jv23 - O.flux23;

  out.b[3].resize(J);
  for (int n = 0; n < J; ++n) {
    double gv = 0;
    for (int i = 0; i < 3; ++i) gv += sys.gamma[i] * v_field[i][state.mesh.junction.nodes[n].vertex[i]];
    out.b[3][n] = gv - O.gammaH[n];
  }

  // f = (u - rho)/dt + M^{-1}(K + C_u M) v - M^{-1} load_u(b5,b6)
  //     - (m_w/m_ref) (V + Delta_w H_w)
  Vec u_stk = sys.stack(u_guess);
  Vec rho_stk = sys.stack(state.rho);
  Vec f = (u_stk - rho_stk) / dt;
  f += (sys.stiffness * v_guess).cwiseQuotient(sys.mass_diag);
  if (state.params.C_u != 0) f += state.params.C_u * v_guess;
  BoundaryLoad bl = assemble_boundary_load(sys, Vec::Zero(J), Vec::Zero(J), out.b[4], out.b[5]);
  f -= bl.u_load.cwiseQuotient(sys.mass_diag);
  TripleField nl = O.V;
  nl += O.lapH;
  for (int i = 0; i < 3; ++i) nl[i] = nl[i].cwiseProduct(O.mass_ratio[i]);
  f -= sys.stack(nl);
  out.f = sys.unstack(f);
  return out;
}

}  // namespace

Inhomogeneities residual_inhomogeneities(const FlowState& state, const TripleField& u_guess,
                                         const Vec& v_guess_stacked,
                                         const std::array<MatX, 3>& prev_positions, double dt) {
  NonlinearOps ops = nonlinear_operators(state, u_guess, prev_positions, dt);
  return build_inhomogeneities(state, u_guess, v_guess_stacked, std::move(ops), dt);
}

Vec initial_potential(const FlowState& state, const TripleField& u, const NonlinearOps& ops) {
  const AssembledSystem& sys = state.sys;
  Vec b2, b3;
  angle_condition_b23(state, u, ops, b2, b3);
  Vec zero = Vec::Zero(sys.n_nodes());
  BoundaryLoad bl = assemble_boundary_load(sys, b2, b3, zero, zero);
  Vec rhs = sys.stiffness * sys.stack(u) + bl.v_load;
  Vec v = rhs.cwiseQuotient(sys.mass_diag);
  if (state.params.C_v != 0) v += state.params.C_v * sys.stack(u);
  return v;
}

StepResult fixed_point_step(FlowState& state, double dt) {
  if (!state.op || state.op->dt() != dt)
    state.op = std::make_shared<StepOperator>(state.sys, dt, state.params.C_u, state.params.C_v);

  const AssembledSystem& sys = state.sys;
  const std::array<MatX, 3>& prev_pos = state.positions;
  Vec anchor = sys.stack(state.rho);

  TripleField u = state.rho;
  NonlinearOps ops = nonlinear_operators(state, u, prev_pos, dt);
  Vec v = initial_potential(state, u, ops);

  StepReport rep;
  int max_iters = state.params.full_fixed_point ? state.params.fp_max_iters : 1;
  double tol = state.params.fp_tolerance;
  Vec u_stk = anchor;
  StepSolution sol;
  for (int m = 0; m < max_iters; ++m) {
    Inhomogeneities inh = build_inhomogeneities(state, u, v, std::move(ops), dt);
    sol = state.op->solve(anchor, sys.stack(inh.f), inh.b);
    double update = (sol.u - u_stk).cwiseAbs().maxCoeff();
    rep.update_norms.push_back(update);
    if (rep.update_norms.size() > 1) {
      double prev = rep.update_norms[rep.update_norms.size() - 2];
      if (prev > 0) rep.contraction_ratios.push_back(update / prev);
    }
    rep.iterations = m + 1;
    rep.final_update = update;
    u_stk = sol.u;
    u = sys.unstack(sol.u);
    v = sol.v;
    if (!state.params.full_fixed_point) {
      rep.converged = true;
      break;
    }
    if (update < tol * std::max(1.0, u_stk.cwiseAbs().maxCoeff())) {
      rep.converged = true;
      break;
    }
    if (m + 1 < max_iters) ops = nonlinear_operators(state, u, prev_pos, dt);
  }
  if (!rep.converged)
    throw ConvergenceError("fixed_point_step: no convergence after " +
                           std::to_string(rep.iterations) +
                           " iterations (update " + std::to_string(rep.final_update) +
                           "); consider halving dt");
  rep.solve = sol.report;
  return {u, rep};
}

void re_reference(FlowState& state) {
  for (int i = 0; i < 3; ++i) state.mesh.patches[i].positions = state.positions[i];
  for (int i = 0; i < 3; ++i)
    state.caches[i] = build_geometry(state.mesh.patches[i], state.mesh.patches[i].positions,
                                     state.mesh.dim, state.mesh.element_floor);
  state.frame = build_tangential_frame(state.mesh, state.caches, state.params, state.params.w_tau);
  state.sys = assemble_system(state.mesh, state.caches, state.params.gamma);
  state.op = std::make_shared<StepOperator>(state.sys, state.params.dt, state.params.C_u,
                                            state.params.C_v);
  if (state.params.eps_ref <= 0) state.eps_ref_abs = 0.2 * state.frame.min_inradius();
  state.rho = TripleField(state.mesh);
  state.mu = TripleField(state.mesh);
  state.re_reference_count += 1;
}

Trajectory run(const RunConfig& cfg) {
  namespace fs = std::filesystem;
  Trajectory traj;

  ClusterSpec spec{cfg.generator, cfg.gamma, cfg.resolution};
  bool perturbed = false;
  const std::string prefix = "perturbed-";
  if (spec.generator.rfind(prefix, 0) == 0) {
    spec.generator = spec.generator.substr(prefix.size());
    perturbed = true;
  }
  ClusterMesh mesh = build_reference_cluster(spec);

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
  FlowState state = make_state(std::move(mesh), params);

  double amp = cfg.perturb_amplitude;
  if (perturbed && amp <= 0) amp = 0.05;
  if (amp > 0) {
    TripleField rho0 = junction_preserving_perturbation(
        state.mesh, state.frame, amp * state.frame.min_inradius(), cfg.seed);
    state.set_rho(rho0);
  }

  fs::create_directories(cfg.output_dir);
  write_resolved_config(cfg, cfg.output_dir + "/resolved.cfg");
  std::string series_path = cfg.output_dir + "/series.csv";
  if (fs::exists(series_path)) fs::remove(series_path);

  DiagnosticsRecord rec = compute_diagnostics(state);
  append_series(rec, series_path);
  write_frame(state, cfg.output_dir + "/frame_000000");
  traj.records.push_back(rec);

  int n_steps = std::min<long long>(cfg.max_steps,
                                    static_cast<long long>(std::llround(cfg.t_end / cfg.dt)));
  double prev_energy = rec.energy;
  try {
    for (int s = 0; s < n_steps; ++s) {
      auto t0 = std::chrono::steady_clock::now();
      StepResult res = fixed_point_step(state, cfg.dt);
      state.set_rho(res.rho);
      state.time += cfg.dt;
      state.step_index += 1;
      auto t1 = std::chrono::steady_clock::now();

      rec = compute_diagnostics(state);
      rec.fp_iterations = res.report.iterations;
      rec.wall_ms = std::chrono::duration<double, std::milli>(t1 - t0).count();
      double rel_inc = (rec.energy - prev_energy) / std::max(1e-300, std::abs(prev_energy));
      if (rel_inc > cfg.energy_tolerance) traj.energy_violations += 1;
      traj.max_energy_increase = std::max(traj.max_energy_increase, rel_inc);
      prev_energy = rec.energy;
      append_series(rec, series_path);
      traj.records.push_back(rec);
      traj.steps += 1;

      if (cfg.frame_stride > 0 && (s + 1) % cfg.frame_stride == 0) {
        char name[32];
        std::snprintf(name, sizeof name, "/frame_%06d", s + 1);
        write_frame(state, cfg.output_dir + name);
      }
      if (state.rho.sup_norm() >= state.eps_ref_abs) {
        re_reference(state);
        traj.re_references += 1;
      }
    }
    traj.completed = true;
  } catch (const RuntimeFailure& e) {
    traj.failure = "step " + std::to_string(state.step_index) + ": " + e.what();
  }
  write_frame(state, cfg.output_dir + "/frame_final");
  traj.re_references = state.re_reference_count;
  return traj;
}

}  // namespace triflow
