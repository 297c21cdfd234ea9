#include "triflow/verification.hpp"

#include <Eigen/Dense>
#include <Eigen/SVD>
#include <cmath>
#include <numbers>
#include <set>
#include <sstream>

namespace triflow {

namespace {

using Cplx = std::complex<double>;

Vec3 row3v(const MatX& m, int r) {
  Vec3 v = Vec3::Zero();
  v.head(m.cols()) = m.row(r).transpose();
  return v;
}

// 1-ring interior mask: vertices whose stencil avoids the patch boundary
std::vector<char> interior_mask(const ClusterMesh& mesh, int patch) {
  const Patch& p = mesh.patches[patch];
  std::vector<char> boundary(p.vertex_count(), 0);
  for (int b : p.boundary_vertices) boundary[b] = 1;
  std::vector<char> mask(p.vertex_count(), 1);
  for (int e = 0; e < p.element_count(); ++e) {
    bool touches = false;
    for (int k = 0; k <= mesh.dim; ++k) touches |= boundary[p.elements(e, k)] != 0;
    if (touches)
      for (int k = 0; k <= mesh.dim; ++k) mask[p.elements(e, k)] = 0;
  }
  return mask;
}

// inward chain (v0 on the junction, then two interior vertices) used for
// endpoint curvature; mirrors the walk in junction_conormals
std::array<int, 3> inward_chain(const ClusterMesh& mesh, int patch, int node) {
  const Patch& p = mesh.patches[patch];
  int v0 = mesh.junction.nodes[node].vertex[patch];
  std::set<int> junction_ids;
  for (const auto& nn : mesh.junction.nodes) junction_ids.insert(nn.vertex[patch]);
  if (mesh.dim == 1) {
    int v1 = -1, v2 = -1;
    for (int e = 0; e < p.element_count(); ++e) {
      if (p.elements(e, 0) == v0) v1 = p.elements(e, 1);
      if (p.elements(e, 1) == v0) v1 = p.elements(e, 0);
    }
    for (int e = 0; e < p.element_count(); ++e) {
      int a = p.elements(e, 0), b = p.elements(e, 1);
      if (a == v1 && b != v0) v2 = b;
      if (b == v1 && a != v0) v2 = a;
    }
    return {v0, v1, v2};
  }
  Vec3 x0 = row3v(p.positions, v0);
  auto pick = [&](int v, const Vec3& dir) {
    int best = -1;
    double best_d = -2;
    Vec3 xv = row3v(p.positions, v);
    for (int e = 0; e < p.element_count(); ++e) {
      bool has = false;
      for (int k = 0; k < 3; ++k) has |= p.elements(e, k) == v;
      if (!has) continue;
      for (int k = 0; k < 3; ++k) {
        int w = p.elements(e, k);
        if (w == v || junction_ids.count(w)) continue;
        double d = (row3v(p.positions, w) - xv).normalized().dot(dir);
        if (d > best_d) {
          best_d = d;
          best = w;
        }
      }
    }
    return best;
  };
  Vec3 rough = Vec3::Zero();
  for (int e = 0; e < p.element_count(); ++e) {
    for (int k = 0; k < 3; ++k) {
      if (p.elements(e, k) == v0) {
        Vec3 c = (row3v(p.positions, p.elements(e, 0)) + row3v(p.positions, p.elements(e, 1)) +
                  row3v(p.positions, p.elements(e, 2))) /
                 3.0;
        rough += c - x0;
      }
    }
  }
  rough.normalize();
  int v1 = pick(v0, rough);
  int v2 = v1 >= 0 ? pick(v1, (row3v(p.positions, v1) - x0).normalized()) : -1;
  return {v0, v1, v2};
}

// signed normal curvature II(nu,nu) at a junction vertex from the circle
// through the inward chain; sign relative to the vertex normal
double junction_normal_curvature(const ClusterMesh& mesh, const GeometryCache& cache, int patch,
                                 int node) {
  auto chain = inward_chain(mesh, patch, node);
  if (chain[1] < 0 || chain[2] < 0) return 0.0;
  const MatX& pos = cache.positions;
  Vec3 p0 = row3v(pos, chain[0]), p1 = row3v(pos, chain[1]), p2 = row3v(pos, chain[2]);
  Vec3 a = p1 - p0, b = p2 - p0;
  Vec3 e1 = a.normalized();
  Vec3 bp = b - b.dot(e1) * e1;
  if (bp.norm() < 1e-12 * a.norm()) return 0.0;  // straight chain
  Vec3 e2 = bp.normalized();
  double ax = a.norm(), bx = b.dot(e1), by = b.dot(e2);
  double u = 0.5 * ax;
  double v = (bx * bx + by * by - 2.0 * u * bx) / (2.0 * by);
  Vec3 center = p0 + u * e1 + v * e2;
  double R = std::sqrt(u * u + v * v);
  Vec3 N = row3v(cache.vertex_normal, chain[0]);
  double s = (center - p0).dot(N) > 0 ? 1.0 : -1.0;
  return s / R;
}

}  // namespace

TripleField make_admissible(const FlowState& state, TripleField u) {
  const Vec3& g = state.params.gamma;
  double g2 = g.squaredNorm();
  for (int n = 0; n < state.mesh.junction.node_count(); ++n) {
    Vec3 tr = u.trace(state.mesh, n);
    tr -= g * (g.dot(tr) / g2);
    u.set_trace(state.mesh, n, tr);
  }
  return u;
}

std::vector<FdTableRow> fd_check_linearization(const FlowState& state, LinearizedQuantity which,
                                               const TripleField& u,
                                               const std::vector<double>& eps_ladder) {
  for (int n = 0; n < state.mesh.junction.node_count(); ++n) {
    if (std::abs(state.params.gamma.dot(u.trace(state.mesh, n))) > 1e-10)
      throw ValidationError("fd_check_linearization: u is not admissible on Sigma");
  }
  for (size_t k = 1; k < eps_ladder.size(); ++k)
    if (!(eps_ladder[k] < eps_ladder[k - 1]) || eps_ladder[k] <= 0)
      throw ValidationError("fd_check_linearization: ladder must be positive decreasing");

  TripleField mu = mu_from_rho(state.mesh, state.frame, state.coupling, u);

  auto scaled = [&](double s) {
    TripleField r = u, m = mu;
    r *= s;
    m *= s;
    return apply_graph(state.mesh, state.caches, state.frame, r, m);
  };

  // reference formula per quantity
  std::array<std::vector<char>, 3> mask;
  for (int i = 0; i < 3; ++i) mask[i] = interior_mask(state.mesh, i);

  TripleField formula(state.mesh);
  Vec formula_nodes;
  if (which == LinearizedQuantity::MeanCurvature) {
    for (int i = 0; i < 3; ++i) {
      Vec lap = laplace_beltrami(state.caches[i], u[i]);
      MatX gradH = surface_gradient(state.caches[i], state.caches[i].mean_curvature);
      for (int v = 0; v < u[i].size(); ++v) {
        double tangential = mu[i][v] * gradH.row(v).dot(state.frame.tau[i].row(v));
        formula[i][v] = lap[v] + state.caches[i].second_form_sq[v] * u[i][v] + tangential;
      }
    }
  } else if (which == LinearizedQuantity::NormalVelocity) {
    formula = u;  // d/deps V = time derivative of the linearization variable
  } else {
    // d/deps <N1,N2> and <N2,N3>: conormal-derivative jumps plus the
    // II(nu,nu) phi terms; one value per junction node and pair
    const int J = state.mesh.junction.node_count();
    formula_nodes.resize(2 * J);
    std::array<Vec, 3> tr;
    for (int i = 0; i < 3; ++i) {
      std::vector<int> jv;
      MatX nus(J, state.mesh.ambient_dim());
      for (int n = 0; n < J; ++n) {
        jv.push_back(state.mesh.junction.nodes[n].vertex[i]);
        nus.row(n) = state.frame.frames[n].nu[i].head(state.mesh.ambient_dim()).transpose();
      }
      tr[i] = surface_gradient_normal_trace(state.caches[i], u[i], jv, nus);
    }
    for (int n = 0; n < J; ++n) {
      Vec3 phi = state.coupling * u.trace(state.mesh, n);
      std::array<double, 3> pi_nu;
      for (int i = 0; i < 3; ++i)
        pi_nu[i] = junction_normal_curvature(state.mesh, state.caches[i], i, n);
      formula_nodes[2 * n] = tr[0][n] + pi_nu[0] * phi[0] - tr[1][n] - pi_nu[1] * phi[1];
      formula_nodes[2 * n + 1] = tr[1][n] + pi_nu[1] * phi[1] - tr[2][n] - pi_nu[2] * phi[2];
    }
  }

  auto quantity_nodes = [&](double s) {
    auto pos = scaled(s);
    std::array<GeometryCache, 3> cw;
    for (int i = 0; i < 3; ++i)
      cw[i] = build_geometry(state.mesh.patches[i], pos[i], state.mesh.dim,
                             state.mesh.element_floor);
    const int J = state.mesh.junction.node_count();
    Vec q(2 * J);
    for (int n = 0; n < J; ++n) {
      const auto& jn = state.mesh.junction.nodes[n];
      Vec3 N0 = row3v(cw[0].vertex_normal, jn.vertex[0]);
      Vec3 N1 = row3v(cw[1].vertex_normal, jn.vertex[1]);
      Vec3 N2 = row3v(cw[2].vertex_normal, jn.vertex[2]);
      q[2 * n] = N0.dot(N1);
      q[2 * n + 1] = N1.dot(N2);
    }
    return q;
  };

  auto quantity_fields = [&](double s) {
    auto pos = scaled(s);
    TripleField q(state.mesh);
    for (int i = 0; i < 3; ++i) {
      GeometryCache cw = build_geometry(state.mesh.patches[i], pos[i], state.mesh.dim,
                                        state.mesh.element_floor);
      if (which == LinearizedQuantity::MeanCurvature) {
        q[i] = cw.mean_curvature;
      } else {
        for (int v = 0; v < q[i].size(); ++v) {
          Eigen::RowVectorXd disp =
              u[i][v] * state.caches[i].vertex_normal.row(v) + mu[i][v] * state.frame.tau[i].row(v);
          q[i][v] = disp.dot(cw.vertex_normal.row(v));
        }
      }
    }
    return q;
  };

  std::vector<FdTableRow> table;
  for (double eps : eps_ladder) {
    double err = 0;
    if (which == LinearizedQuantity::NormalProduct) {
      Vec qp = quantity_nodes(eps), qm = quantity_nodes(-eps);
      Vec fd = (qp - qm) / (2.0 * eps);
      double scale = std::max(1.0, formula_nodes.cwiseAbs().maxCoeff());
      err = (fd - formula_nodes).cwiseAbs().maxCoeff() / scale;
    } else {
      TripleField qp = quantity_fields(eps), qm = quantity_fields(-eps);
      double scale = 1.0;
      for (int i = 0; i < 3; ++i)
        for (int v = 0; v < formula[i].size(); ++v)
          if (mask[i][v]) scale = std::max(scale, std::abs(formula[i][v]));
      if (which == LinearizedQuantity::NormalVelocity) {
        // the derivative of V_eps equals the even average of V_eps/eps
        for (int i = 0; i < 3; ++i)
          for (int v = 0; v < formula[i].size(); ++v) {
            if (!mask[i][v]) continue;
            double fd = 0.5 * (qp[i][v] + qm[i][v]);
            err = std::max(err, std::abs(fd - formula[i][v]) / scale);
          }
      } else {
        for (int i = 0; i < 3; ++i)
          for (int v = 0; v < formula[i].size(); ++v) {
            if (!mask[i][v]) continue;
            double fd = (qp[i][v] - qm[i][v]) / (2.0 * eps);
            err = std::max(err, std::abs(fd - formula[i][v]) / scale);
          }
      }
    }
    FdTableRow row{eps, err, 0.0};
    if (!table.empty() && err > 0 && table.back().error > 0)
      row.order = std::log(table.back().error / err) / std::log(table.back().eps / eps);
    table.push_back(row);
  }
  return table;
}

// ---------------------------------------------------------------------------
// Lopatinskii-Shapiro probe

LopatinskiiResult lopatinskii_min_sv(const LopatinskiiProbe& probe) {
  LopatinskiiResult res;
  std::array<std::array<Cplx, 2>, 3> omega;
  for (int i = 0; i < 3; ++i) {
    double q = probe.zeta_norm[i];
    Cplx w = probe.lambda + std::pow(q, 4);
    if (std::abs(w) < 1e-14)
      throw ValidationError("lopatinskii: lambda + |zeta'|^4 = 0 is excluded");
    // fourth roots of -w, principal argument; keep the two with Re < 0
    double r = std::pow(std::abs(w), 0.25);
    double phi = std::arg(-w);
    int found = 0;
    for (int k = 0; k < 4 && found < 2; ++k) {
      Cplx root = r * std::exp(Cplx(0, (phi + 2.0 * std::numbers::pi * k) / 4.0));
      if (root.real() < -1e-14) omega[i][found++] = root;
    }
    if (found != 2)
      throw ValidationError("lopatinskii: did not find two decaying exponents");
    res.exponents[2 * i] = omega[i][0];
    res.exponents[2 * i + 1] = omega[i][1];
  }

  Eigen::Matrix<Cplx, 6, 6> A = Eigen::Matrix<Cplx, 6, 6>::Zero();
  auto col = [&](int i, int j) { return 2 * i + j; };
  for (int i = 0; i < 3; ++i) {
    double g = probe.gamma[i];
    double q2 = probe.zeta_norm[i] * probe.zeta_norm[i];
    for (int j = 0; j < 2; ++j) {
      Cplx w = omega[i][j];
      int c = col(i, j);
      A(0, c) = g;                            // sum gamma_i phi_i = 0
      if (i == 0) A(1, c) = w;                // phi_1' - phi_2' = 0
      if (i == 1) A(1, c) = -w;
      if (i == 1) A(2, c) = w;                // phi_2' - phi_3' = 0
      if (i == 2) A(2, c) = -w;
      A(3, c) = g * (q2 - w * w);             // sum gamma_i (q^2 phi - phi'') = 0
      if (i == 0) A(4, c) = w * w * w - q2 * w;   // phi_1''' - phi_2''' - q1^2 phi_1' + q2^2 phi_2'
      if (i == 1) A(4, c) = -(w * w * w) + q2 * w;
      if (i == 1) A(5, c) = w * w * w - q2 * w;
      if (i == 2) A(5, c) = -(w * w * w) + q2 * w;
    }
  }
  res.matrix = A;
  Eigen::JacobiSVD<Eigen::Matrix<Cplx, 6, 6>> svd(A);
  res.min_singular_value = svd.singularValues().minCoeff();
  return res;
}

std::array<double, 3> sample_metric_norms(const FlowState& state, double zeta_magnitude) {
  // |zeta'|_{g_i} for a unit cotangent vector along Sigma, sampled from the
  // first junction-adjacent element of each patch; with boundary-adapted
  // coordinates the norms reduce to zeta over the local edge scale.
  std::array<double, 3> out;
  for (int i = 0; i < 3; ++i) {
    const Patch& p = state.mesh.patches[i];
    double h = 0;
    int cnt = 0;
    std::set<int> bset(p.boundary_vertices.begin(), p.boundary_vertices.end());
    for (int e = 0; e < p.element_count() && cnt < 16; ++e) {
      bool touches = false;
      for (int k = 0; k <= state.mesh.dim; ++k) touches |= bset.count(p.elements(e, k)) > 0;
      if (!touches) continue;
      double m = state.caches[i].element_measure[e];
      h += state.mesh.dim == 2 ? std::sqrt(m) : m;
      ++cnt;
    }
    out[i] = cnt ? zeta_magnitude / (h / cnt) : zeta_magnitude;
  }
  return out;
}

// ---------------------------------------------------------------------------
// compatibility

bool CompatibilityReport::pass(const std::map<std::string, double>& thresholds) const {
  for (const auto& [key, value] : residuals) {
    auto it = thresholds.find(key);
    if (it != thresholds.end() && value > it->second) return false;
  }
  return true;
}

std::string CompatibilityReport::text() const {
  std::ostringstream os;
  for (const auto& [key, value] : residuals) os << "  " << key << ": " << value << "\n";
  return os.str();
}

CompatibilityResult check_compatibility(const FlowState& state, const TripleField& rho0) {
  NonlinearOps ops = nonlinear_operators(state, rho0);
  const Vec3& g = state.params.gamma;
  CompatibilityResult res;

  auto maxabs = [](const Vec& v) { return v.size() ? v.cwiseAbs().maxCoeff() : 0.0; };
  double cos_t3 = std::cos(state.params.theta[2]);
  double cos_t1 = std::cos(state.params.theta[0]);
  Vec ac12 = (ops.nn12.array() - cos_t3).matrix();
  Vec ac23 = (ops.nn23.array() - cos_t1).matrix();

  res.gcc.residuals["CC"] = maxabs(ops.junction_mismatch);
  res.gcc.residuals["AC12"] = maxabs(ac12);
  res.gcc.residuals["AC23"] = maxabs(ac23);
  res.gcc.residuals["CCP"] = maxabs(ops.gammaH);
  res.gcc.residuals["FB12"] = maxabs(ops.flux12);
  res.gcc.residuals["FB23"] = maxabs(ops.flux23);
  res.gcc.residuals["LAPH"] = maxabs(ops.gamma_lapH);

  // analytic form: G-residuals plus the gamma-weighted K-sum with the
  // junction velocity coupling resolved through mu = T rho
  const int J = state.mesh.junction.node_count();
  std::array<GeometryCache, 3> cw;
  for (int i = 0; i < 3; ++i)
    cw[i] = build_geometry(state.mesh.patches[i], ops.deformed[i], state.mesh.dim,
                           state.mesh.element_floor);
  Vec g1(J), k_sum(J);
  for (int n = 0; n < J; ++n) {
    const auto& jn = state.mesh.junction.nodes[n];
    g1[n] = g.dot(rho0.trace(state.mesh, n));
    Mat3 B = Mat3::Zero();
    Vec3 rhs;
    for (int i = 0; i < 3; ++i) {
      Vec3 N_star = state.frame.frames[n].normal[i];
      Vec3 nu_star = state.frame.frames[n].nu[i];
      Vec3 Nw = Vec3::Zero();
      Nw.head(state.mesh.ambient_dim()) = cw[i].vertex_normal.row(jn.vertex[i]).transpose();
      B(i, i) += N_star.dot(Nw);
      for (int k = 0; k < 3; ++k) B(i, k) += nu_star.dot(Nw) * state.coupling(i, k);
      rhs[i] = -ops.lapH[i][jn.vertex[i]];
    }
    Vec3 dt_rho = B.fullPivLu().solve(rhs);
    k_sum[n] = g.dot(dt_rho);
  }
  res.acc.residuals["G1"] = maxabs(g1);
  res.acc.residuals["AC12"] = res.gcc.residuals["AC12"];
  res.acc.residuals["AC23"] = res.gcc.residuals["AC23"];
  res.acc.residuals["CCP"] = res.gcc.residuals["CCP"];
  res.acc.residuals["FB12"] = res.gcc.residuals["FB12"];
  res.acc.residuals["FB23"] = res.gcc.residuals["FB23"];
  res.acc.residuals["LAPH"] = maxabs(k_sum);
  return res;
}

std::map<std::string, double> default_compatibility_thresholds(const FlowState& state) {
  // scaled to the stationarity level of the unperturbed generators
  double h = 0;
  for (int i = 0; i < 3; ++i) h = std::max(h, state.caches[i].element_measure.maxCoeff());
  if (state.mesh.dim == 2) h = std::sqrt(h);
  std::map<std::string, double> t;
  t["CC"] = 1e-10;
  t["G1"] = 1e-10;
  t["AC12"] = t["AC23"] = 20.0 * h * h;
  t["CCP"] = 2.0;
  t["FB12"] = t["FB23"] = 40.0;
  t["LAPH"] = 100.0;
  return t;
}

}  // namespace triflow
