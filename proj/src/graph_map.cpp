#include "triflow/graph_map.hpp"

#include <Eigen/SparseCholesky>
#include <cmath>
#include <numbers>
#include <queue>
#include <random>
#include <set>

namespace triflow {

namespace {
constexpr double kPi = std::numbers::pi;
}

void PhysicsParams::validate() const {
  if ((gamma.array() <= 0).any()) throw ValidationError("params: gamma must be positive");
  if (!(dt > 0)) throw ValidationError("params: dt must be positive");
  if (C_u < 0 || C_v < 0) throw ValidationError("params: coercivity shifts must be >= 0");
  double ref = std::sin(theta[0]) / gamma[0];
  for (int i = 1; i < 3; ++i) {
    if (std::abs(std::sin(theta[i]) / gamma[i] - ref) > 1e-12)
      throw ValidationError("params: theta violates Young's law");
  }
  if (std::abs(theta.sum() - 2.0 * kPi) > 1e-12)
    throw ValidationError("params: angles do not sum to 2*pi");
}

Vec3 young_angles(const Vec3& gamma) {
  if ((gamma.array() <= 0).any()) throw ValidationError("young_angles: gamma must be positive");
  for (int k = 0; k < 3; ++k) {
    int i = (k + 1) % 3, j = (k + 2) % 3;
    if (!(gamma[k] < gamma[i] + gamma[j]))
      throw ValidationError("young_angles: degenerate wetting, gamma" + std::to_string(k + 1) +
                            " >= sum of the others");
  }
  // theta^k = pi - (force triangle angle between sides gamma^i, gamma^j)
  Vec3 theta;
  for (int k = 0; k < 3; ++k) {
    int i = (k + 1) % 3, j = (k + 2) % 3;
    double c = (gamma[i] * gamma[i] + gamma[j] * gamma[j] - gamma[k] * gamma[k]) /
               (2.0 * gamma[i] * gamma[j]);
    theta[k] = kPi - std::acos(std::clamp(c, -1.0, 1.0));
  }
  return theta;
}

Mat3 tangent_coupling_matrix(const Vec3& theta) {
  Vec3 s = theta.array().sin();
  Vec3 c = theta.array().cos();
  for (int i = 0; i < 3; ++i)
    if (std::abs(s[i]) < 1e-12)
      throw ValidationError("tangent_coupling_matrix: sin(theta) vanishes");
  Mat3 T;
  T << 0, c[1] / s[0], -c[2] / s[0],  //
      -c[0] / s[1], 0, c[2] / s[1],   //
      c[0] / s[2], -c[1] / s[2], 0;
  return T;
}

double cutoff_weight(double dist, double w) {
  if (dist <= 0.5 * w) return 1.0;
  if (dist >= w) return 0.0;
  double t = (w - dist) / (0.5 * w);  // 1 -> 0 ramp position reversed
  // quintic smoothstep on t in [0,1]
  return t * t * t * (10.0 - 15.0 * t + 6.0 * t * t);
}

namespace {

// multi-source Dijkstra over mesh edges; sources are the junction vertices
void graph_distance(const Patch& p, int dim, const std::vector<std::pair<int, int>>& sources,
                    Vec& dist, Eigen::VectorXi& nearest) {
  const int V = p.vertex_count();
  dist = Vec::Constant(V, std::numeric_limits<double>::infinity());
  nearest = Eigen::VectorXi::Constant(V, -1);
  std::vector<std::vector<std::pair<int, double>>> adj(V);
  for (int e = 0; e < p.element_count(); ++e) {
    for (int a = 0; a <= dim; ++a) {
      for (int b = a + 1; b <= dim; ++b) {
        int u = p.elements(e, a), v = p.elements(e, b);
        double w = (p.positions.row(u) - p.positions.row(v)).norm();
        adj[u].push_back({v, w});
        adj[v].push_back({u, w});
      }
    }
  }
  using Entry = std::tuple<double, int, int>;  // dist, node id (tiebreak), vertex
  std::priority_queue<Entry, std::vector<Entry>, std::greater<>> pq;
  for (auto [vid, node] : sources) {
    dist[vid] = 0.0;
    nearest[vid] = node;
    pq.push({0.0, node, vid});
  }
  while (!pq.empty()) {
    auto [d, node, v] = pq.top();
    pq.pop();
    if (d > dist[v] || (d == dist[v] && node > nearest[v])) continue;
    for (auto [w, len] : adj[v]) {
      double nd = d + len;
      if (nd < dist[w] || (nd == dist[w] && node < nearest[w])) {
        dist[w] = nd;
        nearest[w] = node;
        pq.push({nd, node, w});
      }
    }
  }
}

Vec3 to3(const Eigen::RowVectorXd& r) {
  Vec3 v = Vec3::Zero();
  v.head(r.size()) = r.transpose();
  return v;
}

// Fit exactly Young-compatible frames to the discrete conormals and normals.
JunctionFrame fit_junction_frame(const ClusterMesh& mesh,
                                 const std::array<GeometryCache, 3>& caches,
                                 const Vec3& theta, int node) {
  const auto& jn = mesh.junction.nodes[node];
  std::array<Vec3, 3> nu_hat = junction_conormals(mesh, node);
  std::array<Vec3, 3> n_hat;
  for (int i = 0; i < 3; ++i) n_hat[i] = to3(caches[i].vertex_normal.row(jn.vertex[i]));

  // plane normal t: the junction tangent for dim 2, the z axis for dim 1
  Vec3 t = Vec3(0, 0, 1);
  if (mesh.dim == 2) {
    int n = mesh.junction.node_count();
    int prev = (node - 1 + n) % n, next = (node + 1) % n;
    if (!mesh.junction.closed) {
      prev = std::max(node - 1, 0);
      next = std::min(node + 1, n - 1);
    }
    Vec3 a = to3(mesh.patches[0].positions.row(mesh.junction.nodes[prev].vertex[0]));
    Vec3 b = to3(mesh.patches[0].positions.row(mesh.junction.nodes[next].vertex[0]));
    t = (b - a).normalized();
  }

  Vec3 e1 = (nu_hat[0] - nu_hat[0].dot(t) * t).normalized();
  Vec3 e2 = t.cross(e1);

  // handedness: normals should be the +90 degree rotations of the conormals
  double s = 0;
  for (int i = 0; i < 3; ++i) {
    Vec3 nu_p = (nu_hat[i] - nu_hat[i].dot(t) * t).normalized();
    Vec3 rot(0, 0, 0);
    rot = -nu_p.dot(e2) * e1 + nu_p.dot(e1) * e2;
    s += n_hat[i].dot(rot);
  }
  if (s < 0) e2 = -e2;

  // conormal direction offsets (0, +theta3, -theta2), with the normals the
  // +90 degree rotations of the conormals in the same basis: the unique
  // arrangement for which mu = T rho keeps the junction concurrent exactly
  const double offs[3] = {0.0, theta[2], -theta[1]};
  double sx = 0, sy = 0;
  for (int i = 0; i < 3; ++i) {
    double ai = std::atan2(nu_hat[i].dot(e2), nu_hat[i].dot(e1));
    sx += std::cos(ai - offs[i]);
    sy += std::sin(ai - offs[i]);
  }
  double alpha = std::atan2(sy, sx);

  JunctionFrame f;
  for (int i = 0; i < 3; ++i) {
    double a = alpha + offs[i];
    f.nu[i] = std::cos(a) * e1 + std::sin(a) * e2;
    f.normal[i] = -std::sin(a) * e1 + std::cos(a) * e2;
  }
  return f;
}

}  // namespace

TangentialFrame build_tangential_frame(const ClusterMesh& mesh,
                                       const std::array<GeometryCache, 3>& caches,
                                       const PhysicsParams& params, double w_tau) {
  TangentialFrame fr;
  const int ad = mesh.ambient_dim();

  fr.frames.resize(mesh.junction.node_count());
  for (int n = 0; n < mesh.junction.node_count(); ++n)
    fr.frames[n] = fit_junction_frame(mesh, caches, params.theta, n);

  for (int i = 0; i < 3; ++i) {
    std::vector<std::pair<int, int>> sources;
    for (int n = 0; n < mesh.junction.node_count(); ++n)
      sources.push_back({mesh.junction.nodes[n].vertex[i], n});
    graph_distance(mesh.patches[i], mesh.dim, sources, fr.geo_dist[i], fr.nearest_node[i]);
    fr.inradius[i] = sources.empty() ? 0.0 : fr.geo_dist[i].maxCoeff();
  }

  if (w_tau <= 0) {
    // default: four boundary element lengths
    double h = 0;
    int cnt = 0;
    for (int i = 0; i < 3; ++i) {
      const Patch& p = mesh.patches[i];
      std::set<int> bset(p.boundary_vertices.begin(), p.boundary_vertices.end());
      for (int e = 0; e < p.element_count(); ++e) {
        for (int k = 0; k <= mesh.dim; ++k) {
          if (bset.count(p.elements(e, k))) {
            double m = caches[i].element_measure[e];
            if (mesh.dim == 2) m = std::sqrt(m);
            h += m;
            ++cnt;
            break;
          }
        }
      }
    }
    w_tau = cnt ? 4.0 * h / cnt : 0.1;
    // keep the default support inside the projection's domain on coarse meshes
    if (mesh.junction.node_count() > 0) w_tau = std::min(w_tau, 0.5 * fr.min_inradius());
  }
  if (mesh.junction.node_count() > 0 && w_tau > fr.min_inradius())
    throw ValidationError("build_tangential_frame: w_tau exceeds the patch inradius, "
                          "nearest-junction projection is ambiguous");
  fr.w_tau = w_tau;

  for (int i = 0; i < 3; ++i) {
    const int V = mesh.patches[i].vertex_count();
    fr.tau[i] = MatX::Zero(V, ad);
    fr.weight[i] = Vec::Zero(V);
    for (int v = 0; v < V; ++v) {
      double d = fr.geo_dist[i][v];
      double w = cutoff_weight(d, w_tau);
      fr.weight[i][v] = w;
      if (w == 0.0) {
        fr.nearest_node[i][v] = d <= w_tau ? fr.nearest_node[i][v] : -1;
        continue;
      }
      int node = fr.nearest_node[i][v];
      Vec3 nu = fr.frames[node].nu[i];
      if (d == 0.0) {
        fr.tau[i].row(v) = nu.head(ad);  // exactly the conormal on Sigma
        continue;
      }
      Vec3 n = to3(caches[i].vertex_normal.row(v));
      Vec3 tproj = nu - nu.dot(n) * n;
      double len = tproj.norm();
      if (len < 1e-8) continue;  // conormal nearly normal here; outside sane support
      fr.tau[i].row(v) = (w * tproj / len).head(ad);
    }
  }
  return fr;
}

TripleField mu_from_rho(const ClusterMesh& mesh, const TangentialFrame& frame, const Mat3& T,
                        const MatX& rho_on_sigma) {
  if (rho_on_sigma.rows() != mesh.junction.node_count() || rho_on_sigma.cols() != 3)
    throw ValidationError("mu_from_rho: rho_on_sigma must be nodes x 3");
  TripleField mu(mesh);
  for (int i = 0; i < 3; ++i) {
    for (int v = 0; v < mu[i].size(); ++v) {
      int node = frame.nearest_node[i][v];
      if (node < 0) continue;
      double w = frame.weight[i][v];
      if (w == 0.0) continue;
      Vec3 coupled = T * rho_on_sigma.row(node).transpose();
      mu[i][v] = w * coupled[i];
    }
  }
  return mu;
}

TripleField mu_from_rho(const ClusterMesh& mesh, const TangentialFrame& frame, const Mat3& T,
                        const TripleField& rho) {
  MatX tr(mesh.junction.node_count(), 3);
  for (int n = 0; n < mesh.junction.node_count(); ++n)
    tr.row(n) = rho.trace(mesh, n).transpose();
  return mu_from_rho(mesh, frame, T, tr);
}

std::array<MatX, 3> apply_graph(const ClusterMesh& mesh,
                                const std::array<GeometryCache, 3>& caches,
                                const TangentialFrame& frame, const TripleField& rho,
                                const TripleField& mu, bool check_foldover) {
  std::array<MatX, 3> out;
  const int ad = mesh.ambient_dim();
  std::array<std::set<int>, 3> junction_of;
  std::array<std::vector<int>, 3> node_of;
  for (int i = 0; i < 3; ++i) node_of[i].assign(mesh.patches[i].vertex_count(), -1);
  for (int n = 0; n < mesh.junction.node_count(); ++n)
    for (int i = 0; i < 3; ++i) node_of[i][mesh.junction.nodes[n].vertex[i]] = n;

  for (int i = 0; i < 3; ++i) {
    const Patch& p = mesh.patches[i];
    if (rho[i].size() != p.vertex_count() || mu[i].size() != p.vertex_count())
      throw ValidationError("apply_graph: field sized to a different mesh");
    out[i] = p.positions;
    for (int v = 0; v < p.vertex_count(); ++v) {
      int node = node_of[i][v];
      Eigen::RowVectorXd n, t;
      if (node >= 0) {
        n = frame.frames[node].normal[i].head(ad).transpose();
        t = frame.frames[node].nu[i].head(ad).transpose();
      } else {
        n = caches[i].vertex_normal.row(v);
        t = frame.tau[i].row(v);
      }
      out[i].row(v) += rho[i][v] * n + mu[i][v] * t;
    }
    if (check_foldover) {
      for (int e = 0; e < p.element_count(); ++e) {
        if (mesh.dim == 1) {
          Eigen::RowVectorXd d = out[i].row(p.elements(e, 1)) - out[i].row(p.elements(e, 0));
          Eigen::RowVectorXd d0 = p.positions.row(p.elements(e, 1)) - p.positions.row(p.elements(e, 0));
          if (d.norm() < mesh.element_floor || d.dot(d0) <= 0)
            throw FoldOverError("patch " + std::to_string(i) + " element " + std::to_string(e) +
                                " folded over");
        } else {
          Vec3 a = out[i].row(p.elements(e, 0)), b = out[i].row(p.elements(e, 1)),
               c = out[i].row(p.elements(e, 2));
          Vec3 n = (b - a).cross(c - a);
          if (0.5 * n.norm() < mesh.element_floor ||
              n.dot(caches[i].element_normal.row(e).transpose()) <= 0)
            throw FoldOverError("patch " + std::to_string(i) + " element " + std::to_string(e) +
                                " folded over");
        }
      }
    }
  }
  return out;
}

TripleField junction_preserving_perturbation(const ClusterMesh& mesh,
                                             const TangentialFrame& frame, double amplitude,
                                             unsigned seed) {
  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> uni(-1.0, 1.0);
  TripleField rho(mesh);
  for (int i = 0; i < 3; ++i) {
    const Patch& p = mesh.patches[i];
    GeometryCache cache = build_geometry(p, p.positions, mesh.dim, mesh.element_floor);
    Vec noise(p.vertex_count());
    for (int v = 0; v < p.vertex_count(); ++v) noise[v] = uni(rng);
    // implicit heat smoothing (M + c K) u = M noise with a support-scale c
    double scale = frame.inradius[i] > 0 ? frame.inradius[i] : std::sqrt(patch_area(cache));
    double c = std::pow(0.15 * scale, 2);
    SparseMat A = cache.stiffness * c;
    for (int v = 0; v < p.vertex_count(); ++v) A.coeffRef(v, v) += cache.vertex_mass[v];
    Eigen::SimplicialLDLT<SparseMat> solver(A);
    if (solver.info() != Eigen::Success)
      throw SolverError("perturbation smoothing factorization failed");
    rho[i] = solver.solve(cache.vertex_mass.cwiseProduct(noise));
    // window to zero at the junction
    double win = 0.5 * frame.inradius[i];
    for (int v = 0; v < p.vertex_count(); ++v) {
      double d = frame.geo_dist[i][v];
      double t = win > 0 ? std::min(1.0, d / win) : 1.0;
      rho[i][v] *= t * t * t * (10.0 - 15.0 * t + 6.0 * t * t);
    }
  }
  double sup = rho.sup_norm();
  if (sup > 0) rho *= amplitude / sup;
  return rho;
}

}  // namespace triflow
