#include "triflow/cluster_mesh.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <map>
#include <numbers>
#include <set>
#include <sstream>

#include "triflow/graph_map.hpp"

namespace triflow {

namespace {

constexpr double kPi = std::numbers::pi;

// Cross-section of both generators in the (x, r) half plane. The junction
// chord runs from (0, -a) to (0, +a); patch 0 is the straight middle piece,
// patch 1 bulges right (x > 0), patch 2 bulges left. Conormal directions at
// the top junction are (90, 90 + theta3, 90 - theta2) degrees, which admits
// the gamma-weighted force balance for any Young triple; the normal fields
// are the +90 degree rotations of the conormals (patch 0 towards -x, patch 1
// towards its centre, patch 2 away from its centre), the orientation that
// makes the junction coupling mu = T rho exactly concurrency-preserving.
struct CrossSection {
  double a = 1.0;
  Vec3 theta;
  double cx1, r1;  // right arc (patch 1): centre -a*cot(theta3), R = a/sin(theta3)
  double cx2, r2;  // left arc (patch 2): centre +a*cot(theta2), R = a/sin(theta2)

  explicit CrossSection(const Vec3& th, double half_gap = 1.0) : a(half_gap), theta(th) {
    cx1 = -a * std::cos(th[2]) / std::sin(th[2]);
    r1 = a / std::sin(th[2]);
    cx2 = a * std::cos(th[1]) / std::sin(th[1]);
    r2 = a / std::sin(th[1]);
  }
};

int ring_count(int azimuth, double arc_extent, double rim_radius) {
  // make ring spacing comparable to the rim spacing 2*pi*rim/azimuth
  double spacing = 2.0 * kPi * rim_radius / azimuth;
  return std::max(3, static_cast<int>(std::lround(arc_extent / spacing)));
}

// Triangulates the annulus between two concentric rings of azimuths
// (monotone, wrap-around) by a two-pointer sweep. Triangles are emitted with
// the (inner, outer) rings counter-clockwise in the parameter plane.
void stitch_rings(const std::vector<int>& inner_ids, const std::vector<double>& inner_angles,
                  const std::vector<int>& outer_ids, const std::vector<double>& outer_angles,
                  std::vector<Eigen::RowVector3i>& tris) {
  const int ni = static_cast<int>(inner_ids.size());
  const int no = static_cast<int>(outer_ids.size());
  int ia = 0, ib = 0;
  auto angle = [](const std::vector<double>& a, int k) {
    int n = static_cast<int>(a.size());
    return a[k % n] + 2.0 * kPi * (k / n);
  };
  while (ia < ni || ib < no) {
    double next_inner = ia < ni ? angle(inner_angles, ia + 1) : 1e300;
    double next_outer = ib < no ? angle(outer_angles, ib + 1) : 1e300;
    if (next_outer <= next_inner) {
      tris.push_back({outer_ids[ib % no], outer_ids[(ib + 1) % no], inner_ids[ia % ni]});
      ++ib;
    } else {
      tris.push_back({inner_ids[(ia + 1) % ni], inner_ids[ia % ni], outer_ids[ib % no]});
      ++ia;
    }
  }
}

// Ring sizes following the ring circumference; the outermost ring is J.
std::vector<int> ring_sizes(int K, int J, const std::vector<double>& radii) {
  std::vector<int> n(K + 1, 0);
  for (int k = 1; k <= K; ++k)
    n[k] = std::max(6, static_cast<int>(std::lround(J * radii[k] / radii[K])));
  n[K] = J;
  return n;
}

// Generic polar patch: a pole vertex plus K rings with given 3d ring centres
// and radii; `flip` reverses the triangle winding.
Patch polar_patch(const Vec3& pole, const std::vector<Vec3>& centers,
                  const std::vector<double>& radii, const std::vector<int>& sizes, bool flip) {
  const int K = static_cast<int>(radii.size()) - 1;  // entry 0 unused
  std::vector<Vec3> verts = {pole};
  std::vector<std::vector<int>> ring_ids(K + 1);
  std::vector<std::vector<double>> ring_angles(K + 1);
  for (int k = 1; k <= K; ++k) {
    for (int j = 0; j < sizes[k]; ++j) {
      double phi = 2.0 * kPi * j / sizes[k];
      ring_ids[k].push_back(static_cast<int>(verts.size()));
      ring_angles[k].push_back(phi);
      verts.push_back(centers[k] + radii[k] * Vec3(0, std::cos(phi), std::sin(phi)));
    }
  }
  std::vector<Eigen::RowVector3i> tris;
  for (int j = 0; j < sizes[1]; ++j)
    tris.push_back({0, ring_ids[1][j], ring_ids[1][(j + 1) % sizes[1]]});
  for (int k = 1; k < K; ++k)
    stitch_rings(ring_ids[k], ring_angles[k], ring_ids[k + 1], ring_angles[k + 1], tris);
  Patch p;
  p.positions.resize(static_cast<int>(verts.size()), 3);
  for (size_t v = 0; v < verts.size(); ++v) p.positions.row(static_cast<int>(v)) = verts[v].transpose();
  p.elements.resize(static_cast<int>(tris.size()), 3);
  for (size_t t = 0; t < tris.size(); ++t) {
    if (flip)
      p.elements.row(static_cast<int>(t)) << tris[t][0], tris[t][2], tris[t][1];
    else
      p.elements.row(static_cast<int>(t)) = tris[t];
  }
  p.boundary_vertices = ring_ids[K];
  return p;
}

}  // namespace

double theta_arc_radius(double half_gap, double psi) { return half_gap / std::sin(psi); }

std::string ValidationReport::summary() const {
  if (issues.empty()) return "ok";
  std::ostringstream os;
  os << issues.size() << " issue(s):\n";
  for (const auto& v : issues) {
    os << "  [" << v.code << "] patch=" << v.patch << " index=" << v.index << " " << v.message
       << "\n";
  }
  return os.str();
}

static ClusterMesh make_theta_network(const Vec3& gamma, int n) {
  if (n < 3) throw ValidationError("theta-network: resolution below 3 elements per patch");
  Vec3 theta = young_angles(gamma);
  CrossSection cs(theta);
  const double a = cs.a;

  ClusterMesh mesh;
  mesh.dim = 1;

  auto make_curve = [&](int patch) {
    Patch p;
    p.positions.resize(n + 1, 2);
    p.elements.resize(n, 2);
    for (int k = 0; k <= n; ++k) {
      double s = static_cast<double>(k) / n;
      Vec2 x;
      if (patch == 0) {
        x = Vec2(0.0, -a + 2.0 * a * s);  // bottom to top
      } else if (patch == 1) {
        // right arc, counter-clockwise from the bottom junction (phi=-theta3)
        // through the right bulge; normal field points to the centre
        double phi = -theta[2] + 2.0 * theta[2] * s;
        x = Vec2(cs.cx1 + cs.r1 * std::cos(phi), cs.r1 * std::sin(phi));
      } else {
        // left arc, clockwise from phi = pi + theta2 through the left bulge;
        // normal field points away from the centre
        double phi = (kPi + theta[1]) - 2.0 * theta[1] * s;
        x = Vec2(cs.cx2 + cs.r2 * std::cos(phi), cs.r2 * std::sin(phi));
      }
      p.positions.row(k) = x.transpose();
    }
    for (int k = 0; k < n; ++k) p.elements.row(k) << k, k + 1;
    // exact junction coordinates
    p.positions.row(0) = Vec2(0.0, -a).transpose();
    p.positions.row(n) = Vec2(0.0, a).transpose();
    p.boundary_vertices = {0, n};
    return p;
  };

  mesh.patches[0] = make_curve(0);
  mesh.patches[1] = make_curve(1);
  mesh.patches[2] = make_curve(2);

  JunctionNode top{{n, n, n}, 0.0};
  JunctionNode bottom{{0, 0, 0}, 1.0};
  mesh.junction.nodes = {top, bottom};
  mesh.junction.closed = false;
  return mesh;
}

static ClusterMesh make_double_bubble(const Vec3& gamma, int azimuth) {
  if (azimuth < 12) throw ValidationError("standard-double-bubble: resolution below 12");
  Vec3 theta = young_angles(gamma);
  CrossSection cs(theta);
  const double a = cs.a;

  ClusterMesh mesh;
  mesh.dim = 2;
  const int J = azimuth;

  // Patch 0: flat disk at x = 0, normal -x.
  {
    int K = std::max(3, static_cast<int>(std::lround(static_cast<double>(J) / (2.0 * kPi))) + 1);
    std::vector<Vec3> centers(K + 1, Vec3::Zero());
    std::vector<double> radii(K + 1, 0.0);
    for (int k = 1; k <= K; ++k) radii[k] = a * static_cast<double>(k) / K;
    // param-plane ccw gives +x normals; flip for -x
    mesh.patches[0] = polar_patch(Vec3(0, 0, 0), centers, radii, ring_sizes(K, J, radii), true);
  }

  // Patches 1, 2: spherical caps of revolution of the cross-section arcs.
  // Patch 1 (right volume, pole +x) carries its normal towards the centre,
  // patch 2 (left volume, pole -x) away from it.
  auto make_cap = [&](double cx, double R, double extent, double pole_sign) {
    int K = ring_count(J, R * extent, a);
    std::vector<Vec3> centers(K + 1);
    std::vector<double> radii(K + 1, 0.0);
    for (int k = 1; k <= K; ++k) {
      double psi = extent * static_cast<double>(k) / K;
      centers[k] = Vec3(cx + pole_sign * R * std::cos(psi), 0, 0);
      radii[k] = R * std::sin(psi);
    }
    // snap the rim onto the exact junction circle
    centers[K] = Vec3::Zero();
    radii[K] = a;
    Vec3 pole(cx + pole_sign * R, 0, 0);
    // the (ring, azimuth) orientation gives outward normals for a +x pole and
    // inward for -x; both caps need the reverse
    return polar_patch(pole, centers, radii, ring_sizes(K, J, radii), true);
  };

  mesh.patches[1] = make_cap(cs.cx1, cs.r1, theta[2], +1.0);
  mesh.patches[2] = make_cap(cs.cx2, cs.r2, theta[1], -1.0);

  mesh.junction.nodes.resize(J);
  for (int j = 0; j < J; ++j) {
    JunctionNode node;
    node.arc_coord = 2.0 * kPi * j / J;
    node.vertex = {mesh.patches[0].boundary_vertices[j], mesh.patches[1].boundary_vertices[j],
                   mesh.patches[2].boundary_vertices[j]};
    mesh.junction.nodes[j] = node;
  }
  mesh.junction.closed = true;
  return mesh;
}

ClusterMesh build_reference_cluster(const ClusterSpec& spec) {
  if ((spec.gamma.array() <= 0).any())
    throw ValidationError("build_reference_cluster: non-positive surface tension");
  if (spec.generator == "theta-network") return make_theta_network(spec.gamma, spec.resolution);
  if (spec.generator == "standard-double-bubble")
    return make_double_bubble(spec.gamma, spec.resolution);
  throw ValidationError("build_reference_cluster: unknown generator '" + spec.generator + "'");
}

namespace {

double element_measure(const Patch& p, int dim, int e) {
  if (dim == 1) {
    return (p.positions.row(p.elements(e, 1)) - p.positions.row(p.elements(e, 0))).norm();
  }
  Vec3 a = p.positions.row(p.elements(e, 0));
  Vec3 b = p.positions.row(p.elements(e, 1));
  Vec3 c = p.positions.row(p.elements(e, 2));
  return 0.5 * (b - a).cross(c - a).norm();
}

}  // namespace

ValidationReport validate_mesh(const ClusterMesh& mesh) {
  ValidationReport rep;
  auto flag = [&](const std::string& code, int patch, int idx, const std::string& msg) {
    rep.issues.push_back({code, patch, idx, msg});
  };

  // junction coincidence and indexing
  std::array<std::set<int>, 3> junction_vertices;
  for (int n = 0; n < mesh.junction.node_count(); ++n) {
    const auto& node = mesh.junction.nodes[n];
    for (int i = 0; i < 3; ++i) {
      if (node.vertex[i] < 0 || node.vertex[i] >= mesh.patches[i].vertex_count()) {
        flag("junction-index", i, n, "junction vertex id out of range");
        continue;
      }
      if (!junction_vertices[i].insert(node.vertex[i]).second)
        flag("junction-duplicate", i, n, "vertex referenced by two junction nodes");
    }
    for (int i = 1; i < 3; ++i) {
      double d = (mesh.patches[i].positions.row(node.vertex[i]) -
                  mesh.patches[0].positions.row(node.vertex[0]))
                     .norm();
      if (d > 1e-12)
        flag("junction-coincidence", i, n,
             "identified vertices differ by " + std::to_string(d));
    }
  }
  if (mesh.junction.node_count() > 1) {
    for (int n = 1; n < mesh.junction.node_count(); ++n) {
      if (!(mesh.junction.nodes[n].arc_coord > mesh.junction.nodes[n - 1].arc_coord))
        flag("junction-order", -1, n, "arc coordinates not strictly increasing");
    }
  }

  for (int i = 0; i < 3; ++i) {
    const Patch& p = mesh.patches[i];
    // boundary vertices <-> junction nodes
    for (int bv : p.boundary_vertices) {
      if (!junction_vertices[i].count(bv))
        flag("boundary-not-junction", i, bv, "patch boundary vertex not identified with a node");
    }
    std::set<int> bset(p.boundary_vertices.begin(), p.boundary_vertices.end());
    for (int jv : junction_vertices[i]) {
      if (!bset.count(jv))
        flag("junction-not-boundary", i, jv, "junction vertex not listed as boundary vertex");
    }

    // degenerate elements
    for (int e = 0; e < p.element_count(); ++e) {
      if (element_measure(p, mesh.dim, e) < mesh.element_floor)
        flag("degenerate-element", i, e, "element measure below floor");
    }

    // orientation consistency
    if (mesh.dim == 1) {
      std::map<int, int> out_degree, in_degree;
      for (int e = 0; e < p.element_count(); ++e) {
        out_degree[p.elements(e, 0)]++;
        in_degree[p.elements(e, 1)]++;
      }
      for (int v = 0; v < p.vertex_count(); ++v) {
        int total = out_degree[v] + in_degree[v];
        bool boundary = bset.count(v) > 0;
        if (boundary && total != 1)
          flag("orientation", i, v, "boundary vertex not an endpoint of exactly one segment");
        if (!boundary && !(out_degree[v] == 1 && in_degree[v] == 1))
          flag("orientation", i, v, "interior vertex is not flow-through; winding inconsistent");
      }
    } else {
      std::map<std::pair<int, int>, int> halfedges;
      for (int e = 0; e < p.element_count(); ++e) {
        for (int k = 0; k < 3; ++k) {
          int u = p.elements(e, k), v = p.elements(e, (k + 1) % 3);
          halfedges[{u, v}]++;
        }
      }
      for (const auto& [he, cnt] : halfedges) {
        if (cnt > 1) {
          flag("orientation", i, he.first, "half-edge used twice; inconsistent winding");
          break;
        }
      }
      for (const auto& [he, cnt] : halfedges) {
        bool paired = halfedges.count({he.second, he.first}) > 0;
        bool boundary_edge = bset.count(he.first) && bset.count(he.second);
        if (!paired && !boundary_edge) {
          flag("orientation", i, he.first, "unpaired interior half-edge");
          break;
        }
      }
    }
  }
  return rep;
}

namespace {

// Tangent at p0 of the circle through (p0, p1, p2); exact on circular arcs,
// second order otherwise. Returns the direction pointing away from p1.
template <int AD>
Eigen::Matrix<double, AD, 1> circumfit_tangent(const Eigen::Matrix<double, AD, 1>& p0,
                                               const Eigen::Matrix<double, AD, 1>& p1,
                                               const Eigen::Matrix<double, AD, 1>& p2) {
  using V = Eigen::Matrix<double, AD, 1>;
  V a = p1 - p0, b = p2 - p0;
  V e1 = a.normalized();
  V b_perp = b - b.dot(e1) * e1;
  double scale = a.norm();
  if (b_perp.norm() < 1e-12 * scale) return -e1;  // collinear: straight chain
  V e2 = b_perp.normalized();
  double ax = scale;
  double bx = b.dot(e1), by = b.dot(e2);
  // circumcentre (u, v) in the (e1, e2) frame with p0 at the origin
  double u = 0.5 * ax;
  double v = (bx * bx + by * by - 2.0 * u * bx) / (2.0 * by);
  Vec2 t2(-v, u);
  t2.normalize();
  if (t2.x() > 0) t2 = -t2;  // point away from p1
  return t2.x() * e1 + t2.y() * e2;
}

}  // namespace

std::array<Vec3, 3> junction_conormals(const ClusterMesh& mesh, int node) {
  if (node < 0 || node >= mesh.junction.node_count())
    throw ValidationError("junction_conormals: invalid node id");
  std::array<Vec3, 3> out;
  const auto& jn = mesh.junction.nodes[node];
  for (int i = 0; i < 3; ++i) {
    const Patch& p = mesh.patches[i];
    int v0 = jn.vertex[i];
    if (mesh.dim == 1) {
      // walk the chain two steps inward
      int v1 = -1;
      for (int e = 0; e < p.element_count(); ++e) {
        if (p.elements(e, 0) == v0) v1 = p.elements(e, 1);
        if (p.elements(e, 1) == v0) v1 = p.elements(e, 0);
      }
      if (v1 < 0) throw SingularGeometryError("junction vertex has no adjacent segment");
      int v2 = -1;
      for (int e = 0; e < p.element_count(); ++e) {
        int a = p.elements(e, 0), b = p.elements(e, 1);
        if (a == v1 && b != v0) v2 = b;
        if (b == v1 && a != v0) v2 = a;
      }
      Vec2 t;
      if (v2 < 0) {
        t = (p.positions.row(v0) - p.positions.row(v1)).normalized().transpose();
      } else {
        t = circumfit_tangent<2>(p.positions.row(v0).transpose(), p.positions.row(v1).transpose(),
                                 p.positions.row(v2).transpose());
      }
      out[i] = Vec3(t.x(), t.y(), 0.0);
    } else {
      // pick the most inward neighbour chain (meridian-like on ring meshes)
      Vec3 x0 = p.positions.row(v0);
      std::set<int> junction_ids;
      for (const auto& nn : mesh.junction.nodes) junction_ids.insert(nn.vertex[i]);
      auto inward_neighbor = [&](int v, const Vec3& away_from) {
        int best = -1;
        double best_d = -2.0;
        Vec3 xv = p.positions.row(v);
        for (int e = 0; e < p.element_count(); ++e) {
          for (int k = 0; k < 3; ++k) {
            if (p.elements(e, k) != v) continue;
            for (int m = 0; m < 3; ++m) {
              int w = p.elements(e, m);
              if (w == v || junction_ids.count(w)) continue;
              Vec3 dir = (Vec3(p.positions.row(w)) - xv).normalized();
              double d = dir.dot(away_from);
              if (d > best_d) {
                best_d = d;
                best = w;
              }
            }
          }
        }
        return best;
      };
      // rough inward direction: average of adjacent element centroids
      Vec3 rough = Vec3::Zero();
      int cnt = 0;
      for (int e = 0; e < p.element_count(); ++e) {
        for (int k = 0; k < 3; ++k) {
          if (p.elements(e, k) == v0) {
            Vec3 c = (p.positions.row(p.elements(e, 0)) + p.positions.row(p.elements(e, 1)) +
                      p.positions.row(p.elements(e, 2))) /
                     3.0;
            rough += c - x0;
            ++cnt;
          }
        }
      }
      if (cnt == 0) throw SingularGeometryError("junction vertex has no adjacent triangle");
      rough.normalize();
      int v1 = inward_neighbor(v0, rough);
      if (v1 < 0) throw SingularGeometryError("no inward neighbour at junction vertex");
      Vec3 x1 = p.positions.row(v1);
      int v2 = inward_neighbor(v1, (x1 - x0).normalized());
      Vec3 t;
      if (v2 < 0) {
        t = (x0 - x1).normalized();
      } else {
        t = circumfit_tangent<3>(x0, x1, Vec3(p.positions.row(v2)));
      }
      out[i] = t;
    }
    out[i].normalize();
  }
  return out;
}

ClusterMesh refine_cluster(const ClusterMesh& mesh) {
  ClusterMesh out;
  out.dim = mesh.dim;
  out.junction.closed = mesh.junction.closed;
  out.element_floor = mesh.element_floor;
  out.orientation = mesh.orientation;

  std::array<std::map<std::pair<int, int>, int>, 3> edge_mid;

  for (int i = 0; i < 3; ++i) {
    const Patch& p = mesh.patches[i];
    Patch q;
    int nv = p.vertex_count();
    std::vector<Eigen::RowVectorXd> verts;
    verts.reserve(nv * 2);
    for (int v = 0; v < nv; ++v) verts.push_back(p.positions.row(v));
    auto midpoint = [&](int a, int b) {
      auto key = std::minmax(a, b);
      auto it = edge_mid[i].find(key);
      if (it != edge_mid[i].end()) return it->second;
      Eigen::RowVectorXd m = 0.5 * (p.positions.row(a) + p.positions.row(b));
      verts.push_back(m);
      int id = static_cast<int>(verts.size()) - 1;
      edge_mid[i][key] = id;
      return id;
    };

    std::vector<Eigen::RowVectorXi> elems;
    if (mesh.dim == 1) {
      for (int e = 0; e < p.element_count(); ++e) {
        int a = p.elements(e, 0), b = p.elements(e, 1);
        int m = midpoint(a, b);
        elems.push_back(Eigen::RowVector2i(a, m));
        elems.push_back(Eigen::RowVector2i(m, b));
      }
    } else {
      for (int e = 0; e < p.element_count(); ++e) {
        int a = p.elements(e, 0), b = p.elements(e, 1), c = p.elements(e, 2);
        int ab = midpoint(a, b), bc = midpoint(b, c), ca = midpoint(c, a);
        elems.push_back(Eigen::RowVector3i(a, ab, ca));
        elems.push_back(Eigen::RowVector3i(ab, b, bc));
        elems.push_back(Eigen::RowVector3i(ca, bc, c));
        elems.push_back(Eigen::RowVector3i(ab, bc, ca));
      }
    }
    q.positions.resize(static_cast<int>(verts.size()), mesh.ambient_dim());
    for (size_t v = 0; v < verts.size(); ++v) q.positions.row(static_cast<int>(v)) = verts[v];
    q.elements.resize(static_cast<int>(elems.size()), mesh.dim + 1);
    for (size_t e = 0; e < elems.size(); ++e) q.elements.row(static_cast<int>(e)) = elems[e];
    out.patches[i] = std::move(q);
  }

  // old junction nodes survive; for dim 2 every junction edge contributes a
  // new node at its midpoint
  out.junction.nodes = mesh.junction.nodes;
  if (mesh.dim == 2) {
    std::map<int, int> node_of_vertex;  // patch-0 vertex -> node index
    for (int n = 0; n < mesh.junction.node_count(); ++n)
      node_of_vertex[mesh.junction.nodes[n].vertex[0]] = n;
    int nn = mesh.junction.node_count();
    for (int n = 0; n < nn; ++n) {
      int m = (n + 1) % nn;
      if (!mesh.junction.closed && m == 0) break;
      JunctionNode mid;
      for (int i = 0; i < 3; ++i) {
        auto key = std::minmax(mesh.junction.nodes[n].vertex[i], mesh.junction.nodes[m].vertex[i]);
        auto it = edge_mid[i].find(key);
        if (it == edge_mid[i].end())
          throw ValidationError("refine_cluster: junction edge missing from patch");
        mid.vertex[i] = it->second;
      }
      double c0 = mesh.junction.nodes[n].arc_coord;
      double c1 = mesh.junction.nodes[m].arc_coord;
      if (m == 0) c1 = c0 + (c0 - mesh.junction.nodes[n - 1].arc_coord);  // wrap
      mid.arc_coord = 0.5 * (c0 + c1);
      out.junction.nodes.push_back(mid);
    }
    std::sort(out.junction.nodes.begin(), out.junction.nodes.end(),
              [](const JunctionNode& a, const JunctionNode& b) { return a.arc_coord < b.arc_coord; });
  }
  for (int i = 0; i < 3; ++i) {
    out.patches[i].boundary_vertices.clear();
    for (const auto& n : out.junction.nodes) out.patches[i].boundary_vertices.push_back(n.vertex[i]);
  }
  return out;
}

// ---------------------------------------------------------------------------
// OFF + junction table I/O

static void write_off(const Patch& p, int ambient, const std::string& path) {
  std::ofstream os(path);
  if (!os) throw UsageError("cannot write " + path);
  os << "OFF\n" << p.vertex_count() << " " << p.element_count() << " 0\n";
  char buf[128];
  for (int v = 0; v < p.vertex_count(); ++v) {
    double x = p.positions(v, 0), y = p.positions(v, 1);
    double z = ambient == 3 ? p.positions(v, 2) : 0.0;
    std::snprintf(buf, sizeof buf, "%.17g %.17g %.17g\n", x, y, z);
    os << buf;
  }
  for (int e = 0; e < p.element_count(); ++e) {
    os << p.elements.cols();
    for (int k = 0; k < p.elements.cols(); ++k) os << " " << p.elements(e, k);
    os << "\n";
  }
}

static Patch read_off(const std::string& path, int& node_size) {
  std::ifstream is(path);
  if (!is) throw UsageError("cannot read " + path);
  std::string magic;
  is >> magic;
  if (magic != "OFF") throw ValidationError(path + ": not an OFF file");
  int nv, ne, nedge;
  is >> nv >> ne >> nedge;
  MatX pos3(nv, 3);
  for (int v = 0; v < nv; ++v) is >> pos3(v, 0) >> pos3(v, 1) >> pos3(v, 2);
  node_size = 0;
  std::vector<std::vector<int>> elems(ne);
  for (int e = 0; e < ne; ++e) {
    int k;
    is >> k;
    if (node_size == 0) node_size = k;
    if (k != node_size) throw ValidationError(path + ": mixed element sizes");
    elems[e].resize(k);
    for (int j = 0; j < k; ++j) is >> elems[e][j];
  }
  if (!is) throw ValidationError(path + ": truncated data");
  Patch p;
  if (node_size == 2) {
    if (pos3.col(2).cwiseAbs().maxCoeff() > 1e-14)
      throw ValidationError(path + ": segment patch with nonzero z coordinates");
    p.positions = pos3.leftCols(2);
  } else if (node_size == 3) {
    p.positions = pos3;
  } else {
    throw ValidationError(path + ": only segment and triangle elements supported");
  }
  p.elements.resize(ne, node_size);
  for (int e = 0; e < ne; ++e)
    for (int j = 0; j < node_size; ++j) p.elements(e, j) = elems[e][j];
  return p;
}

void save_cluster(const ClusterMesh& mesh, const std::string& stem) {
  for (int i = 0; i < 3; ++i)
    write_off(mesh.patches[i], mesh.ambient_dim(), stem + ".patch" + std::to_string(i) + ".off");
  std::ofstream os(stem + ".junction.txt");
  if (!os) throw UsageError("cannot write junction table");
  os << "# node patch0_vid patch1_vid patch2_vid\n";
  for (int n = 0; n < mesh.junction.node_count(); ++n) {
    const auto& jn = mesh.junction.nodes[n];
    os << n << " " << jn.vertex[0] << " " << jn.vertex[1] << " " << jn.vertex[2] << "\n";
  }
}

ClusterMesh load_cluster(const std::string& stem) {
  ClusterMesh mesh;
  int node_size = 0;
  for (int i = 0; i < 3; ++i) {
    int k = 0;
    mesh.patches[i] = read_off(stem + ".patch" + std::to_string(i) + ".off", k);
    if (i == 0)
      node_size = k;
    else if (k != node_size)
      throw ValidationError("patches mix segment and triangle elements");
  }
  mesh.dim = node_size - 1;
  std::ifstream is(stem + ".junction.txt");
  if (!is) throw UsageError("cannot read " + stem + ".junction.txt");
  std::string line;
  while (std::getline(is, line)) {
    if (line.empty() || line[0] == '#') continue;
    std::istringstream ls(line);
    JunctionNode jn;
    int id;
    if (!(ls >> id >> jn.vertex[0] >> jn.vertex[1] >> jn.vertex[2]))
      throw ValidationError("malformed junction table line: " + line);
    jn.arc_coord = static_cast<double>(id);
    mesh.junction.nodes.push_back(jn);
  }
  mesh.junction.closed = mesh.dim == 2;
  for (int i = 0; i < 3; ++i) {
    mesh.patches[i].boundary_vertices.clear();
    for (const auto& n : mesh.junction.nodes)
      mesh.patches[i].boundary_vertices.push_back(n.vertex[i]);
  }
  return mesh;
}

}  // namespace triflow
