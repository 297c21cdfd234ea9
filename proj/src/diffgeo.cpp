#include "triflow/diffgeo.hpp"

#include <cmath>
#include <numbers>

#include "triflow/threading.hpp"

namespace triflow {

namespace {

struct ElementData {
  double measure;
  Eigen::RowVector3d normal;
  Eigen::Matrix2d g, g_inv;
  // gradients of the nodal hat functions, ambient coordinates
  Eigen::Matrix<double, 3, 3> grad;  // node x coordinate (row per node)
};

ElementData segment_data(const MatX& pos, const MatXi& elems, int e) {
  ElementData d{};
  Vec2 a = pos.row(elems(e, 0)), b = pos.row(elems(e, 1));
  Vec2 t = b - a;
  d.measure = t.norm();
  t /= d.measure;
  d.normal = Eigen::RowVector3d(-t.y(), t.x(), 0.0);
  d.grad.setZero();
  d.grad.row(0).head<2>() = (-t / d.measure).transpose();
  d.grad.row(1).head<2>() = (t / d.measure).transpose();
  d.g.setZero();
  d.g(0, 0) = d.measure * d.measure;
  d.g_inv.setZero();
  d.g_inv(0, 0) = 1.0 / d.g(0, 0);
  return d;
}

ElementData triangle_data(const MatX& pos, const MatXi& elems, int e) {
  ElementData d{};
  Vec3 a = pos.row(elems(e, 0)), b = pos.row(elems(e, 1)), c = pos.row(elems(e, 2));
  Vec3 e1 = b - a, e2 = c - a;
  Vec3 n = e1.cross(e2);
  double n2 = n.norm();
  d.measure = 0.5 * n2;
  d.normal = (n / n2).transpose();
  d.g << e1.dot(e1), e1.dot(e2), e1.dot(e2), e2.dot(e2);
  double det = d.g(0, 0) * d.g(1, 1) - d.g(0, 1) * d.g(1, 0);
  d.g_inv << d.g(1, 1) / det, -d.g(0, 1) / det, -d.g(1, 0) / det, d.g(0, 0) / det;
  // grad phi_k: hat gradients from the inverse metric, tangential
  Eigen::Matrix<double, 3, 2> dphi;  // reference gradients
  dphi << -1, -1, 1, 0, 0, 1;
  Eigen::Matrix<double, 2, 3> tangents;
  tangents.row(0) = e1.transpose();
  tangents.row(1) = e2.transpose();
  for (int k = 0; k < 3; ++k) {
    Eigen::Vector2d coef = d.g_inv * dphi.row(k).transpose();
    d.grad.row(k) = (coef.transpose() * tangents);
  }
  return d;
}

}  // namespace

GeometryCache build_geometry(const Patch& patch, const MatX& positions, int dim, double floor) {
  GeometryCache c;
  c.dim = dim;
  c.positions = positions;
  c.elements = patch.elements;
  const int V = c.vertex_count();
  const int E = c.element_count();
  const int nodes = dim + 1;
  const int ad = dim + 1;

  std::vector<ElementData> ed(E);
  parallel_for(E, [&](int e) {
    ed[e] = dim == 1 ? segment_data(positions, c.elements, e)
                     : triangle_data(positions, c.elements, e);
  });
  for (int e = 0; e < E; ++e) {
    if (!(ed[e].measure >= floor))
      throw SingularGeometryError("degenerate element " + std::to_string(e) +
                                  " (measure below floor)");
  }

  c.element_measure.resize(E);
  c.element_normal.resize(E, ad);
  c.metric.resize(E);
  c.metric_inv.resize(E);
  c.vertex_mass = Vec::Zero(V);
  c.vertex_normal = MatX::Zero(V, ad);
  c.vertex_elements.assign(V, {});

  std::vector<Triplet> trips;
  trips.reserve(E * nodes * nodes);
  for (int e = 0; e < E; ++e) {
    c.element_measure[e] = ed[e].measure;
    c.element_normal.row(e) = ed[e].normal.head(ad);
    c.metric[e] = ed[e].g;
    c.metric_inv[e] = ed[e].g_inv;
    for (int k = 0; k < nodes; ++k) {
      int v = c.elements(e, k);
      c.vertex_elements[v].push_back(e);
      c.vertex_mass[v] += ed[e].measure / nodes;
      c.vertex_normal.row(v) += ed[e].measure * ed[e].normal.head(ad);
      for (int l = 0; l < nodes; ++l) {
        double kij = ed[e].measure * ed[e].grad.row(k).head(ad).dot(ed[e].grad.row(l).head(ad));
        trips.emplace_back(v, c.elements(e, l), kij);
      }
    }
  }
  c.stiffness.resize(V, V);
  c.stiffness.setFromTriplets(trips.begin(), trips.end());

  for (int v = 0; v < V; ++v) {
    double n = c.vertex_normal.row(v).norm();
    if (n < 1e-300) throw SingularGeometryError("vertex " + std::to_string(v) + " has no area");
    c.vertex_normal.row(v) /= n;
  }

  // H = (Laplace x) . N with Laplace x = -M^{-1} K x
  MatX lap(V, ad);
  for (int k = 0; k < ad; ++k)
    lap.col(k) = -(c.stiffness * positions.col(k)).cwiseQuotient(c.vertex_mass);
  c.mean_curvature.resize(V);
  for (int v = 0; v < V; ++v) c.mean_curvature[v] = lap.row(v).dot(c.vertex_normal.row(v));

  c.second_form_sq.resize(V);
  if (dim == 1) {
    c.second_form_sq = c.mean_curvature.cwiseProduct(c.mean_curvature);
  } else {
    // |II|^2 = H^2 - 2K with K from the angle defect
    c.gauss_curvature = Vec::Zero(V);
    Vec defect = Vec::Constant(V, 2.0 * std::numbers::pi);
    for (int e = 0; e < E; ++e) {
      for (int k = 0; k < 3; ++k) {
        Vec3 a = positions.row(c.elements(e, k));
        Vec3 b = positions.row(c.elements(e, (k + 1) % 3));
        Vec3 cc = positions.row(c.elements(e, (k + 2) % 3));
        Vec3 u = b - a, w = cc - a;
        double ang = std::atan2(u.cross(w).norm(), u.dot(w));
        defect[c.elements(e, k)] -= ang;
      }
    }
    for (int v = 0; v < V; ++v) {
      c.gauss_curvature[v] = defect[v] / c.vertex_mass[v];
      double s = c.mean_curvature[v] * c.mean_curvature[v] - 2.0 * c.gauss_curvature[v];
      c.second_form_sq[v] = std::max(0.0, s);
    }
  }
  return c;
}

Vec laplace_beltrami(const GeometryCache& cache, const Vec& field) {
  if (field.size() != cache.vertex_count())
    throw ValidationError("laplace_beltrami: field size mismatch");
  return -(cache.stiffness * field).cwiseQuotient(cache.vertex_mass);
}

MatX surface_gradient(const GeometryCache& cache, const Vec& field) {
  const int V = cache.vertex_count();
  const int ad = cache.dim + 1;
  const int nodes = cache.dim + 1;
  MatX out = MatX::Zero(V, ad);
  Vec wsum = Vec::Zero(V);
  for (int e = 0; e < cache.element_count(); ++e) {
    // recompute hat gradients from cached metric data
    Eigen::RowVector3d g = Eigen::RowVector3d::Zero();
    if (cache.dim == 1) {
      int a = cache.elements(e, 0), b = cache.elements(e, 1);
      Eigen::RowVectorXd t = cache.positions.row(b) - cache.positions.row(a);
      double L = cache.element_measure[e];
      g.head(ad) = (field[b] - field[a]) / (L * L) * t;
    } else {
      int a = cache.elements(e, 0), b = cache.elements(e, 1), cc = cache.elements(e, 2);
      Eigen::Vector2d df(field[b] - field[a], field[cc] - field[a]);
      Eigen::Vector2d coef = cache.metric_inv[e] * df;
      g.head(3) = coef.x() * (cache.positions.row(b) - cache.positions.row(a)) +
                  coef.y() * (cache.positions.row(cc) - cache.positions.row(a));
    }
    for (int k = 0; k < nodes; ++k) {
      int v = cache.elements(e, k);
      out.row(v) += cache.element_measure[e] * g.head(ad);
      wsum[v] += cache.element_measure[e];
    }
  }
  for (int v = 0; v < V; ++v) out.row(v) /= wsum[v];
  return out;
}

namespace {

// one-sided derivative at s=0 from values at 0, s1, s2 (Lagrange)
double endpoint_derivative(double f0, double f1, double f2, double s1, double s2) {
  return f0 * (-(s1 + s2) / (s1 * s2)) + f1 * (s2 / (s1 * (s2 - s1))) +
         f2 * (-s1 / (s2 * (s2 - s1)));
}

}  // namespace

Vec surface_gradient_normal_trace(const GeometryCache& cache, const Vec& field,
                                  const std::vector<int>& junction_vertices,
                                  const MatX& conormals) {
  const int J = static_cast<int>(junction_vertices.size());
  Vec out(J);
  if (cache.dim == 1) {
    for (int j = 0; j < J; ++j) {
      int v0 = junction_vertices[j];
      if (cache.vertex_elements[v0].empty() || cache.vertex_elements[v0].size() > 1)
        throw ValidationError("trace: node not on patch boundary");
      int e0 = cache.vertex_elements[v0][0];
      int v1 = cache.elements(e0, 0) == v0 ? cache.elements(e0, 1) : cache.elements(e0, 0);
      int v2 = -1;
      for (int e : cache.vertex_elements[v1]) {
        if (e == e0) continue;
        v2 = cache.elements(e, 0) == v1 ? cache.elements(e, 1) : cache.elements(e, 0);
      }
      double s1 = (cache.positions.row(v1) - cache.positions.row(v0)).norm();
      if (v2 < 0) {
        out[j] = -(field[v1] - field[v0]) / s1;  // conormal points outward
      } else {
        double s2 = s1 + (cache.positions.row(v2) - cache.positions.row(v1)).norm();
        // derivative along the inward arc, then flip to the outward conormal
        out[j] = -endpoint_derivative(field[v0], field[v1], field[v2], s1, s2);
      }
    }
  } else {
    MatX grad = surface_gradient(cache, field);
    for (int j = 0; j < J; ++j) {
      int v0 = junction_vertices[j];
      if (cache.vertex_elements[v0].empty())
        throw ValidationError("trace: node not on patch boundary");
      out[j] = grad.row(v0).dot(conormals.row(j));
    }
  }
  return out;
}

double patch_area(const GeometryCache& cache) { return cache.element_measure.sum(); }

}  // namespace triflow
