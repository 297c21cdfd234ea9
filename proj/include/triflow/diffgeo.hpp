#pragma once

#include <vector>

#include "triflow/cluster_mesh.hpp"
#include "triflow/types.hpp"

namespace triflow {

// Per-patch discrete differential geometry. All curvature quantities follow
// the convention H = (Laplace_Gamma x) . N, so the unit circle with inward
// normal has H = +1 and the unit sphere H = +2.
struct GeometryCache {
  int dim = 1;
  MatX positions;          // copy of the positions the cache was built from
  MatXi elements;
  Vec element_measure;     // length / area per element
  MatX element_normal;     // E x (d+1), unit facet normal (winding induced)
  std::vector<Eigen::Matrix2d> metric;      // per element (dim 2), g_ij
  std::vector<Eigen::Matrix2d> metric_inv;  // per element (dim 2)
  Vec vertex_mass;         // lumped
  MatX vertex_normal;      // V x (d+1), unit
  Vec mean_curvature;      // H per vertex
  Vec second_form_sq;      // |II|^2 per vertex
  Vec gauss_curvature;     // dim 2 only (angle defect / vertex mass)
  SparseMat stiffness;     // int grad phi_i . grad phi_j
  std::vector<std::vector<int>> vertex_elements;  // adjacency

  int vertex_count() const { return static_cast<int>(positions.rows()); }
  int element_count() const { return static_cast<int>(elements.rows()); }
};

// `floor` guards the metric inversion; elements below it raise
// SingularGeometryError naming the element.
GeometryCache build_geometry(const Patch& patch, const MatX& positions, int dim,
                             double floor = kElementMeasureFloor);

// Discrete weak Laplacian lifted to vertices: -M^{-1} K f.
Vec laplace_beltrami(const GeometryCache& cache, const Vec& field);

// Per-vertex surface gradient (averaged element gradients).
MatX surface_gradient(const GeometryCache& cache, const Vec& field);

// Conormal derivative grad_Gamma f . nu at junction nodes, one per node.
// Uses a one-sided second order stencil along the inward chain for dim 1 and
// the boundary element patch gradient for dim 2.
Vec surface_gradient_normal_trace(const GeometryCache& cache, const Vec& field,
                                  const std::vector<int>& junction_vertices,
                                  const MatX& conormals);

// Total measure of the patch.
double patch_area(const GeometryCache& cache);

}  // namespace triflow
