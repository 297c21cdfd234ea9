#pragma once

#include <optional>
#include <string>
#include <vector>

#include "triflow/types.hpp"

namespace triflow {

// One patch of a cluster: a segment chain (dim 1) or triangle mesh (dim 2)
// embedded in R^{dim+1}. Element winding fixes the normal field.
struct Patch {
  MatX positions;   // V x (dim+1)
  MatXi elements;   // E x (dim+1)
  std::vector<int> boundary_vertices;

  int vertex_count() const { return static_cast<int>(positions.rows()); }
  int element_count() const { return static_cast<int>(elements.rows()); }
};

struct JunctionNode {
  std::array<int, 3> vertex;  // per-patch vertex id identified with this node
  double arc_coord = 0.0;     // parametric coordinate along Sigma
};

struct JunctionTrace {
  std::vector<JunctionNode> nodes;
  bool closed = false;  // closed polyline for dim 2 clusters

  int node_count() const { return static_cast<int>(nodes.size()); }
};

struct ClusterMesh {
  int dim = 1;  // topological dimension of the patches
  std::array<Patch, 3> patches;
  JunctionTrace junction;
  std::array<int, 3> orientation = {1, 1, 1};
  double element_floor = kElementMeasureFloor;

  int ambient_dim() const { return dim + 1; }
  int total_vertices() const {
    return patches[0].vertex_count() + patches[1].vertex_count() +
           patches[2].vertex_count();
  }
};

struct ClusterSpec {
  std::string generator;  // theta-network | standard-double-bubble
  Vec3 gamma = Vec3::Ones();
  int resolution = 64;
};

struct ValidationIssue {
  std::string code;
  int patch = -1;
  int index = -1;  // element, vertex or junction node index
  std::string message;
};

struct ValidationReport {
  std::vector<ValidationIssue> issues;
  bool ok() const { return issues.empty(); }
  std::string summary() const;
};

ClusterMesh build_reference_cluster(const ClusterSpec& spec);

ValidationReport validate_mesh(const ClusterMesh& mesh);

// Discrete outer conormals (unit, tangent to the patch, pointing towards the
// junction) of the three patches at one junction node.
std::array<Vec3, 3> junction_conormals(const ClusterMesh& mesh, int node);

// Uniform refinement: every segment split in two / every triangle into four.
// Junction identification is preserved.
ClusterMesh refine_cluster(const ClusterMesh& mesh);

// OFF + plain text junction table I/O. `load_cluster` expects
// <stem>.patch{0,1,2}.off and <stem>.junction.txt.
ClusterMesh load_cluster(const std::string& stem);
void save_cluster(const ClusterMesh& mesh, const std::string& stem);

// Analytic helpers shared by generators and tests.
double theta_arc_radius(double half_gap, double psi);

}  // namespace triflow
