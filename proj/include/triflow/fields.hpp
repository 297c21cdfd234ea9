#pragma once

#include "triflow/cluster_mesh.hpp"
#include "triflow/types.hpp"

namespace triflow {

// One scalar unknown per vertex on each of the three patches, with access to
// the junction trace (the per-node triple of identified vertex values).
struct TripleField {
  std::array<Vec, 3> values;

  TripleField() = default;
  explicit TripleField(const ClusterMesh& mesh) {
    for (int i = 0; i < 3; ++i) values[i] = Vec::Zero(mesh.patches[i].vertex_count());
  }

  Vec& operator[](int i) { return values[i]; }
  const Vec& operator[](int i) const { return values[i]; }

  Vec3 trace(const ClusterMesh& mesh, int node) const {
    const auto& jn = mesh.junction.nodes[node];
    return Vec3(values[0][jn.vertex[0]], values[1][jn.vertex[1]], values[2][jn.vertex[2]]);
  }
  void set_trace(const ClusterMesh& mesh, int node, const Vec3& v) {
    const auto& jn = mesh.junction.nodes[node];
    for (int i = 0; i < 3; ++i) values[i][jn.vertex[i]] = v[i];
  }

  double sup_norm() const {
    double m = 0;
    for (const auto& v : values)
      if (v.size()) m = std::max(m, v.cwiseAbs().maxCoeff());
    return m;
  }

  TripleField& operator+=(const TripleField& o) {
    for (int i = 0; i < 3; ++i) values[i] += o.values[i];
    return *this;
  }
  TripleField& operator*=(double s) {
    for (int i = 0; i < 3; ++i) values[i] *= s;
    return *this;
  }
};

}  // namespace triflow
