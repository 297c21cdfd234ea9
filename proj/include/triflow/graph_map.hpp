#pragma once

#include "triflow/diffgeo.hpp"
#include "triflow/fields.hpp"
#include "triflow/types.hpp"

namespace triflow {

struct PhysicsParams {
  Vec3 gamma = Vec3::Ones();
  Vec3 theta = Vec3::Zero();  // derived from gamma via Young's law
  double C_u = 0.0;
  double C_v = 0.0;
  double dt = 1e-4;
  double fp_tolerance = 1e-10;
  int fp_max_iters = 30;
  bool full_fixed_point = false;
  double eps_ref = 0.0;  // 0 = derive from the mesh (0.2 * min inradius)
  double w_tau = 0.0;    // 0 = derive from the mesh (4 boundary element lengths)

  void validate() const;
};

// Angles solving Young's law sin(theta^i)/gamma^i = const with sum 2*pi.
// Throws ValidationError for degenerate wetting (gamma violating the strict
// triangle condition).
Vec3 young_angles(const Vec3& gamma);

// The 3x3 tangential coupling matrix with rows
//   [0, c2/s1, -c3/s1; -c1/s2, 0, c3/s2; c1/s3, -c2/s3, 0].
Mat3 tangent_coupling_matrix(const Vec3& theta);

// Exactly Young-compatible orthonormal frames (conormal nu, normal N) per
// junction node and patch, fitted to the discrete geometry. apply_graph uses
// them at junction vertices so admissible data stays concurrent to machine
// precision.
struct JunctionFrame {
  std::array<Vec3, 3> nu;
  std::array<Vec3, 3> normal;
};

struct TangentialFrame {
  double w_tau = 0;
  std::array<MatX, 3> tau;          // per-vertex tangential field (weighted)
  std::array<Vec, 3> weight;        // cutoff in [0,1]
  std::array<Eigen::VectorXi, 3> nearest_node;  // pr_Sigma, -1 outside support
  std::array<Vec, 3> geo_dist;      // graph distance to the junction
  std::vector<JunctionFrame> frames;
  std::array<double, 3> inradius{};  // max graph distance to the junction

  double min_inradius() const { return std::min({inradius[0], inradius[1], inradius[2]}); }
};

// Quintic cutoff: 1 on [0, w/2], 0 beyond w, C^2 in between.
double cutoff_weight(double dist, double w);

TangentialFrame build_tangential_frame(const ClusterMesh& mesh,
                                       const std::array<GeometryCache, 3>& caches,
                                       const PhysicsParams& params, double w_tau);

// mu^i(x) = weight(x) * (T rho_sigma)^i at the nearest junction node.
TripleField mu_from_rho(const ClusterMesh& mesh, const TangentialFrame& frame, const Mat3& T,
                        const MatX& rho_on_sigma /* nodes x 3 */);

TripleField mu_from_rho(const ClusterMesh& mesh, const TangentialFrame& frame, const Mat3& T,
                        const TripleField& rho);

// Deformed positions x + rho N + mu tau per patch. Throws FoldOverError when
// an element degenerates or flips against the reference orientation.
std::array<MatX, 3> apply_graph(const ClusterMesh& mesh,
                                const std::array<GeometryCache, 3>& caches,
                                const TangentialFrame& frame, const TripleField& rho,
                                const TripleField& mu, bool check_foldover = true);

// Smooth random field vanishing at the junction (zero trace), sup-norm scaled
// to `amplitude`; deterministic in `seed`.
TripleField junction_preserving_perturbation(const ClusterMesh& mesh,
                                             const TangentialFrame& frame, double amplitude,
                                             unsigned seed);

}  // namespace triflow
