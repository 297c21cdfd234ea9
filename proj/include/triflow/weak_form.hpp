#pragma once

#include <vector>

#include "triflow/diffgeo.hpp"
#include "triflow/fields.hpp"
#include "triflow/graph_map.hpp"

namespace triflow {

// Reference-assembled building blocks of the split linearized system: the
// gamma-weighted lumped mass and stiffness over all patches, plus the
// junction sum-constraint rows (one per node and field, three nonzeros each).
struct AssembledSystem {
  std::vector<double> gamma;       // per patch weight
  std::vector<int> offset;         // patch -> first dof
  int n_dofs = 0;
  Vec mass_diag;                   // gamma-weighted lumped mass
  SparseMat stiffness;             // gamma-weighted
  SparseMat constraints;           // n_nodes x n_dofs, entries gamma^i
  Vec trace_mass;                  // lumped junction mass per node
  std::vector<std::array<int, 3>> node_dofs;

  int n_nodes() const { return static_cast<int>(trace_mass.size()); }
  int dof(int patch, int vertex) const { return offset[patch] + vertex; }

  Vec stack(const TripleField& f) const;
  TripleField unstack(const Vec& x) const;
};

AssembledSystem assemble_system(const ClusterMesh& mesh,
                                const std::array<GeometryCache, 3>& caches, const Vec3& gamma);

// Junction-free variant (any number of patches, no constraints); used for
// closed-surface problems such as the single-curve dispersion checks.
AssembledSystem assemble_system(const std::vector<const GeometryCache*>& caches,
                                const std::vector<double>& gamma);

// Spec-facing blocks. B_v = K + C_v M (symmetric, SPD for C_v > 0);
// B_u = -(K + C_u M).
SparseMat assemble_gamma_mass(const AssembledSystem& sys);
SparseMat assemble_Bv(const AssembledSystem& sys, double C_v);
SparseMat assemble_Bu(const AssembledSystem& sys, double C_u);

struct ConstraintBlock {
  SparseMat rows;   // per junction node, gamma weights
  Vec target_u;     // b1
  Vec target_v;     // b4
};
ConstraintBlock assemble_constraints(const AssembledSystem& sys, const Vec& target_u,
                                     const Vec& target_v);

// Natural-condition boundary loads. The u-equation load realizes
// b_u(zeta) = int_Sigma gamma1 b5 zeta1 - gamma3 b6 zeta3 and yields the flux
// jumps dv1 - dv2 = b5, dv2 - dv3 = b6; the v-equation load carries b2, b3
// with the opposite sign pattern, yielding du1 - du2 = b2, du2 - du3 = b3.
struct BoundaryLoad {
  Vec u_load;
  Vec v_load;
};
BoundaryLoad assemble_boundary_load(const AssembledSystem& sys, const Vec& b2, const Vec& b3,
                                    const Vec& b5, const Vec& b6);

}  // namespace triflow
