#include "triflow/weak_form.hpp"

namespace triflow {

Vec AssembledSystem::stack(const TripleField& f) const {
  Vec x(n_dofs);
  for (size_t i = 0; i < gamma.size(); ++i) x.segment(offset[i], f[static_cast<int>(i)].size()) = f[static_cast<int>(i)];
  return x;
}

TripleField AssembledSystem::unstack(const Vec& x) const {
  TripleField f;
  for (size_t i = 0; i < gamma.size() && i < 3; ++i) {
    int len = (i + 1 < offset.size() ? offset[i + 1] : n_dofs) - offset[i];
    f[static_cast<int>(i)] = x.segment(offset[i], len);
  }
  return f;
}

static AssembledSystem assemble_core(const std::vector<const GeometryCache*>& caches,
                                     const std::vector<double>& gamma) {
  AssembledSystem sys;
  sys.gamma = gamma;
  sys.offset.resize(caches.size());
  for (size_t i = 0; i < caches.size(); ++i) {
    sys.offset[i] = sys.n_dofs;
    sys.n_dofs += caches[i]->vertex_count();
  }
  sys.mass_diag.resize(sys.n_dofs);
  std::vector<Triplet> ktrips;
  for (size_t i = 0; i < caches.size(); ++i) {
    const GeometryCache& c = *caches[i];
    sys.mass_diag.segment(sys.offset[i], c.vertex_count()) = gamma[i] * c.vertex_mass;
    for (int k = 0; k < c.stiffness.outerSize(); ++k) {
      for (SparseMat::InnerIterator it(c.stiffness, k); it; ++it) {
        ktrips.emplace_back(sys.offset[i] + static_cast<int>(it.row()),
                            sys.offset[i] + static_cast<int>(it.col()), gamma[i] * it.value());
      }
    }
  }
  sys.stiffness.resize(sys.n_dofs, sys.n_dofs);
  sys.stiffness.setFromTriplets(ktrips.begin(), ktrips.end());
  sys.trace_mass.resize(0);
  sys.constraints.resize(0, sys.n_dofs);
  return sys;
}

AssembledSystem assemble_system(const std::vector<const GeometryCache*>& caches,
                                const std::vector<double>& gamma) {
  if (caches.size() != gamma.size())
    throw ValidationError("assemble_system: cache/gamma count mismatch");
  return assemble_core(caches, gamma);
}

AssembledSystem assemble_system(const ClusterMesh& mesh,
                                const std::array<GeometryCache, 3>& caches, const Vec3& gamma) {
  std::vector<const GeometryCache*> cp = {&caches[0], &caches[1], &caches[2]};
  AssembledSystem sys = assemble_core(cp, {gamma[0], gamma[1], gamma[2]});

  const int J = mesh.junction.node_count();
  sys.node_dofs.resize(J);
  sys.trace_mass = Vec::Ones(J);
  std::vector<Triplet> ctrips;
  for (int n = 0; n < J; ++n) {
    for (int i = 0; i < 3; ++i) {
      sys.node_dofs[n][i] = sys.dof(i, mesh.junction.nodes[n].vertex[i]);
      ctrips.emplace_back(n, sys.node_dofs[n][i], gamma[i]);
    }
  }
  sys.constraints.resize(J, sys.n_dofs);
  sys.constraints.setFromTriplets(ctrips.begin(), ctrips.end());

  if (mesh.dim == 2 && J > 1) {
    // lumped trace mass from the junction polyline
    sys.trace_mass.setZero();
    int segs = mesh.junction.closed ? J : J - 1;
    for (int n = 0; n < segs; ++n) {
      int m = (n + 1) % J;
      double len = (mesh.patches[0].positions.row(mesh.junction.nodes[m].vertex[0]) -
                    mesh.patches[0].positions.row(mesh.junction.nodes[n].vertex[0]))
                       .norm();
      sys.trace_mass[n] += 0.5 * len;
      sys.trace_mass[m] += 0.5 * len;
    }
  }
  return sys;
}

SparseMat assemble_gamma_mass(const AssembledSystem& sys) {
  SparseMat M(sys.n_dofs, sys.n_dofs);
  std::vector<Triplet> t;
  t.reserve(sys.n_dofs);
  for (int i = 0; i < sys.n_dofs; ++i) t.emplace_back(i, i, sys.mass_diag[i]);
  M.setFromTriplets(t.begin(), t.end());
  return M;
}

SparseMat assemble_Bv(const AssembledSystem& sys, double C_v) {
  SparseMat B = sys.stiffness;
  if (C_v != 0.0) B += SparseMat(C_v * assemble_gamma_mass(sys));
  return B;
}

SparseMat assemble_Bu(const AssembledSystem& sys, double C_u) {
  return SparseMat(-assemble_Bv(sys, C_u));
}

ConstraintBlock assemble_constraints(const AssembledSystem& sys, const Vec& target_u,
                                     const Vec& target_v) {
  if (target_u.size() != sys.n_nodes() || target_v.size() != sys.n_nodes())
    throw ValidationError("assemble_constraints: target sized to a different junction");
  return {sys.constraints, target_u, target_v};
}

BoundaryLoad assemble_boundary_load(const AssembledSystem& sys, const Vec& b2, const Vec& b3,
                                    const Vec& b5, const Vec& b6) {
  BoundaryLoad out;
  out.u_load = Vec::Zero(sys.n_dofs);
  out.v_load = Vec::Zero(sys.n_dofs);
  for (int n = 0; n < sys.n_nodes(); ++n) {
    double m = sys.trace_mass[n];
    int d1 = sys.node_dofs[n][0], d3 = sys.node_dofs[n][2];
    out.u_load[d1] += sys.gamma[0] * m * b5[n];
    out.u_load[d3] -= sys.gamma[2] * m * b6[n];
    out.v_load[d1] -= sys.gamma[0] * m * b2[n];
    out.v_load[d3] += sys.gamma[2] * m * b3[n];
  }
  return out;
}

}  // namespace triflow
