#include "triflow/linear_solver.hpp"

#include <Eigen/SparseLU>
#include <chrono>

namespace triflow {

struct StepOperator::Impl {
  SparseMat A;
  Eigen::SparseLU<SparseMat> lu;
};

StepOperator::~StepOperator() = default;
StepOperator::StepOperator(StepOperator&&) noexcept = default;
StepOperator& StepOperator::operator=(StepOperator&&) noexcept = default;

StepOperator::StepOperator(const AssembledSystem& sys, double dt, double C_u, double C_v)
    : sys_(&sys), dt_(dt), C_u_(C_u), C_v_(C_v), impl_(std::make_unique<Impl>()) {
  if (!(dt > 0)) throw ValidationError("StepOperator: dt must be positive");
  const int n = sys.n_dofs;
  const int J = sys.n_nodes();
  const int N = 2 * n + 2 * J;

  std::vector<Triplet> trips;
  trips.reserve(4 * sys.stiffness.nonZeros() + 4 * n + 12 * J);
  auto add_block = [&](int r0, int c0, const SparseMat& B, double scale) {
    for (int k = 0; k < B.outerSize(); ++k)
      for (SparseMat::InnerIterator it(B, k); it; ++it)
        trips.emplace_back(r0 + static_cast<int>(it.row()), c0 + static_cast<int>(it.col()),
                           scale * it.value());
  };

  // u rows: M/dt U + (K + C_u M) V - C^T lam_u
  for (int i = 0; i < n; ++i) trips.emplace_back(i, i, sys.mass_diag[i] / dt);
  add_block(0, n, sys.stiffness, 1.0);
  if (C_u != 0)
    for (int i = 0; i < n; ++i) trips.emplace_back(i, n + i, C_u * sys.mass_diag[i]);
  // v rows: -(K + C_v M) U + M V - C^T lam_v
  add_block(n, 0, sys.stiffness, -1.0);
  if (C_v != 0)
    for (int i = 0; i < n; ++i) trips.emplace_back(n + i, i, -C_v * sys.mass_diag[i]);
  for (int i = 0; i < n; ++i) trips.emplace_back(n + i, n + i, sys.mass_diag[i]);
  // constraints and multiplier columns
  for (int k = 0; k < sys.constraints.outerSize(); ++k) {
    for (SparseMat::InnerIterator it(sys.constraints, k); it; ++it) {
      int r = static_cast<int>(it.row());
      int c = static_cast<int>(it.col());
      trips.emplace_back(2 * n + r, c, it.value());
      trips.emplace_back(2 * n + J + r, n + c, it.value());
      trips.emplace_back(c, 2 * n + r, -it.value());
      trips.emplace_back(n + c, 2 * n + J + r, -it.value());
    }
  }

  impl_->A.resize(N, N);
  impl_->A.setFromTriplets(trips.begin(), trips.end());
  impl_->A.makeCompressed();
  impl_->lu.analyzePattern(impl_->A);
  impl_->lu.factorize(impl_->A);
  if (impl_->lu.info() != Eigen::Success) {
    // probe the factor diagonal for the offending pivot
    std::string msg = "StepOperator: singular step matrix (n=" + std::to_string(n) +
                      ", constraints=" + std::to_string(2 * J) + "): " +
                      impl_->lu.lastErrorMessage();
    throw SolverError(msg);
  }
}

StepSolution solve_step(const LinearStepInput& input) {
  if (!input.sys) throw ValidationError("solve_step: missing assembled system");
  StepOperator op(*input.sys, input.dt, input.C_u, input.C_v);
  return op.solve(input.u_prev, input.f, input.b);
}

StepSolution StepOperator::solve(const Vec& u_prev, const Vec& f,
                                 const std::array<Vec, 6>& b) const {
  const AssembledSystem& sys = *sys_;
  const int n = sys.n_dofs;
  const int J = sys.n_nodes();
  if (u_prev.size() != n || f.size() != n)
    throw ValidationError("solve_step: field size mismatch");
  for (const Vec& bi : b)
    if (bi.size() != J) throw ValidationError("solve_step: junction scalar size mismatch");

  auto t0 = std::chrono::steady_clock::now();
  BoundaryLoad load = assemble_boundary_load(sys, b[1], b[2], b[4], b[5]);

  Vec rhs = Vec::Zero(2 * n + 2 * J);
  rhs.head(n) = sys.mass_diag.cwiseProduct(u_prev) / dt_ + sys.mass_diag.cwiseProduct(f) +
                load.u_load;
  rhs.segment(n, n) = load.v_load;
  rhs.segment(2 * n, J) = b[0];
  rhs.segment(2 * n + J, J) = b[3];

  Vec x = impl_->lu.solve(rhs);
  if (impl_->lu.info() != Eigen::Success) throw SolverError("solve_step: back substitution failed");
  auto t1 = std::chrono::steady_clock::now();

  StepSolution out;
  out.u = x.head(n);
  out.v = x.segment(n, n);
  out.lambda_u = x.segment(2 * n, J);
  out.lambda_v = x.segment(2 * n + J, J);

  Vec resid = impl_->A * x - rhs;
  double scale = std::max(1e-300, rhs.norm());
  out.report.residual_u = resid.head(n).norm() / scale;
  out.report.residual_v = resid.segment(n, n).norm() / scale;
  out.report.constraint_residual =
      J > 0 ? resid.tail(2 * J).cwiseAbs().maxCoeff() / std::max(1.0, x.cwiseAbs().maxCoeff())
            : 0.0;
  // compatibility (CLP) monitor: gamma-weighted f at the junction
  for (int nd = 0; nd < J; ++nd) {
    double s = 0;
    for (int i = 0; i < 3; ++i) s += sys.gamma[i] * f[sys.node_dofs[nd][i]];
    out.report.clp_residual = std::max(out.report.clp_residual, std::abs(s));
  }
  double fscale = 1.0 + (n ? f.cwiseAbs().maxCoeff() : 0.0);
  out.report.clp_warning = out.report.clp_residual > 1e-6 * fscale;
  out.report.solve_ms = std::chrono::duration<double, std::milli>(t1 - t0).count();
  return out;
}

}  // namespace triflow
