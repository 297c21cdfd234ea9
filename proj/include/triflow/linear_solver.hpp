#pragma once

#include <memory>

#include "triflow/weak_form.hpp"

namespace triflow {

struct SolveReport {
  double residual_u = 0;      // relative residual of the u block
  double residual_v = 0;
  double constraint_residual = 0;
  double clp_residual = 0;    // max_n |sum_i gamma_i f_i| at junction nodes
  bool clp_warning = false;
  double factor_ms = 0;
  double solve_ms = 0;
};

struct StepSolution {
  Vec u, v;          // stacked fields
  Vec lambda_u, lambda_v;
  SolveReport report;
};

struct LinearStepInput {
  const AssembledSystem* sys = nullptr;
  double dt = 0;
  double C_u = 0, C_v = 0;
  Vec u_prev;                  // stacked
  Vec f;                       // stacked strong-form inhomogeneity
  std::array<Vec, 6> b;        // junction scalars b1..b6 (b[0]..b[5])
};

// One backward Euler step of the split system
//   M (u - u_prev)/dt = -(K + C_u M) v + load_u(b5,b6) + M f
//   M v = (K + C_v M) u + load_v(b2,b3)
//   C u = b1,  C v = b4,
// solved monolithically with Lagrange multipliers by sparse LU. The
// factorization depends only on (sys, dt, C_u, C_v) and can be reused.
class StepOperator {
 public:
  StepOperator(const AssembledSystem& sys, double dt, double C_u, double C_v);
  ~StepOperator();
  StepOperator(StepOperator&&) noexcept;
  StepOperator& operator=(StepOperator&&) noexcept;

  StepSolution solve(const Vec& u_prev, const Vec& f, const std::array<Vec, 6>& b) const;

  const AssembledSystem& system() const { return *sys_; }
  double dt() const { return dt_; }

 private:
  const AssembledSystem* sys_;
  double dt_, C_u_, C_v_;
  struct Impl;
  std::unique_ptr<Impl> impl_;
};

StepSolution solve_step(const LinearStepInput& input);

}  // namespace triflow
