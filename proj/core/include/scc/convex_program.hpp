#pragma once

#include <functional>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "scc/system_model.hpp"

namespace scc {

/// ||rows * x[offset : offset + rows.cols()] + shift||^2
struct QuadraticTerm {
  Eigen::Index offset = 0;
  Eigen::MatrixXd rows;
  Eigen::VectorXd shift;
};

/// Convex quadratic f(x) = sum_t ||R_t x_t + b_t||^2 + q^T x + c, stored in
/// factored form so Hessians stay block-sparse.
struct QuadraticFunction {
  std::vector<QuadraticTerm> terms;
  Eigen::VectorXd linear;  ///< length n, or empty for zero
  double constant = 0.0;

  double value(const Eigen::VectorXd& x) const;
  void add_gradient(const Eigen::VectorXd& x, double weight, Eigen::VectorXd& grad) const;
  void add_hessian(double weight, Eigen::MatrixXd& hess) const;
  Eigen::VectorXd gradient(const Eigen::VectorXd& x) const;
};

/// Hermitian matrix cone membership V(x) + (x[shift_variable] + shift) I > 0,
/// where V(x) is read from hermitian_param_count(dim) coordinates at offset.
struct HermitianBlock {
  Eigen::Index offset = 0;
  int dim = 0;
  Eigen::Index shift_variable = -1;
  double shift = 0.0;

  CMatrix matrix(const Eigen::VectorXd& x) const;
};

/// minimize f0(x) s.t. f_i(x) <= 0, V_b(x) >= 0.
struct ConvexProgram {
  Eigen::Index n_vars = 0;
  QuadraticFunction objective;
  std::vector<QuadraticFunction> constraints;
  std::vector<HermitianBlock> blocks;

  /// Barrier parameter: number of scalar constraints plus total block order.
  double barrier_degree() const;
};

struct BarrierOptions {
  double gap_tol = 1e-9;
  double growth = 20.0;
  int max_centering_steps = 80;
  int max_outer_iterations = 80;
  double newton_tol = 1e-11;
  /// Checked after every Newton step; returning true ends the solve.
  std::function<bool(const Eigen::VectorXd&)> stop_early;
};

enum class BarrierStatus { optimal, max_iterations, numeric_failure, stopped_early };

struct BarrierResult {
  Eigen::VectorXd x;
  Eigen::VectorXd multipliers;     ///< one per scalar constraint
  std::vector<CMatrix> block_duals;  ///< one Hermitian dual per block
  double objective = 0.0;
  double t = 0.0;
  BarrierStatus status = BarrierStatus::numeric_failure;
  std::vector<double> gap_history;  ///< barrier_degree / t after each centering
  int newton_steps = 0;
};

/// Log-barrier path following from a strictly feasible x0.
BarrierResult solve_barrier(const ConvexProgram& program, const Eigen::VectorXd& x0,
                            const BarrierOptions& options);

/// True when every f_i(x) < 0 and every block is positive definite.
bool strictly_feasible(const ConvexProgram& program, const Eigen::VectorXd& x);

/// Largest constraint value / smallest block eigenvalue (negated) at x.
double max_violation(const ConvexProgram& program, const Eigen::VectorXd& x);

enum class ProgramStatus { optimal, infeasible, max_iterations, numeric_failure };

struct ProgramSolution {
  ProgramStatus status = ProgramStatus::numeric_failure;
  Eigen::VectorXd x;
  Eigen::VectorXd multipliers;
  std::vector<CMatrix> block_duals;
  double objective = 0.0;
  double duality_gap = 0.0;
  double phase1_value = 0.0;  ///< optimal max violation when phase I ran to completion
  double relaxation = 0.0;    ///< constraint relaxation used for thin feasible sets
  std::vector<double> gap_history;
  int newton_steps = 0;
  std::string certificate;
};

/// Phase I (minimize the maximum violation) followed by the barrier method.
/// Declared infeasible when the phase-I optimum exceeds tol.
ProgramSolution solve_convex_program(const ConvexProgram& program, const Eigen::VectorXd& x0,
                                     double tol);

}  // namespace scc
