#include "scc/convex_program.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <sstream>

#include "scc/errors.hpp"
#include "scc/hermitian_lifting.hpp"

namespace scc {

namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();

// Lifted basis matrices of a block's local coordinates (params, then the
// optional shift).
std::vector<Eigen::MatrixXd> lifted_basis(const HermitianBlock& block) {
  std::vector<Eigen::MatrixXd> basis;
  const int count = hermitian_param_count(block.dim);
  basis.reserve(static_cast<std::size_t>(count + 1));
  for (int p = 0; p < count; ++p) basis.push_back(lift_hermitian(hermitian_basis(p, block.dim)));
  if (block.shift_variable >= 0) basis.push_back(Eigen::MatrixXd::Identity(2 * block.dim, 2 * block.dim));
  return basis;
}

std::vector<Eigen::Index> block_indices(const HermitianBlock& block) {
  std::vector<Eigen::Index> idx;
  const int count = hermitian_param_count(block.dim);
  for (int p = 0; p < count; ++p) idx.push_back(block.offset + p);
  if (block.shift_variable >= 0) idx.push_back(block.shift_variable);
  return idx;
}

struct BlockState {
  bool ok = false;
  double logdet = 0.0;      // log det V
  Eigen::MatrixXd inverse;  // inverse of the lifted matrix
};

BlockState evaluate_block(const HermitianBlock& block, const Eigen::VectorXd& x, bool want_inverse) {
  BlockState st;
  const Eigen::MatrixXd lifted = lift_hermitian(block.matrix(x));
  Eigen::LLT<Eigen::MatrixXd> llt(lifted);
  if (llt.info() != Eigen::Success) return st;
  const Eigen::MatrixXd& l = llt.matrixLLT();
  double sum = 0.0;
  for (Eigen::Index i = 0; i < l.rows(); ++i) {
    const double d = l(i, i);
    if (!(d > 0.0) || !std::isfinite(d)) return st;
    sum += std::log(d);
  }
  st.ok = true;
  st.logdet = sum;  // log det(lift) = 2 log det V, and sum = 0.5 log det(lift)
  if (want_inverse) st.inverse = llt.solve(Eigen::MatrixXd::Identity(l.rows(), l.cols()));
  return st;
}

struct PreparedTerm {
  Eigen::Index offset;
  Eigen::MatrixXd gram;  // 2 R^T R
};

std::vector<PreparedTerm> prepare_hessian(const QuadraticFunction& f) {
  std::vector<PreparedTerm> out;
  out.reserve(f.terms.size());
  for (const auto& t : f.terms) out.push_back({t.offset, 2.0 * t.rows.transpose() * t.rows});
  return out;
}

void add_prepared(const std::vector<PreparedTerm>& terms, double weight, Eigen::MatrixXd& hess) {
  for (const auto& t : terms) {
    const auto w = t.gram.rows();
    hess.block(t.offset, t.offset, w, w).noalias() += weight * t.gram;
  }
}

class BarrierEvaluator {
 public:
  explicit BarrierEvaluator(const ConvexProgram& program) : program_(program) {
    objective_hess_ = prepare_hessian(program.objective);
    for (const auto& c : program.constraints) constraint_hess_.push_back(prepare_hessian(c));
    for (const auto& b : program.blocks) {
      basis_.push_back(lifted_basis(b));
      indices_.push_back(block_indices(b));
    }
  }

  // Barrier objective; +inf outside the domain.
  double value(const Eigen::VectorXd& x, double t) const {
    double phi = t * program_.objective.value(x);
    for (const auto& c : program_.constraints) {
      const double f = c.value(x);
      if (!(f < 0.0)) return kInf;
      phi -= std::log(-f);
    }
    for (const auto& b : program_.blocks) {
      const BlockState st = evaluate_block(b, x, false);
      if (!st.ok) return kInf;
      phi -= st.logdet;
    }
    return std::isfinite(phi) ? phi : kInf;
  }

  bool feasible(const Eigen::VectorXd& x) const {
    for (const auto& c : program_.constraints) {
      if (!(c.value(x) < 0.0)) return false;
    }
    for (const auto& b : program_.blocks) {
      if (!evaluate_block(b, x, false).ok) return false;
    }
    return true;
  }

  // Gradient and Hessian of the barrier objective. False outside the domain.
  bool derivatives(const Eigen::VectorXd& x, double t, Eigen::VectorXd& grad,
                   Eigen::MatrixXd& hess) const {
    const Eigen::Index n = program_.n_vars;
    grad = Eigen::VectorXd::Zero(n);
    hess = Eigen::MatrixXd::Zero(n, n);
    program_.objective.add_gradient(x, t, grad);
    add_prepared(objective_hess_, t, hess);
    Eigen::VectorXd gi(n);
    for (std::size_t i = 0; i < program_.constraints.size(); ++i) {
      const auto& c = program_.constraints[i];
      const double f = c.value(x);
      if (!(f < 0.0)) return false;
      const double w = -1.0 / f;
      gi = c.gradient(x);
      grad.noalias() += w * gi;
      add_prepared(constraint_hess_[i], w, hess);
      hess.noalias() += (w * w) * gi * gi.transpose();
    }
    for (std::size_t b = 0; b < program_.blocks.size(); ++b) {
      const BlockState st = evaluate_block(program_.blocks[b], x, true);
      if (!st.ok) return false;
      const auto& basis = basis_[b];
      const auto& idx = indices_[b];
      std::vector<Eigen::MatrixXd> prod(basis.size());
      for (std::size_t p = 0; p < basis.size(); ++p) prod[p] = st.inverse * basis[p];
      for (std::size_t p = 0; p < basis.size(); ++p) {
        grad(idx[p]) -= 0.5 * prod[p].trace();
        for (std::size_t q = p; q < basis.size(); ++q) {
          const double h = 0.5 * (prod[p].cwiseProduct(prod[q].transpose())).sum();
          hess(idx[p], idx[q]) += h;
          if (q != p) hess(idx[q], idx[p]) += h;
        }
      }
    }
    return true;
  }

  void duals(const Eigen::VectorXd& x, double t, Eigen::VectorXd& multipliers,
             std::vector<CMatrix>& block_duals) const {
    multipliers.resize(static_cast<Eigen::Index>(program_.constraints.size()));
    for (std::size_t i = 0; i < program_.constraints.size(); ++i) {
      multipliers(static_cast<Eigen::Index>(i)) = 1.0 / (t * -program_.constraints[i].value(x));
    }
    block_duals.clear();
    for (const auto& b : program_.blocks) {
      const BlockState st = evaluate_block(b, x, true);
      block_duals.push_back(st.ok ? CMatrix(unlift_hermitian(st.inverse) / t)
                                  : CMatrix(CMatrix::Zero(b.dim, b.dim)));
    }
  }

 private:
  const ConvexProgram& program_;
  std::vector<PreparedTerm> objective_hess_;
  std::vector<std::vector<PreparedTerm>> constraint_hess_;
  std::vector<std::vector<Eigen::MatrixXd>> basis_;
  std::vector<std::vector<Eigen::Index>> indices_;
};

bool solve_newton(Eigen::MatrixXd& hess, const Eigen::VectorXd& grad, Eigen::VectorXd& step) {
  const Eigen::Index n = hess.rows();
  double jitter = 0.0;
  const double scale = std::max(1e-300, hess.diagonal().cwiseAbs().maxCoeff());
  for (int attempt = 0; attempt < 8; ++attempt) {
    Eigen::LLT<Eigen::MatrixXd> llt(hess);
    if (llt.info() == Eigen::Success) {
      step = llt.solve(-grad);
      if (step.allFinite()) return true;
    }
    const double next = jitter == 0.0 ? scale * 1e-14 : jitter * 100.0;
    hess.diagonal().array() += next - jitter;
    jitter = next;
  }
  (void)n;
  return false;
}

}  // namespace

double QuadraticFunction::value(const Eigen::VectorXd& x) const {
  // Extended precision: near an active constraint f is a small difference of
  // O(1) terms and the barrier multipliers 1 / (t (-f)) inherit its error.
  long double v = constant;
  for (Eigen::Index i = 0; i < linear.size(); ++i) v += static_cast<long double>(linear(i)) * x(i);
  for (const auto& t : terms) {
    for (Eigen::Index r = 0; r < t.rows.rows(); ++r) {
      long double acc = t.shift(r);
      for (Eigen::Index c = 0; c < t.rows.cols(); ++c) {
        acc += static_cast<long double>(t.rows(r, c)) * x(t.offset + c);
      }
      v += acc * acc;
    }
  }
  return static_cast<double>(v);
}

void QuadraticFunction::add_gradient(const Eigen::VectorXd& x, double weight,
                                     Eigen::VectorXd& grad) const {
  if (linear.size() != 0) grad.noalias() += weight * linear;
  for (const auto& t : terms) {
    const Eigen::VectorXd r = t.rows * x.segment(t.offset, t.rows.cols()) + t.shift;
    grad.segment(t.offset, t.rows.cols()).noalias() += (2.0 * weight) * (t.rows.transpose() * r);
  }
}

void QuadraticFunction::add_hessian(double weight, Eigen::MatrixXd& hess) const {
  for (const auto& t : terms) {
    const auto w = t.rows.cols();
    hess.block(t.offset, t.offset, w, w).noalias() += (2.0 * weight) * t.rows.transpose() * t.rows;
  }
}

Eigen::VectorXd QuadraticFunction::gradient(const Eigen::VectorXd& x) const {
  Eigen::VectorXd g = Eigen::VectorXd::Zero(x.size());
  add_gradient(x, 1.0, g);
  return g;
}

CMatrix HermitianBlock::matrix(const Eigen::VectorXd& x) const {
  CMatrix v = hermitian_from_params(
      std::span<const double>(x.data() + offset, static_cast<std::size_t>(hermitian_param_count(dim))), dim);
  double s = shift;
  if (shift_variable >= 0) s += x(shift_variable);
  if (s != 0.0) v.diagonal().array() += s;
  return v;
}

double ConvexProgram::barrier_degree() const {
  double nu = static_cast<double>(constraints.size());
  for (const auto& b : blocks) nu += b.dim;
  return nu;
}

bool strictly_feasible(const ConvexProgram& program, const Eigen::VectorXd& x) {
  return BarrierEvaluator(program).feasible(x);
}

double max_violation(const ConvexProgram& program, const Eigen::VectorXd& x) {
  double worst = -kInf;
  for (const auto& c : program.constraints) worst = std::max(worst, c.value(x));
  for (const auto& b : program.blocks) {
    Eigen::SelfAdjointEigenSolver<CMatrix> es(b.matrix(x), Eigen::EigenvaluesOnly);
    worst = std::max(worst, -es.eigenvalues()(0));
  }
  return worst;
}

BarrierResult solve_barrier(const ConvexProgram& program, const Eigen::VectorXd& x0,
                            const BarrierOptions& options) {
  BarrierResult res;
  res.x = x0;
  const BarrierEvaluator eval(program);
  if (!eval.feasible(x0)) {
    res.status = BarrierStatus::numeric_failure;
    return res;
  }
  const double nu = std::max(1.0, program.barrier_degree());

  // Initial t from the least-squares balance of objective and barrier gradients.
  double t = 1.0;
  {
    Eigen::VectorXd g_obj = program.objective.gradient(x0);
    Eigen::VectorXd g_bar;
    Eigen::MatrixXd h_bar;
    eval.derivatives(x0, 0.0, g_bar, h_bar);
    const double gg = g_obj.squaredNorm();
    if (gg > 0.0) {
      const double cand = -g_obj.dot(g_bar) / gg;
      if (cand > 0.0 && std::isfinite(cand)) t = cand;
    }
    t = std::clamp(t, 1e-6, 1e6);
  }

  Eigen::VectorXd x = x0;
  Eigen::VectorXd grad;
  Eigen::MatrixXd hess;
  Eigen::VectorXd step;
  enum class Centering { done, stopped, failed };

  // Damped Newton on the barrier objective at fixed t.
  const auto center = [&](double newton_tol, int max_steps) {
    double last_decrement = kInf;
    for (int it = 0; it < max_steps; ++it) {
      if (!eval.derivatives(x, t, grad, hess)) return Centering::failed;
      if (!solve_newton(hess, grad, step)) return Centering::failed;
      const double decrement2 = -grad.dot(step);
      if (!(decrement2 >= 0.0)) break;
      if (decrement2 / 2.0 <= newton_tol) break;
      if (newton_tol < options.newton_tol && decrement2 >= last_decrement) break;
      last_decrement = decrement2;
      double alpha = 1.0;
      int halvings = 0;
      while (!eval.feasible(x + alpha * step) && halvings < 80) {
        alpha *= 0.5;
        ++halvings;
      }
      if (halvings == 80) break;
      if (decrement2 > 0.0625) {
        const double phi0 = eval.value(x, t);
        while (eval.value(x + alpha * step, t) > phi0 - 0.25 * alpha * decrement2 && halvings < 80) {
          alpha *= 0.5;
          ++halvings;
        }
        if (halvings == 80) break;
      }
      x += alpha * step;
      ++res.newton_steps;
      if (options.stop_early && options.stop_early(x)) return Centering::stopped;
      if (alpha < 1e-14) break;
    }
    return Centering::done;
  };

  res.status = BarrierStatus::max_iterations;
  for (int outer = 0; outer < options.max_outer_iterations; ++outer) {
    const Centering c = center(options.newton_tol, options.max_centering_steps);
    if (c == Centering::failed) {
      res.status = BarrierStatus::numeric_failure;
      res.x = x;
      return res;
    }
    if (c == Centering::stopped) {
      res.status = BarrierStatus::stopped_early;
      break;
    }
    const double gap = nu / t;
    res.gap_history.push_back(gap);
    if (gap <= options.gap_tol) {
      // Polish the last center so the multipliers nearly satisfy stationarity.
      if (center(1e-26, 10) == Centering::failed) {
        res.status = BarrierStatus::numeric_failure;
        res.x = x;
        return res;
      }
      res.status = BarrierStatus::optimal;
      break;
    }
    t *= options.growth;
  }
  res.x = x;
  res.t = t;
  res.objective = program.objective.value(x);
  eval.duals(x, t, res.multipliers, res.block_duals);
  return res;
}

namespace {

ConvexProgram phase_one_program(const ConvexProgram& program) {
  ConvexProgram p1;
  const Eigen::Index n = program.n_vars;
  const Eigen::Index s_idx = n;
  p1.n_vars = n + 1;
  p1.objective.linear = Eigen::VectorXd::Zero(n + 1);
  p1.objective.linear(s_idx) = 1.0;
  for (const auto& c : program.constraints) {
    QuadraticFunction f = c;
    Eigen::VectorXd lin = Eigen::VectorXd::Zero(n + 1);
    if (c.linear.size() != 0) lin.head(n) = c.linear;
    lin(s_idx) = -1.0;
    f.linear = lin;
    p1.constraints.push_back(std::move(f));
  }
  // Lower bound s >= -1 keeps the auxiliary problem bounded.
  QuadraticFunction bound;
  bound.linear = Eigen::VectorXd::Zero(n + 1);
  bound.linear(s_idx) = -1.0;
  bound.constant = -1.0;
  p1.constraints.push_back(std::move(bound));
  for (const auto& b : program.blocks) {
    if (b.shift_variable >= 0) throw ContractError("phase I: blocks already carry a shift variable");
    HermitianBlock nb = b;
    nb.shift_variable = s_idx;
    p1.blocks.push_back(nb);
  }
  return p1;
}

ConvexProgram relaxed_program(const ConvexProgram& program, double eps) {
  ConvexProgram r = program;
  for (auto& c : r.constraints) c.constant -= eps;
  for (auto& b : r.blocks) b.shift += eps;
  return r;
}

ProgramStatus map_status(BarrierStatus s) {
  switch (s) {
    case BarrierStatus::optimal:
      return ProgramStatus::optimal;
    case BarrierStatus::max_iterations:
    case BarrierStatus::stopped_early:
      return ProgramStatus::max_iterations;
    case BarrierStatus::numeric_failure:
      return ProgramStatus::numeric_failure;
  }
  return ProgramStatus::numeric_failure;
}

}  // namespace

ProgramSolution solve_convex_program(const ConvexProgram& program, const Eigen::VectorXd& x0,
                                     double tol) {
  ProgramSolution sol;
  if (x0.size() != program.n_vars) throw ContractError("solve_convex_program: x0 has wrong length");
  Eigen::VectorXd start = x0;
  double eps = 0.0;
  int newton = 0;

  if (!strictly_feasible(program, x0)) {
    const ConvexProgram p1 = phase_one_program(program);
    const double v0 = max_violation(program, x0);
    Eigen::VectorXd y0(program.n_vars + 1);
    y0.head(program.n_vars) = x0;
    y0(program.n_vars) = std::max(v0, -0.5) + 1.0;
    BarrierOptions opt;
    opt.gap_tol = tol * 1e-4;
    const Eigen::Index s_idx = program.n_vars;
    opt.stop_early = [s_idx](const Eigen::VectorXd& y) { return y(s_idx) < -1e-3; };
    const BarrierResult r1 = solve_barrier(p1, y0, opt);
    newton += r1.newton_steps;
    if (r1.status == BarrierStatus::numeric_failure) {
      sol.status = ProgramStatus::numeric_failure;
      sol.certificate = "phase I failed numerically";
      sol.newton_steps = newton;
      return sol;
    }
    const double s_final = r1.x(s_idx);
    const double s_lower = s_final - (r1.gap_history.empty() ? 0.0 : r1.gap_history.back());
    sol.phase1_value = s_final;
    start = r1.x.head(program.n_vars);
    if (r1.status != BarrierStatus::stopped_early) {
      if (s_lower > tol) {
        std::ostringstream os;
        os << "phase I optimum of the maximum constraint violation is " << s_final
           << " (lower bound " << s_lower << ") > tol " << tol;
        sol.status = ProgramStatus::infeasible;
        sol.certificate = os.str();
        sol.x = start;
        sol.newton_steps = newton;
        return sol;
      }
      if (s_final > -1e-10) eps = 2.0 * std::max(s_final, 0.0) + 1e-12;
    }
  }

  const ConvexProgram working = eps > 0.0 ? relaxed_program(program, eps) : program;
  BarrierOptions opt;
  opt.gap_tol = 0.5 * tol;
  const BarrierResult r2 = solve_barrier(working, start, opt);
  newton += r2.newton_steps;
  sol.status = map_status(r2.status);
  sol.x = r2.x;
  sol.multipliers = r2.multipliers;
  sol.block_duals = r2.block_duals;
  sol.objective = r2.objective;
  sol.duality_gap = r2.gap_history.empty() ? 0.0 : r2.gap_history.back();
  sol.relaxation = eps;
  sol.gap_history = r2.gap_history;
  sol.newton_steps = newton;
  return sol;
}

}  // namespace scc
