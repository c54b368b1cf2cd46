#include "scc/subproblems.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <sstream>

#include <nlohmann/json.hpp>

#include "scc/convex_program.hpp"
#include "scc/errors.hpp"
#include "scc/hermitian_lifting.hpp"
#include "scc/signal_metrics.hpp"

namespace scc {

namespace {

// Real 2p x 2q matrix acting on interleaved (re, im) coordinates.
Eigen::MatrixXd realify(const CMatrix& g) {
  Eigen::MatrixXd r(2 * g.rows(), 2 * g.cols());
  for (Eigen::Index a = 0; a < g.rows(); ++a) {
    for (Eigen::Index b = 0; b < g.cols(); ++b) {
      const cplx z = g(a, b);
      r(2 * a, 2 * b) = z.real();
      r(2 * a, 2 * b + 1) = -z.imag();
      r(2 * a + 1, 2 * b) = z.imag();
      r(2 * a + 1, 2 * b + 1) = z.real();
    }
  }
  return r;
}

CVector unpack(const Eigen::VectorXd& x, Eigen::Index offset, Eigen::Index len) {
  CVector v(len);
  for (Eigen::Index i = 0; i < len; ++i) v(i) = cplx(x(offset + 2 * i), x(offset + 2 * i + 1));
  return v;
}

double min_eigenvalue(const CMatrix& h) {
  if (h.size() == 0) return 0.0;
  Eigen::SelfAdjointEigenSolver<CMatrix> es(0.5 * (h + h.adjoint()), Eigen::EigenvaluesOnly);
  return es.eigenvalues()(0);
}

SubproblemStatus map_status(ProgramStatus s) {
  switch (s) {
    case ProgramStatus::optimal:
      return SubproblemStatus::optimal;
    case ProgramStatus::infeasible:
      return SubproblemStatus::infeasible;
    case ProgramStatus::max_iterations:
      return SubproblemStatus::max_iterations;
    case ProgramStatus::numeric_failure:
      return SubproblemStatus::numeric_failure;
  }
  return SubproblemStatus::numeric_failure;
}

struct Dims {
  int n, k, m, l, j;
};

Dims dims_of(const ReceiveBeams& rx, const ChannelSet& ch) {
  Dims d{};
  d.n = ch.n_rows();
  d.k = ch.n_ues();
  d.m = ch.n_cols();
  d.l = static_cast<int>(rx.comp.cols());
  d.j = d.k ? static_cast<int>(rx.sense.front().size()) : 0;
  return d;
}

void check_receivers(const ReceiveBeams& rx, const ChannelSet& ch) {
  if (ch.n_ues() == 0) throw ContractError("subproblem needs at least one UE");
  if (rx.comp.rows() != ch.n_rows()) throw ContractError("Z must have N rows");
  if (!rx.comp.allFinite()) throw ContractError("Z must be finite");
  if (rx.sense.size() != static_cast<std::size_t>(ch.n_ues())) {
    throw ContractError("sensing receivers must cover all K UEs");
  }
  const std::size_t j = rx.sense.front().size();
  for (const auto& row : rx.sense) {
    if (row.size() != j) throw ContractError("every UE needs J sensing receivers");
    for (const auto& u : row) {
      if (u.size() != ch.n_rows()) throw ContractError("sensing receivers must have length N");
      if (!u.allFinite()) throw ContractError("sensing receivers must be finite");
    }
  }
  for (const auto& h : ch.matrices) {
    if (h.rows() != ch.n_rows() || h.cols() != ch.n_cols()) throw ContractError("channels must share one shape");
  }
}

void check_budgets(const std::vector<double>& budget, int k) {
  if (budget.size() != static_cast<std::size_t>(k)) throw ContractError("need one power budget per UE");
  for (double p : budget) {
    if (!(p > 0.0) || !std::isfinite(p)) throw ContractError("power budgets must be positive and finite");
  }
}

// Budget-normalized layout of the CEM variables: W_k interleaved column-major,
// then the Hermitian coordinates of every V_kj.
struct CemLayout {
  Dims d;
  Eigen::Index w(int k) const { return static_cast<Eigen::Index>(k) * 2 * d.m * d.l; }
  Eigen::Index w_col(int k, int l) const { return w(k) + static_cast<Eigen::Index>(l) * 2 * d.m; }
  Eigen::Index v(int k, int j) const {
    return static_cast<Eigen::Index>(d.k) * 2 * d.m * d.l +
           static_cast<Eigen::Index>(k * d.j + j) * hermitian_param_count(d.m);
  }
  Eigen::Index size() const { return v(d.k - 1, d.j - 1) + hermitian_param_count(d.m); }
};

struct WsrLayout {
  Dims d;
  Eigen::Index w_col(int k, int l) const {
    return static_cast<Eigen::Index>(k) * 2 * d.m * d.l + static_cast<Eigen::Index>(l) * 2 * d.m;
  }
  Eigen::Index v(int k, int j) const {
    return static_cast<Eigen::Index>(d.k) * 2 * d.m * d.l + static_cast<Eigen::Index>(k * d.j + j) * 2 * d.m;
  }
  Eigen::Index size() const { return v(d.k - 1, d.j - 1) + 2 * d.m; }
};

QuadraticTerm make_term(Eigen::Index offset, Eigen::MatrixXd rows, Eigen::VectorXd shift = {}) {
  QuadraticTerm t;
  t.offset = offset;
  if (shift.size() == 0) shift = Eigen::VectorXd::Zero(rows.rows());
  t.rows = std::move(rows);
  t.shift = std::move(shift);
  return t;
}

// Interleaved realification of the unit vector e_l of length L.
Eigen::VectorXd unit_shift(int l, int len, double scale) {
  Eigen::VectorXd s = Eigen::VectorXd::Zero(2 * len);
  s(2 * l) = -scale;
  return s;
}

CMatrix hermitian_sqrt(const CMatrix& q) {
  Eigen::SelfAdjointEigenSolver<CMatrix> es(0.5 * (q + q.adjoint()));
  const Eigen::VectorXd ev = es.eigenvalues().cwiseMax(0.0).cwiseSqrt();
  return es.eigenvectors() * ev.asDiagonal() * es.eigenvectors().adjoint();
}

double sinr_interference(int a, int b, const CVector& u, const std::vector<CMatrix>& comp,
                         const std::vector<std::vector<CMatrix>>& sense, const ChannelSet& ch,
                         double noise_power, InterferenceModel model) {
  double total = noise_power * u.squaredNorm();
  for (int i = 0; i < ch.n_ues(); ++i) {
    const Eigen::RowVectorXcd g = u.adjoint() * ch.matrices[i];
    total += (g * comp[i]).squaredNorm();
    for (int m = 0; m < static_cast<int>(sense[i].size()); ++m) {
      if (interferes(i, m, a, b, model)) total += (g * sense[i][m] * g.adjoint()).value().real();
    }
  }
  return total;
}

double sinr_signal(int a, int b, const CVector& u, const std::vector<std::vector<CMatrix>>& sense,
                   const ChannelSet& ch) {
  const Eigen::RowVectorXcd g = u.adjoint() * ch.matrices[a];
  return (g * sense[a][b] * g.adjoint()).value().real();
}

}  // namespace

const char* to_string(SubproblemStatus s) {
  switch (s) {
    case SubproblemStatus::optimal:
      return "optimal";
    case SubproblemStatus::infeasible:
      return "infeasible";
    case SubproblemStatus::max_iterations:
      return "max_iterations";
    case SubproblemStatus::numeric_failure:
      return "numeric_failure";
  }
  return "unknown";
}

double KktResiduals::max() const {
  return std::max({stationarity, complementary_slackness, psd_complementarity, primal_violation,
                   dual_violation, duality_gap});
}

void CemSubproblem::validate() const {
  check_receivers(receivers, channels);
  const Dims d = dims_of(receivers, channels);
  check_budgets(power_budget, d.k);
  if (!(noise_power > 0.0)) throw ContractError("noise power must be positive");
  if (sinr_targets.rows() != d.k || sinr_targets.cols() != d.j) throw ContractError("SINR targets must be K x J");
  for (Eigen::Index i = 0; i < sinr_targets.size(); ++i) {
    const double g = sinr_targets.data()[i];
    if (!(g >= 0.0) || !std::isfinite(g)) throw ContractError("SINR targets must be finite and nonnegative");
  }
}

void WsrSubproblem::validate() const {
  check_receivers(receivers, channels);
  const Dims d = dims_of(receivers, channels);
  check_budgets(power_budget, d.k);
  if (!(noise_power > 0.0)) throw ContractError("noise power must be positive");
  if (weights.rows() != d.k || weights.cols() != d.j) throw ContractError("weights must be K x J");
  if (priorities.rows() != d.k || priorities.cols() != d.j) throw ContractError("priorities must be K x J");
  if (!(weights.array() > 0.0).all() || !weights.allFinite()) throw ContractError("weights must be positive");
  if (!(priorities.array() > 0.0).all() || !priorities.allFinite()) {
    throw ContractError("priorities must be positive");
  }
  if (!(mse_budget >= 0.0)) throw ContractError("MSE budget must be nonnegative");
}

double cem_objective(const CemSubproblem& p, const std::vector<CMatrix>& comp,
                     const std::vector<std::vector<CMatrix>>& sense) {
  const CMatrix zh = p.receivers.comp.adjoint();
  const auto l = p.receivers.comp.cols();
  double obj = 0.0;
  for (int k = 0; k < p.channels.n_ues(); ++k) {
    const CMatrix g = zh * p.channels.matrices[k];
    obj += (g * comp[k] - CMatrix::Identity(l, l)).squaredNorm();
    for (const auto& v : sense[k]) obj += (g * v * g.adjoint()).trace().real();
  }
  return obj;
}

double wsr_objective(const WsrSubproblem& p, const TransmitBeams& tx) {
  double obj = 0.0;
  for (int k = 0; k < p.channels.n_ues(); ++k) {
    for (int j = 0; j < static_cast<int>(tx.sense[k].size()); ++j) {
      obj += p.priorities(k, j) * p.weights(k, j) *
             per_stream_mse(k, j, p.receivers, tx, p.channels, p.noise_power);
    }
  }
  return obj;
}

SubproblemSolution solve_cem_subproblem(const CemSubproblem& p, double tol) {
  p.validate();
  if (!(tol > 0.0) || tol > 1e-3) throw ContractError("subproblem tolerance must lie in (0, 1e-3]");
  const Dims d = dims_of(p.receivers, p.channels);
  const CemLayout lay{d};
  const auto& hs = p.channels.matrices;
  const CMatrix zh = p.receivers.comp.adjoint();
  const double s2 = p.noise_power;

  SubproblemSolution sol;
  sol.rate_duals = Eigen::MatrixXd::Zero(d.k, d.j);

  ConvexProgram prog;
  prog.n_vars = lay.size();
  prog.objective.linear = Eigen::VectorXd::Zero(prog.n_vars);
  std::vector<CMatrix> a_mats(static_cast<std::size_t>(d.k));
  for (int k = 0; k < d.k; ++k) {
    const double pk = p.power_budget[k];
    const CMatrix g = zh * hs[k];
    a_mats[k] = g.adjoint() * g;
    const Eigen::MatrixXd rg = std::sqrt(pk) * realify(g);
    for (int l = 0; l < d.l; ++l) prog.objective.terms.push_back(make_term(lay.w_col(k, l), rg, unit_shift(l, d.l, 1.0)));
    const Eigen::VectorXd ca = pk * hermitian_linear_coeffs(a_mats[k]);
    for (int j = 0; j < d.j; ++j) prog.objective.linear.segment(lay.v(k, j), ca.size()) += ca;
  }

  // Power: ||W~_k||^2 + sum_j tr V~_kj <= 1.
  const int w_len = 2 * d.m * d.l;
  for (int k = 0; k < d.k; ++k) {
    QuadraticFunction f;
    f.terms.push_back(make_term(lay.w(k), Eigen::MatrixXd::Identity(w_len, w_len)));
    f.linear = Eigen::VectorXd::Zero(prog.n_vars);
    for (int j = 0; j < d.j; ++j) f.linear.segment(lay.v(k, j), d.m).setOnes();
    f.constant = -1.0;
    prog.constraints.push_back(std::move(f));
  }

  // SINR: gamma (interference + noise) - signal <= 0, normalized per stream.
  struct RateRow {
    int k, j;
    double dual_scale;
  };
  std::vector<RateRow> rate_rows;
  for (int a = 0; a < d.k; ++a) {
    for (int b = 0; b < d.j; ++b) {
      const double gamma = p.sinr_targets(a, b);
      if (gamma == 0.0) continue;
      const CVector& u = p.receivers.sense[a][b];
      const double un = u.norm();
      if (un == 0.0) {
        sol.status = SubproblemStatus::infeasible;
        std::ostringstream os;
        os << "sensing receiver (" << a << ", " << b << ") is zero while its SINR target is " << gamma;
        sol.certificate = os.str();
        return sol;
      }
      const CVector uh = u / un;
      std::vector<Eigen::RowVectorXcd> g(static_cast<std::size_t>(d.k));
      for (int i = 0; i < d.k; ++i) g[i] = uh.adjoint() * hs[i];
      const double norm = gamma * s2 + p.power_budget[a] * g[a].squaredNorm();
      QuadraticFunction f;
      f.linear = Eigen::VectorXd::Zero(prog.n_vars);
      for (int i = 0; i < d.k; ++i) {
        const double pi = p.power_budget[i];
        const Eigen::MatrixXd rg = std::sqrt(gamma * pi / norm) * realify(g[i]);
        for (int l = 0; l < d.l; ++l) f.terms.push_back(make_term(lay.w_col(i, l), rg));
        const CMatrix bi = g[i].adjoint() * g[i];
        const Eigen::VectorXd cb = hermitian_linear_coeffs(bi);
        for (int m = 0; m < d.j; ++m) {
          if (interferes(i, m, a, b, p.model)) f.linear.segment(lay.v(i, m), cb.size()) += (gamma * pi / norm) * cb;
        }
        if (i == a) f.linear.segment(lay.v(a, b), cb.size()) -= (pi / norm) * cb;
      }
      f.constant = gamma * s2 / norm;
      prog.constraints.push_back(std::move(f));
      rate_rows.push_back({a, b, gamma / (un * un * norm)});
    }
  }

  for (int k = 0; k < d.k; ++k) {
    for (int j = 0; j < d.j; ++j) {
      HermitianBlock blk;
      blk.offset = lay.v(k, j);
      blk.dim = d.m;
      prog.blocks.push_back(blk);
    }
  }

  Eigen::VectorXd x0 = Eigen::VectorXd::Zero(prog.n_vars);
  const double diag0 = 1.0 / (2.0 * d.j * d.m);
  for (int k = 0; k < d.k; ++k) {
    for (int j = 0; j < d.j; ++j) x0.segment(lay.v(k, j), d.m).setConstant(diag0);
  }

  const ProgramSolution ps = solve_convex_program(prog, x0, tol);
  sol.status = map_status(ps.status);
  sol.certificate = ps.certificate;
  sol.newton_steps = ps.newton_steps;
  sol.relaxation = ps.relaxation;
  sol.duality_gap = ps.duality_gap;
  if (ps.x.size() != prog.n_vars) return sol;

  sol.comp_beams.resize(d.k);
  sol.sense_matrices.assign(d.k, std::vector<CMatrix>(d.j));
  sol.psd_duals.assign(d.k, std::vector<CMatrix>(d.j));
  sol.power_duals.assign(d.k, 0.0);
  for (int k = 0; k < d.k; ++k) {
    const double pk = p.power_budget[k];
    CMatrix w(d.m, d.l);
    for (int l = 0; l < d.l; ++l) w.col(l) = std::sqrt(pk) * unpack(ps.x, lay.w_col(k, l), d.m);
    sol.comp_beams[k] = w;
    for (int j = 0; j < d.j; ++j) {
      sol.sense_matrices[k][j] =
          pk * hermitian_from_params(std::span<const double>(ps.x.data() + lay.v(k, j),
                                                             static_cast<std::size_t>(hermitian_param_count(d.m))),
                                     d.m);
    }
  }
  if (ps.multipliers.size() == static_cast<Eigen::Index>(d.k + rate_rows.size())) {
    for (int k = 0; k < d.k; ++k) sol.power_duals[k] = ps.multipliers(k) / p.power_budget[k];
    for (std::size_t r = 0; r < rate_rows.size(); ++r) {
      sol.rate_duals(rate_rows[r].k, rate_rows[r].j) =
          ps.multipliers(d.k + static_cast<Eigen::Index>(r)) * rate_rows[r].dual_scale;
    }
  }
  if (ps.block_duals.size() == static_cast<std::size_t>(d.k * d.j)) {
    for (int k = 0; k < d.k; ++k) {
      for (int j = 0; j < d.j; ++j) sol.psd_duals[k][j] = ps.block_duals[k * d.j + j] / p.power_budget[k];
    }
  }
  sol.objective = cem_objective(p, sol.comp_beams, sol.sense_matrices);
  sol.kkt = kkt_residuals(sol, p);
  return sol;
}

SubproblemSolution solve_wsr_subproblem(const WsrSubproblem& p, double tol) {
  p.validate();
  if (!(tol > 0.0) || tol > 1e-3) throw ContractError("subproblem tolerance must lie in (0, 1e-3]");
  const Dims d = dims_of(p.receivers, p.channels);
  const WsrLayout lay{d};
  const auto& hs = p.channels.matrices;
  const CMatrix& z = p.receivers.comp;
  const double s2 = p.noise_power;

  ConvexProgram prog;
  prog.n_vars = lay.size();
  prog.objective.linear = Eigen::VectorXd::Zero(prog.n_vars);

  // Weighted receive covariance U = sum_ab theta beta u u^H.
  CMatrix u_sum = CMatrix::Zero(d.n, d.n);
  double constant = 0.0;
  for (int a = 0; a < d.k; ++a) {
    for (int b = 0; b < d.j; ++b) {
      const double c = p.priorities(a, b) * p.weights(a, b);
      const CVector& u = p.receivers.sense[a][b];
      u_sum.noalias() += c * u * u.adjoint();
      constant += c * (1.0 + s2 * u.squaredNorm());
    }
  }
  prog.objective.constant = constant;
  for (int i = 0; i < d.k; ++i) {
    const double sp = std::sqrt(p.power_budget[i]);
    const Eigen::MatrixXd rs = sp * realify(hermitian_sqrt(hs[i].adjoint() * u_sum * hs[i]));
    for (int l = 0; l < d.l; ++l) prog.objective.terms.push_back(make_term(lay.w_col(i, l), rs));
    for (int m = 0; m < d.j; ++m) {
      prog.objective.terms.push_back(make_term(lay.v(i, m), rs));
      const double c = p.priorities(i, m) * p.weights(i, m);
      const Eigen::RowVectorXcd g = p.receivers.sense[i][m].adjoint() * hs[i];
      for (int e = 0; e < d.m; ++e) {
        prog.objective.linear(lay.v(i, m) + 2 * e) = -2.0 * c * sp * g(e).real();
        prog.objective.linear(lay.v(i, m) + 2 * e + 1) = 2.0 * c * sp * g(e).imag();
      }
    }
  }

  for (int k = 0; k < d.k; ++k) {
    QuadraticFunction f;
    const int w_len = 2 * d.m * d.l;
    f.terms.push_back(make_term(lay.w_col(k, 0), Eigen::MatrixXd::Identity(w_len, w_len)));
    for (int j = 0; j < d.j; ++j) f.terms.push_back(make_term(lay.v(k, j), Eigen::MatrixXd::Identity(2 * d.m, 2 * d.m)));
    f.constant = -1.0;
    prog.constraints.push_back(std::move(f));
  }

  const bool has_budget = std::isfinite(p.mse_budget);
  double mse_norm = 1.0;
  if (has_budget) {
    const double floor = s2 * z.squaredNorm();
    mse_norm = std::max(p.mse_budget, floor);
    if (!(mse_norm > 0.0)) mse_norm = 1.0;
    const double sc = 1.0 / std::sqrt(mse_norm);
    QuadraticFunction f;
    for (int k = 0; k < d.k; ++k) {
      const Eigen::MatrixXd rg = sc * std::sqrt(p.power_budget[k]) * realify(z.adjoint() * hs[k]);
      for (int l = 0; l < d.l; ++l) f.terms.push_back(make_term(lay.w_col(k, l), rg, unit_shift(l, d.l, sc)));
      for (int j = 0; j < d.j; ++j) f.terms.push_back(make_term(lay.v(k, j), rg));
    }
    f.constant = (floor - p.mse_budget) / mse_norm;
    prog.constraints.push_back(std::move(f));
  }

  const Eigen::VectorXd x0 = Eigen::VectorXd::Zero(prog.n_vars);
  const ProgramSolution ps = solve_convex_program(prog, x0, tol);

  SubproblemSolution sol;
  sol.status = map_status(ps.status);
  sol.certificate = ps.certificate;
  sol.newton_steps = ps.newton_steps;
  sol.relaxation = ps.relaxation;
  sol.duality_gap = ps.duality_gap;
  sol.rate_duals = Eigen::MatrixXd::Zero(d.k, d.j);
  if (ps.x.size() != prog.n_vars) return sol;

  sol.comp_beams.resize(d.k);
  sol.sense_beams.assign(d.k, std::vector<CVector>(d.j));
  sol.power_duals.assign(d.k, 0.0);
  for (int k = 0; k < d.k; ++k) {
    const double sp = std::sqrt(p.power_budget[k]);
    CMatrix w(d.m, d.l);
    for (int l = 0; l < d.l; ++l) w.col(l) = sp * unpack(ps.x, lay.w_col(k, l), d.m);
    sol.comp_beams[k] = w;
    for (int j = 0; j < d.j; ++j) sol.sense_beams[k][j] = sp * unpack(ps.x, lay.v(k, j), d.m);
  }
  if (ps.multipliers.size() == static_cast<Eigen::Index>(prog.constraints.size())) {
    for (int k = 0; k < d.k; ++k) sol.power_duals[k] = ps.multipliers(k) / p.power_budget[k];
    if (has_budget) sol.mse_dual = ps.multipliers(d.k) / mse_norm;
  }
  TransmitBeams tx{sol.comp_beams, sol.sense_beams};
  sol.objective = wsr_objective(p, tx);
  sol.kkt = kkt_residuals(sol, p);
  return sol;
}

RankOneResult recover_rank_one(const CMatrix& v, double tol, double scale) {
  RankOneResult out;
  const auto dim = v.rows();
  out.v = CVector::Zero(dim);
  if (dim == 0) {
    out.degenerate = true;
    return out;
  }
  Eigen::SelfAdjointEigenSolver<CMatrix> es(0.5 * (v + v.adjoint()));
  if (es.info() != Eigen::Success) throw NumericError("eigendecomposition failed");
  const double l1 = es.eigenvalues()(dim - 1);
  const double l2 = dim > 1 ? es.eigenvalues()(dim - 2) : 0.0;
  if (!(l1 > tol * scale)) {
    out.degenerate = true;
    return out;
  }
  CVector xi = es.eigenvectors().col(dim - 1);
  for (Eigen::Index i = 0; i < dim; ++i) {
    const double mag = std::abs(xi(i));
    if (mag > 1e-9) {
      xi *= std::conj(xi(i)) / mag;
      xi(i) = cplx(xi(i).real(), 0.0);
      break;
    }
  }
  out.v = std::sqrt(l1) * xi;
  out.rank_gap = std::max(l2, 0.0) / l1;
  return out;
}

KktResiduals kkt_residuals(const SubproblemSolution& sol, const CemSubproblem& p) {
  const Dims d = dims_of(p.receivers, p.channels);
  const auto& hs = p.channels.matrices;
  const CMatrix& z = p.receivers.comp;
  const double s2 = p.noise_power;
  KktResiduals r;
  if (sol.comp_beams.size() != static_cast<std::size_t>(d.k) ||
      sol.sense_matrices.size() != static_cast<std::size_t>(d.k)) {
    throw ContractError("kkt_residuals: solution does not carry CEM beams");
  }
  const auto dual_at = [&](int k, int j) {
    return sol.rate_duals.size() ? sol.rate_duals(k, j) : 0.0;
  };
  const auto mu_at = [&](int k) { return sol.power_duals.empty() ? 0.0 : sol.power_duals[k]; };
  const auto psi_at = [&](int k, int j) {
    return sol.psd_duals.empty() ? CMatrix(CMatrix::Zero(d.m, d.m)) : sol.psd_duals[k][j];
  };

  // Per-stream receive projections B_ab,i = H_i^H u_ab u_ab^H H_i.
  double stat2 = 0.0;
  double obj2 = 0.0;
  std::vector<CMatrix> grad_w(static_cast<std::size_t>(d.k));
  std::vector<std::vector<CMatrix>> grad_v(d.k, std::vector<CMatrix>(d.j));
  for (int k = 0; k < d.k; ++k) {
    const CMatrix g = z.adjoint() * hs[k];
    const double pk = p.power_budget[k];
    const CMatrix obj_w = g.adjoint() * (g * sol.comp_beams[k] - CMatrix::Identity(d.l, d.l));
    const CMatrix obj_v = g.adjoint() * g;
    obj2 += (2.0 * std::sqrt(pk) * obj_w).squaredNorm() + d.j * (pk * obj_v).squaredNorm();
    grad_w[k] = obj_w + mu_at(k) * sol.comp_beams[k];
    for (int j = 0; j < d.j; ++j) grad_v[k][j] = obj_v + mu_at(k) * CMatrix::Identity(d.m, d.m) - psi_at(k, j);
  }
  for (int a = 0; a < d.k; ++a) {
    for (int b = 0; b < d.j; ++b) {
      const double gamma = p.sinr_targets(a, b);
      const double lam = dual_at(a, b);
      if (gamma == 0.0 || lam == 0.0) continue;
      const CVector& u = p.receivers.sense[a][b];
      for (int i = 0; i < d.k; ++i) {
        const CVector hu = hs[i].adjoint() * u;
        const CMatrix bi = hu * hu.adjoint();
        grad_w[i] += lam * bi * sol.comp_beams[i];
        for (int m = 0; m < d.j; ++m) {
          if (interferes(i, m, a, b, p.model)) grad_v[i][m] += lam * bi;
        }
        if (i == a) grad_v[a][b] -= (lam / gamma) * bi;
      }
    }
  }
  for (int k = 0; k < d.k; ++k) {
    const double pk = p.power_budget[k];
    stat2 += (2.0 * std::sqrt(pk) * grad_w[k]).squaredNorm();
    for (int j = 0; j < d.j; ++j) stat2 += (pk * grad_v[k][j]).squaredNorm();
  }
  r.stationarity = std::sqrt(stat2) / std::max(1.0, std::sqrt(obj2));

  double gap = 0.0;
  for (int k = 0; k < d.k; ++k) {
    const double pk = p.power_budget[k];
    double used = sol.comp_beams[k].squaredNorm();
    for (int j = 0; j < d.j; ++j) used += sol.sense_matrices[k][j].trace().real();
    const double g = used - pk;
    r.primal_violation = std::max(r.primal_violation, g / pk);
    r.complementary_slackness = std::max(r.complementary_slackness, std::abs(mu_at(k) * g));
    r.dual_violation = std::max(r.dual_violation, -mu_at(k));
    gap -= mu_at(k) * g;
    for (int j = 0; j < d.j; ++j) {
      const CMatrix& v = sol.sense_matrices[k][j];
      const CMatrix psi = psi_at(k, j);
      r.primal_violation = std::max(r.primal_violation, -min_eigenvalue(v) / pk);
      r.dual_violation = std::max(r.dual_violation, -min_eigenvalue(psi) * pk);
      r.psd_complementarity = std::max(r.psd_complementarity, (psi * v).norm());
      gap += (psi * v).trace().real();
    }
  }
  for (int a = 0; a < d.k; ++a) {
    for (int b = 0; b < d.j; ++b) {
      const double gamma = p.sinr_targets(a, b);
      if (gamma == 0.0) continue;
      const CVector& u = p.receivers.sense[a][b];
      const double interf = sinr_interference(a, b, u, sol.comp_beams, sol.sense_matrices, p.channels, s2, p.model);
      const double signal = sinr_signal(a, b, u, sol.sense_matrices, p.channels);
      const double g = interf - signal / gamma;
      const double lam = dual_at(a, b);
      const double norm = std::max(interf, s2 * u.squaredNorm());
      if (norm > 0.0) r.primal_violation = std::max(r.primal_violation, g / norm);
      r.complementary_slackness = std::max(r.complementary_slackness, std::abs(lam * g));
      r.dual_violation = std::max(r.dual_violation, -lam);
      gap -= lam * g;
    }
  }
  r.primal_violation = std::max(r.primal_violation, 0.0);
  r.duality_gap = std::abs(gap);
  return r;
}

KktResiduals kkt_residuals(const SubproblemSolution& sol, const WsrSubproblem& p) {
  const Dims d = dims_of(p.receivers, p.channels);
  const auto& hs = p.channels.matrices;
  const CMatrix& z = p.receivers.comp;
  KktResiduals r;
  if (sol.comp_beams.size() != static_cast<std::size_t>(d.k) ||
      sol.sense_beams.size() != static_cast<std::size_t>(d.k)) {
    throw ContractError("kkt_residuals: solution does not carry WSR beams");
  }
  const auto mu_at = [&](int k) { return sol.power_duals.empty() ? 0.0 : sol.power_duals[k]; };
  const double eta = std::isfinite(p.mse_budget) ? sol.mse_dual : 0.0;

  CMatrix u_sum = CMatrix::Zero(d.n, d.n);
  for (int a = 0; a < d.k; ++a) {
    for (int b = 0; b < d.j; ++b) {
      const CVector& u = p.receivers.sense[a][b];
      u_sum.noalias() += p.priorities(a, b) * p.weights(a, b) * u * u.adjoint();
    }
  }
  double stat2 = 0.0;
  double obj2 = 0.0;
  for (int k = 0; k < d.k; ++k) {
    const double pk = p.power_budget[k];
    const CMatrix q = hs[k].adjoint() * u_sum * hs[k];
    const CMatrix g = z.adjoint() * hs[k];
    const CMatrix& w = sol.comp_beams[k];
    const CMatrix gw = q * w + mu_at(k) * w + eta * g.adjoint() * (g * w - CMatrix::Identity(d.l, d.l));
    stat2 += (2.0 * std::sqrt(pk) * gw).squaredNorm();
    obj2 += (2.0 * std::sqrt(pk) * (q * w)).squaredNorm();
    for (int j = 0; j < d.j; ++j) {
      const CVector& v = sol.sense_beams[k][j];
      const double c = p.priorities(k, j) * p.weights(k, j);
      const CVector obj_v = q * v - c * (hs[k].adjoint() * p.receivers.sense[k][j]);
      const CVector gv = obj_v + mu_at(k) * v + eta * g.adjoint() * (g * v);
      stat2 += (2.0 * std::sqrt(pk) * gv).squaredNorm();
      obj2 += (2.0 * std::sqrt(pk) * obj_v).squaredNorm();
    }
  }
  r.stationarity = std::sqrt(stat2) / std::max(1.0, std::sqrt(obj2));

  double gap = 0.0;
  TransmitBeams tx{sol.comp_beams, sol.sense_beams};
  for (int k = 0; k < d.k; ++k) {
    const double pk = p.power_budget[k];
    const double g = tx.power(k) - pk;
    r.primal_violation = std::max(r.primal_violation, g / pk);
    r.complementary_slackness = std::max(r.complementary_slackness, std::abs(mu_at(k) * g));
    r.dual_violation = std::max(r.dual_violation, -mu_at(k));
    gap -= mu_at(k) * g;
  }
  if (std::isfinite(p.mse_budget)) {
    const double g = aircomp_mse(p.receivers, tx, p.channels, p.noise_power) - p.mse_budget;
    const double norm = std::max(p.mse_budget, p.noise_power * z.squaredNorm());
    if (norm > 0.0) r.primal_violation = std::max(r.primal_violation, g / norm);
    r.complementary_slackness = std::max(r.complementary_slackness, std::abs(eta * g));
    r.dual_violation = std::max(r.dual_violation, -eta);
    gap -= eta * g;
  }
  r.primal_violation = std::max(r.primal_violation, 0.0);
  r.duality_gap = std::abs(gap);
  return r;
}

namespace {

using nlohmann::json;

json to_json(const CMatrix& m) {
  json re = json::array();
  json im = json::array();
  for (Eigen::Index c = 0; c < m.cols(); ++c) {
    for (Eigen::Index r = 0; r < m.rows(); ++r) {
      re.push_back(m(r, c).real());
      im.push_back(m(r, c).imag());
    }
  }
  return json{{"rows", m.rows()}, {"cols", m.cols()}, {"re", re}, {"im", im}};
}

json to_json(const Eigen::MatrixXd& m) {
  json rows = json::array();
  for (Eigen::Index r = 0; r < m.rows(); ++r) {
    json row = json::array();
    for (Eigen::Index c = 0; c < m.cols(); ++c) row.push_back(m(r, c));
    rows.push_back(row);
  }
  return rows;
}

template <typename T>
json nested(const std::vector<std::vector<T>>& v) {
  json out = json::array();
  for (const auto& row : v) {
    json r = json::array();
    for (const auto& x : row) r.push_back(to_json(CMatrix(x)));
    out.push_back(r);
  }
  return out;
}

json common(const ReceiveBeams& rx, const ChannelSet& ch, double noise_power,
            const std::vector<double>& budget) {
  json channels = json::array();
  for (const auto& h : ch.matrices) channels.push_back(to_json(h));
  return json{{"noise_power", noise_power},
              {"power_budget", budget},
              {"channels", channels},
              {"receivers", {{"comp", to_json(rx.comp)}, {"sense", nested(rx.sense)}}}};
}

json solution_json(const SubproblemSolution& sol) {
  json comp = json::array();
  for (const auto& w : sol.comp_beams) comp.push_back(to_json(w));
  json out{{"status", to_string(sol.status)},
           {"objective", sol.objective},
           {"duality_gap", sol.duality_gap},
           {"relaxation", sol.relaxation},
           {"newton_steps", sol.newton_steps},
           {"certificate", sol.certificate},
           {"comp_beams", comp},
           {"rate_duals", to_json(sol.rate_duals)},
           {"power_duals", sol.power_duals},
           {"mse_dual", sol.mse_dual},
           {"kkt",
            {{"stationarity", sol.kkt.stationarity},
             {"complementary_slackness", sol.kkt.complementary_slackness},
             {"psd_complementarity", sol.kkt.psd_complementarity},
             {"primal_violation", sol.kkt.primal_violation},
             {"dual_violation", sol.kkt.dual_violation},
             {"duality_gap", sol.kkt.duality_gap}}}};
  if (!sol.sense_matrices.empty()) out["sense_matrices"] = nested(sol.sense_matrices);
  if (!sol.psd_duals.empty()) out["psd_duals"] = nested(sol.psd_duals);
  if (!sol.sense_beams.empty()) out["sense_beams"] = nested(sol.sense_beams);
  return out;
}

void write_json(const std::string& path, const json& doc) {
  std::ofstream os(path);
  if (!os) throw std::runtime_error("cannot open debug dump " + path);
  os << doc.dump(2) << '\n';
  if (!os) throw std::runtime_error("failed writing debug dump " + path);
}

}  // namespace

void write_debug_dump(const std::string& path, const CemSubproblem& p, const SubproblemSolution& sol) {
  json doc = common(p.receivers, p.channels, p.noise_power, p.power_budget);
  doc["kind"] = "cem";
  doc["sinr_targets"] = to_json(p.sinr_targets);
  doc["interference_model"] =
      p.model == InterferenceModel::all_cross_streams ? "all_cross_streams" : "paper_literal";
  doc["solution"] = solution_json(sol);
  write_json(path, doc);
}

void write_debug_dump(const std::string& path, const WsrSubproblem& p, const SubproblemSolution& sol) {
  json doc = common(p.receivers, p.channels, p.noise_power, p.power_budget);
  doc["kind"] = "wsr";
  doc["weights"] = to_json(p.weights);
  doc["priorities"] = to_json(p.priorities);
  doc["mse_budget"] = std::isfinite(p.mse_budget) ? json(p.mse_budget) : json("inf");
  doc["solution"] = solution_json(sol);
  write_json(path, doc);
}

}  // namespace scc
