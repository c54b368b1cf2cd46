#pragma once

#include <string>
#include <vector>

#include <Eigen/Dense>

#include "scc/system_model.hpp"

namespace scc {

inline constexpr double kDefaultSubproblemTol = 1e-7;
inline constexpr double kRankOneThreshold = 1e-5;

/// Transmit step of the computation-error loop: receivers fixed, sensing
/// beams lifted to V_kj = v v^H with the rank constraint dropped.
struct CemSubproblem {
  ReceiveBeams receivers;
  ChannelSet channels;
  double noise_power = 0.0;
  Eigen::MatrixXd sinr_targets;  // K x J, gamma = 2^r - 1; zero drops the constraint
  std::vector<double> power_budget;
  InterferenceModel model = InterferenceModel::all_cross_streams;

  void validate() const;
};

/// Transmit step of the weighted-MMSE loop with receivers and weights fixed.
struct WsrSubproblem {
  ReceiveBeams receivers;
  ChannelSet channels;
  double noise_power = 0.0;
  Eigen::MatrixXd weights;     // beta, K x J
  Eigen::MatrixXd priorities;  // theta, K x J
  std::vector<double> power_budget;
  double mse_budget = std::numeric_limits<double>::infinity();

  void validate() const;
};

enum class SubproblemStatus { optimal, infeasible, max_iterations, numeric_failure };

const char* to_string(SubproblemStatus s);

/// First-order optimality certificate. Gradient and primal quantities are
/// measured in budget-normalized coordinates (W / sqrt(P_k), V / P_k), which
/// makes every field dimensionless.
struct KktResiduals {
  double stationarity = 0.0;  ///< Lagrangian gradient norm over max(1, objective gradient norm)
  double complementary_slackness = 0.0;  ///< max |lambda g| over scalar constraints
  double psd_complementarity = 0.0;    ///< max ||Psi V||_F over sensing blocks
  double primal_violation = 0.0;       ///< largest relative constraint violation
  double dual_violation = 0.0;         ///< largest negative multiplier / Psi eigenvalue
  double duality_gap = 0.0;            ///< -sum lambda g + sum tr(Psi V)

  double max() const;
};

struct SubproblemSolution {
  SubproblemStatus status = SubproblemStatus::numeric_failure;
  std::vector<CMatrix> comp_beams;                   // W_k
  std::vector<std::vector<CMatrix>> sense_matrices;  // V_kj (CEM)
  std::vector<std::vector<CVector>> sense_beams;     // v_kj (WSR)
  Eigen::MatrixXd rate_duals;                        // lambda_kj, zero for dropped constraints
  std::vector<double> power_duals;                   // mu_k
  std::vector<std::vector<CMatrix>> psd_duals;       // Psi_kj (CEM)
  double mse_dual = 0.0;                             // WSR budget multiplier
  double objective = 0.0;
  double duality_gap = 0.0;
  double relaxation = 0.0;
  int newton_steps = 0;
  std::string certificate;
  KktResiduals kkt;
};

/// Minimizes sum_k ||Z^H H_k W_k - I||_F^2 + sum_kj tr(Z^H H_k V_kj H_k^H Z)
/// subject to the lifted SINR constraints, per-UE power and V_kj >= 0. The
/// constant s2 ||Z||_F^2 is left out of the objective.
SubproblemSolution solve_cem_subproblem(const CemSubproblem& p, double tol = kDefaultSubproblemTol);

/// Minimizes sum_kj theta_kj beta_kj MSE_kj(W, v) subject to per-UE power and
/// the AirComp MSE budget (skipped when infinite). The objective keeps the
/// +1 and s2 ||u||^2 parts of each MSE.
SubproblemSolution solve_wsr_subproblem(const WsrSubproblem& p, double tol = kDefaultSubproblemTol);

struct RankOneResult {
  CVector v;
  double rank_gap = 0.0;  ///< lambda_2 / lambda_1
  bool degenerate = false;
};

/// Principal component sqrt(lambda_max) xi_max; the first entry with magnitude
/// above 1e-9 is rotated to be real and positive. V is treated as zero when
/// lambda_max <= tol * scale.
RankOneResult recover_rank_one(const CMatrix& v, double tol = kDefaultSubproblemTol,
                               double scale = 1.0);

KktResiduals kkt_residuals(const SubproblemSolution& sol, const CemSubproblem& p);
KktResiduals kkt_residuals(const SubproblemSolution& sol, const WsrSubproblem& p);

/// Objective of the CEM subproblem at an arbitrary point.
double cem_objective(const CemSubproblem& p, const std::vector<CMatrix>& comp,
                     const std::vector<std::vector<CMatrix>>& sense);

/// Objective of the WSR subproblem at an arbitrary point.
double wsr_objective(const WsrSubproblem& p, const TransmitBeams& tx);

/// JSON dump of a subproblem and its solution (see docs/debug_dump.md).
void write_debug_dump(const std::string& path, const CemSubproblem& p, const SubproblemSolution& sol);
void write_debug_dump(const std::string& path, const WsrSubproblem& p, const SubproblemSolution& sol);

}  // namespace scc
