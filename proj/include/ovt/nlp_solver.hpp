#pragma once

#include <Eigen/Dense>
#include <functional>
#include <string>
#include <vector>

namespace ovt::nlp {

enum class RowKind { equality, inequality_ge };

/// Labels used by the problem assembler for counting contracts and tests.
enum class RowTag {
  defect_ego,
  defect_opp,
  cbf,
  cbf_coupled_eo,
  cbf_coupled_oe,
  terminal,
  other,
};

/// Accumulator for second-order row terms (global variable indices; the
/// solver symmetrizes).
class HessAccum {
 public:
  explicit HessAccum(Eigen::MatrixXd& H) : H_(H) {}
  void add(int i, int j, double v) {
    if (i >= j)
      H_(i, j) += v;
    else
      H_(j, i) += v;
  }

 private:
  Eigen::MatrixXd& H_;
};

/// One scalar constraint row with a fixed sparsity pattern. eval returns the
/// raw (unscaled) value and, when grad != nullptr, writes the raw gradient
/// aligned with `support`. The solver applies `scale` to both. The optional
/// hess callback accumulates w * d2c/dz2 (raw) so the Newton model carries
/// the constraint curvature the Gauss-Newton term drops.
struct Row {
  RowKind kind = RowKind::equality;
  RowTag tag = RowTag::other;
  double scale = 1.0;
  std::vector<int> support;
  std::function<double(const double* z, double* grad)> eval;
  std::function<void(const double* z, double w, HessAccum& acc)> hess;
};

/// Generic constrained NLP with a linear objective, variable bounds handled
/// by projection, and general rows handled by an augmented Lagrangian.
struct NlpProblem {
  int n = 0;
  Eigen::VectorXd cost_grad;  // objective = cost_grad . z
  Eigen::VectorXd lb, ub;
  Eigen::VectorXd var_scale;  // typical magnitudes; empty means all ones
  std::vector<Row> rows;
};

struct SolverOptions {
  double feas_tol = 1e-6;          // on scaled rows
  double opt_tol = 1e-6;           // projected-gradient norm
  int iter_limit = 500;            // combined inner-iteration budget
  double infeas_threshold = 1e-4;  // phase-1 violation above this => infeasible
  double rho0 = 10.0;
  double rho_max = 1e8;
};

enum class SolveStatus { solved, infeasible, iteration_limit };

std::string to_string(SolveStatus s);

struct SolveResult {
  SolveStatus status = SolveStatus::iteration_limit;
  double objective = 0.0;
  Eigen::VectorXd z;
  double max_violation = 0.0;  // scaled, at z
  double stationarity = 0.0;   // projected-gradient norm at z
  int iterations = 0;
  double wall_ms = 0.0;
  Eigen::VectorXd multipliers;  // per-row, for warm reuse
};

/// Solve with an initial (projected) primal guess; multipliers0 may be empty.
SolveResult solve_nlp(const NlpProblem& p, const Eigen::VectorXd& z0, const SolverOptions& opts,
                      const Eigen::VectorXd& multipliers0 = Eigen::VectorXd());

/// Minimize the squared scaled violation from z0 subject to bounds.
/// Returns the attained max scaled violation; z_out receives the minimizer.
double phase1_min_violation(const NlpProblem& p, const Eigen::VectorXd& z0,
                            const SolverOptions& opts, Eigen::VectorXd* z_out = nullptr,
                            int iter_budget = 250, double* pg_out = nullptr);

/// Max scaled violation of all rows at z.
double max_violation(const NlpProblem& p, const Eigen::VectorXd& z);

}  // namespace ovt::nlp
