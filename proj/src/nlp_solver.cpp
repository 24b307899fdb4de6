#include "ovt/nlp_solver.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <limits>

namespace ovt::nlp {

namespace {

using Eigen::MatrixXd;
using Eigen::VectorXd;

bool trace_enabled() {
  static const bool on = std::getenv("OVT_SOLVER_TRACE") != nullptr;
  return on;
}

/// Internal smooth reformulation: every inequality row c(z) >= 0 becomes the
/// equality c(z) - s = 0 with a bound s >= 0, so the augmented Lagrangian is
/// twice differentiable and the projection machinery absorbs the one-sided
/// geometry. Slacks live in scaled row units.
struct Augmented {
  const NlpProblem* orig = nullptr;
  int n = 0;        // original variables
  int m = 0;        // rows
  int n_aug = 0;    // variables + slacks
  std::vector<int> slack_of;  // per row, -1 for equalities
  VectorXd lb, ub, var_scale, cost_grad;

  explicit Augmented(const NlpProblem& p) : orig(&p) {
    n = p.n;
    m = static_cast<int>(p.rows.size());
    slack_of.assign(static_cast<std::size_t>(m), -1);
    int next = n;
    for (int k = 0; k < m; ++k)
      if (p.rows[static_cast<std::size_t>(k)].kind == RowKind::inequality_ge)
        slack_of[static_cast<std::size_t>(k)] = next++;
    n_aug = next;

    lb = VectorXd::Constant(n_aug, -std::numeric_limits<double>::infinity());
    ub = VectorXd::Constant(n_aug, std::numeric_limits<double>::infinity());
    lb.head(n) = p.lb;
    ub.head(n) = p.ub;
    for (int k = 0; k < m; ++k)
      if (slack_of[static_cast<std::size_t>(k)] >= 0) lb[slack_of[static_cast<std::size_t>(k)]] = 0.0;

    var_scale = VectorXd::Ones(n_aug);
    if (p.var_scale.size() == n) var_scale.head(n) = p.var_scale;

    cost_grad = VectorXd::Zero(n_aug);
    cost_grad.head(n) = p.cost_grad;
  }
};

VectorXd clamp_to_bounds(const VectorXd& lb, const VectorXd& ub, VectorXd z) {
  for (int i = 0; i < z.size(); ++i) z[i] = std::clamp(z[i], lb[i], ub[i]);
  return z;
}

/// Scaled row values/gradients of the original rows at the current point.
struct Workspace {
  const NlpProblem& p;
  VectorXd values;                         // scaled c_k(z)
  std::vector<std::vector<double>> grads;  // scaled gradients
  std::vector<double> raw;

  explicit Workspace(const NlpProblem& prob) : p(prob) {
    values.resize(static_cast<int>(p.rows.size()));
    grads.resize(p.rows.size());
    std::size_t max_nnz = 1;
    for (std::size_t k = 0; k < p.rows.size(); ++k) {
      grads[k].resize(p.rows[k].support.size());
      max_nnz = std::max(max_nnz, p.rows[k].support.size());
    }
    raw.resize(max_nnz);
  }

  void eval_values(const double* z) {
    for (std::size_t k = 0; k < p.rows.size(); ++k)
      values[static_cast<int>(k)] = p.rows[k].scale * p.rows[k].eval(z, nullptr);
  }

  void eval_all(const double* z) {
    for (std::size_t k = 0; k < p.rows.size(); ++k) {
      const Row& r = p.rows[k];
      const double v = r.eval(z, raw.data());
      values[static_cast<int>(k)] = r.scale * v;
      for (std::size_t j = 0; j < r.support.size(); ++j) grads[k][j] = r.scale * raw[j];
    }
  }

  /// Max violation in the original (pre-slack) semantics.
  double max_violation() const {
    double v = 0.0;
    for (int k = 0; k < values.size(); ++k) {
      const double c = values[k];
      const double vk = p.rows[static_cast<std::size_t>(k)].kind == RowKind::equality
                            ? std::abs(c)
                            : std::max(0.0, -c);
      v = std::max(v, vk);
    }
    return v;
  }
};

struct MeritTerms {
  double value = 0.0;
  VectorXd grad;                // over augmented variables
  std::vector<double> curv;     // per-row Gauss-Newton weight
  std::vector<double> weights;  // per-row scalar w (for second-order terms)
};

/// Inner minimizer: trust-region Newton with Steihaug-Toint CG over the
/// bound-projected merit. The model Hessian carries the Gauss-Newton penalty
/// term plus the rows' exact curvature; CG follows negative curvature to the
/// trust boundary, which is what makes the nonconvex augmented Lagrangian
/// tractable. Variables pinned at a bound with an outward gradient are
/// frozen out of the subproblem; trial points are projected back into the
/// box.
class InnerSolver {
 public:
  InnerSolver(const Augmented& aug, Workspace& ws) : aug_(aug), ws_(ws) {
    inv_s2_.resize(aug.n_aug);
    scale_.resize(aug.n_aug);
    for (int i = 0; i < aug.n_aug; ++i) {
      const double s = std::max(1e-8, aug.var_scale[i]);
      scale_[i] = s;
      inv_s2_[i] = 1.0 / (s * s);
    }
    H_.resize(aug.n_aug, aug.n_aug);
    free_mask_.resize(static_cast<std::size_t>(aug.n_aug));
  }

  template <class MeritFull, class MeritValue>
  int minimize(VectorXd& z, MeritFull&& merit_full, MeritValue&& merit_value, double tol,
               int budget, double* pg_out) {
    int used = 0;
    ws_.eval_all(z.data());
    MeritTerms m = merit_full(z);
    int ls_fails = 0;

    double pg = projected_gradient_norm(z, m.grad);
    while (used < budget && pg > tol) {
      ++used;
      if (trace_enabled() && used % 50 == 0)
        std::fprintf(stderr, "  [inner] it=%4d merit=%.8e pg=%.3e nu=%.1e soc=%d\n", used,
                     m.value, pg, nu_, soc_accepts_);

      assemble_hessian(z, m);
      mark_free(z, m.grad);
      VectorXd step = newton_step(m.grad);
      deactivate_blocked(z, step);
      if (m.grad.dot(step) >= 0.0) {
        for (int i = 0; i < aug_.n_aug; ++i) step[i] = -m.grad[i] / inv_s2_[i];
        deactivate_blocked(z, step);
      }

      VectorXd z_new = z;
      bool moved = false;

      // Full step, then one second-order correction: the quadratic-penalty
      // valley is narrow and curved, and the correction (fresh row values,
      // stale Jacobians, same factorization) keeps full-length steps inside
      // it where plain backtracking would crawl.
      {
        VectorXd zt = clamp_to_bounds(aug_.lb, aug_.ub, z + step);
        VectorXd dz = zt - z;
        if (dz.lpNorm<Eigen::Infinity>() >= 1e-16) {
          ws_.eval_values(zt.data());
          if (merit_value(zt) <= m.value + 1e-4 * m.grad.dot(dz)) {
            z_new = std::move(zt);
            moved = true;
            nu_ = std::max(1e-9, nu_ * 0.3);
          } else if (have_factor_) {
            const MeritTerms soc_terms = merit_full(zt);  // stale grads by design
            VectorXd soc = factor_solve(-soc_terms.grad);
            deactivate_blocked(z, soc);
            VectorXd zt2 = clamp_to_bounds(aug_.lb, aug_.ub, z + step + soc);
            if ((zt2 - z).lpNorm<Eigen::Infinity>() >= 1e-16) {
              ws_.eval_values(zt2.data());
              // Judge against the original step's Armijo bound.
              if (merit_value(zt2) <= m.value + 1e-4 * m.grad.dot(dz)) {
                z_new = std::move(zt2);
                moved = true;
                ++soc_accepts_;
                nu_ = std::max(1e-9, nu_ * 0.3);
              }
            }
          }
        }
      }
      if (!moved) moved = try_line_search(z, step, m, merit_value, &z_new);
      if (!moved) {
        ++ls_fails;
        // Re-damp and retry once, then fall back to the scaled gradient.
        nu_ = std::min(1e8, nu_ * 20.0);
        step = newton_step(m.grad);
        deactivate_blocked(z, step);
        moved = try_line_search(z, step, m, merit_value, &z_new);
        if (!moved) {
          for (int i = 0; i < aug_.n_aug; ++i) step[i] = -m.grad[i] / inv_s2_[i];
          deactivate_blocked(z, step);
          moved = try_line_search(z, step, m, merit_value, &z_new);
        }
        if (!moved) break;  // no descent available
      }

      const double prev_value = m.value;
      z = std::move(z_new);
      ws_.eval_all(z.data());
      m = merit_full(z);
      pg = projected_gradient_norm(z, m.grad);
      // Numerical floor: descent continues but achieves nothing measurable.
      if (prev_value - m.value <= 1e-15 * (1.0 + std::abs(prev_value)) && pg <= 100 * tol) break;
    }
    if (pg_out) *pg_out = pg;
    return used;
  }

 private:
  template <class MeritValue>
  bool try_line_search(const VectorXd& z, const VectorXd& step, const MeritTerms& m,
                       MeritValue&& merit_value, VectorXd* z_out) {
    double alpha = 1.0;
    for (int ls = 0; ls < 30; ++ls) {
      VectorXd zt = clamp_to_bounds(aug_.lb, aug_.ub, z + alpha * step);
      const VectorXd dz = zt - z;
      if (dz.lpNorm<Eigen::Infinity>() < 1e-16) return false;
      ws_.eval_values(zt.data());
      if (merit_value(zt) <= m.value + 1e-4 * m.grad.dot(dz)) {
        *z_out = std::move(zt);
        if (trace_enabled())
          std::fprintf(stderr, "    [ls] alpha=%.4f |dz|=%.3e gdz=%.3e\n", alpha,
                       dz.lpNorm<Eigen::Infinity>(), m.grad.dot(dz));
        if (alpha == 1.0) nu_ = std::max(1e-9, nu_ * 0.3);
        return true;
      }
      alpha *= 0.5;
    }
    return false;
  }

  /// Zero step components that push into an active bound.
  void deactivate_blocked(const VectorXd& z, VectorXd& step) const {
    for (int i = 0; i < aug_.n_aug; ++i) {
      if (z[i] <= aug_.lb[i] + 1e-14 && step[i] < 0.0) step[i] = 0.0;
      if (z[i] >= aug_.ub[i] - 1e-14 && step[i] > 0.0) step[i] = 0.0;
    }
  }

  /// Scaled projected-gradient norm (the optimality measure for bounds).
  double projected_gradient_norm(const VectorXd& z, const VectorXd& g) const {
    double n = 0.0;
    for (int i = 0; i < aug_.n_aug; ++i) {
      const double step = std::clamp(z[i] - g[i] * scale_[i], aug_.lb[i], aug_.ub[i]) - z[i];
      n = std::max(n, std::abs(step) / scale_[i]);
    }
    return n;
  }

  double scaled_norm(const VectorXd& v) const {
    double s = 0.0;
    for (int i = 0; i < aug_.n_aug; ++i) s += v[i] * v[i] * inv_s2_[i];
    return std::sqrt(s);
  }

  void mark_free(const VectorXd& z, const VectorXd& g) {
    for (int i = 0; i < aug_.n_aug; ++i) {
      const bool at_lo = z[i] <= aug_.lb[i] + 1e-14 && g[i] > 0.0;
      const bool at_hi = z[i] >= aug_.ub[i] - 1e-14 && g[i] < 0.0;
      free_mask_[static_cast<std::size_t>(i)] = !(at_lo || at_hi);
    }
  }

  void assemble_hessian(const VectorXd& z, const MeritTerms& m) {
    H_.setZero();
    HessAccum acc(H_);
    const auto& rows = aug_.orig->rows;
    for (std::size_t k = 0; k < rows.size(); ++k) {
      const Row& row = rows[k];
      const int sk = aug_.slack_of[k];
      const double w = m.curv[k];
      if (w != 0.0) {
        const auto& sup = row.support;
        const auto& g = ws_.grads[k];
        for (std::size_t a = 0; a < sup.size(); ++a) {
          if (g[a] == 0.0) continue;
          const double wa = w * g[a];
          for (std::size_t b = 0; b <= a; ++b) {
            const int ia = sup[a], ib = sup[b];
            if (ia >= ib)
              H_(ia, ib) += wa * g[b];
            else
              H_(ib, ia) += wa * g[b];
          }
          if (sk >= 0) acc.add(sk, sup[a], -wa);
        }
        if (sk >= 0) H_(sk, sk) += w;
      }
      if (row.hess && !m.weights.empty() && m.weights[k] != 0.0)
        row.hess(z.data(), m.weights[k] * row.scale, acc);
    }
    Hfull_ = H_.selfadjointView<Eigen::Lower>();
  }

  /// Damped Newton direction on the free subspace via dense Cholesky of
  /// H + nu * D (D the scaled metric); nu rises until the factorization
  /// succeeds, falls again on clean full steps. The factorization is kept
  /// for second-order correction solves.
  VectorXd newton_step(const VectorXd& g) {
    const int n = aug_.n_aug;
    free_idx_.clear();
    for (int i = 0; i < n; ++i)
      if (free_mask_[static_cast<std::size_t>(i)]) free_idx_.push_back(i);
    const int nf = static_cast<int>(free_idx_.size());
    VectorXd step = VectorXd::Zero(n);
    have_factor_ = false;
    if (nf == 0) return step;

    MatrixXd Hf(nf, nf);
    VectorXd gf(nf);
    for (int a = 0; a < nf; ++a) {
      gf[a] = g[free_idx_[static_cast<std::size_t>(a)]];
      for (int b = 0; b <= a; ++b) {
        const int ia = free_idx_[static_cast<std::size_t>(a)];
        const int ib = free_idx_[static_cast<std::size_t>(b)];
        const double v = ia >= ib ? H_(ia, ib) : H_(ib, ia);
        Hf(a, b) = v;
        Hf(b, a) = v;
      }
    }
    for (int attempt = 0; attempt < 30; ++attempt) {
      MatrixXd Hreg = Hf;
      for (int a = 0; a < nf; ++a)
        Hreg(a, a) += (nu_ + 1e-10) * inv_s2_[free_idx_[static_cast<std::size_t>(a)]];
      llt_.compute(Hreg);
      if (llt_.info() == Eigen::Success) {
        const VectorXd pf = llt_.solve(-gf);
        if (pf.allFinite()) {
          for (int a = 0; a < nf; ++a) step[free_idx_[static_cast<std::size_t>(a)]] = pf[a];
          have_factor_ = true;
          return step;
        }
      }
      nu_ = std::min(1e8, std::max(1e-8, nu_ * 10.0));
    }
    for (int a = 0; a < nf; ++a) {
      const int ia = free_idx_[static_cast<std::size_t>(a)];
      step[ia] = -g[ia] / inv_s2_[ia];
    }
    return step;
  }

  /// Solve with the factorization left by newton_step (rhs in full space).
  VectorXd factor_solve(const VectorXd& rhs) const {
    const int nf = static_cast<int>(free_idx_.size());
    VectorXd rf(nf);
    for (int a = 0; a < nf; ++a) rf[a] = rhs[free_idx_[static_cast<std::size_t>(a)]];
    const VectorXd pf = llt_.solve(rf);
    VectorXd out = VectorXd::Zero(aug_.n_aug);
    for (int a = 0; a < nf; ++a) out[free_idx_[static_cast<std::size_t>(a)]] = pf[a];
    return out;
  }

  const Augmented& aug_;
  Workspace& ws_;
  MatrixXd H_, Hfull_;
  Eigen::LLT<MatrixXd> llt_;
  bool have_factor_ = false;
  std::vector<char> free_mask_;
  std::vector<int> free_idx_;
  VectorXd inv_s2_, scale_;
  double nu_ = 1e-4;
  int soc_accepts_ = 0;
};

}  // namespace

std::string to_string(SolveStatus s) {
  switch (s) {
    case SolveStatus::solved: return "solved";
    case SolveStatus::infeasible: return "infeasible";
    case SolveStatus::iteration_limit: return "iteration-limit";
  }
  return "?";
}

double max_violation(const NlpProblem& p, const Eigen::VectorXd& z) {
  Workspace ws(p);
  ws.eval_values(z.data());
  return ws.max_violation();
}

double phase1_min_violation(const NlpProblem& p, const Eigen::VectorXd& z0,
                            const SolverOptions& opts, Eigen::VectorXd* z_out, int iter_budget,
                            double* pg_out) {
  // Pure least squares on the violations; no slacks needed (the merit is
  // already smooth where it is nonzero and Gauss-Newton is exact there). A
  // slack-free shell reuses the inner machinery on the original variables.
  Workspace ws(p);
  VectorXd z = clamp_to_bounds(p.lb, p.ub, z0);
  const int m = static_cast<int>(p.rows.size());

  NlpProblem shell = p;
  shell.cost_grad = VectorXd::Zero(p.n);
  for (auto& r : shell.rows) r.kind = RowKind::equality;
  Augmented flat(shell);
  InnerSolver inner(flat, ws);

  auto terms = [&](const VectorXd&) {
    MeritTerms t;
    t.grad = VectorXd::Zero(p.n);
    t.curv.assign(static_cast<std::size_t>(m), 0.0);
    t.weights.assign(static_cast<std::size_t>(m), 0.0);
    for (int k = 0; k < m; ++k) {
      const Row& r = p.rows[static_cast<std::size_t>(k)];
      const double c = ws.values[k];
      const double viol = r.kind == RowKind::equality ? c : std::min(0.0, c);
      if (viol == 0.0) continue;
      t.value += 0.5 * viol * viol;
      const auto& g = ws.grads[static_cast<std::size_t>(k)];
      for (std::size_t j = 0; j < r.support.size(); ++j) t.grad[r.support[j]] += viol * g[j];
      t.curv[static_cast<std::size_t>(k)] = 1.0;
      t.weights[static_cast<std::size_t>(k)] = viol;
    }
    return t;
  };
  auto value_only = [&](const VectorXd&) {
    double s = 0.0;
    for (int k = 0; k < m; ++k) {
      const Row& r = p.rows[static_cast<std::size_t>(k)];
      const double c = ws.values[k];
      const double viol = r.kind == RowKind::equality ? c : std::min(0.0, c);
      s += 0.5 * viol * viol;
    }
    return s;
  };

  double pg = 0.0;
  inner.minimize(z, terms, value_only, opts.opt_tol * 1e-2, iter_budget, &pg);
  ws.eval_values(z.data());
  if (z_out) *z_out = z;
  if (pg_out) *pg_out = pg;
  return ws.max_violation();
}

SolveResult solve_nlp(const NlpProblem& p, const Eigen::VectorXd& z0, const SolverOptions& opts,
                      const Eigen::VectorXd& multipliers0) {
  const auto t_start = std::chrono::steady_clock::now();
  auto elapsed_ms = [&]() {
    return std::chrono::duration<double, std::milli>(std::chrono::steady_clock::now() - t_start)
        .count();
  };
  const int m = static_cast<int>(p.rows.size());

  Augmented aug(p);
  Workspace ws(p);
  InnerSolver inner(aug, ws);

  VectorXd z = VectorXd::Zero(aug.n_aug);
  z.head(p.n) = z0;
  z = clamp_to_bounds(aug.lb, aug.ub, z);
  ws.eval_values(z.data());
  for (int k = 0; k < m; ++k)
    if (aug.slack_of[static_cast<std::size_t>(k)] >= 0)
      z[aug.slack_of[static_cast<std::size_t>(k)]] = std::max(0.0, ws.values[k]);

  VectorXd lam = multipliers0.size() == m ? multipliers0 : VectorXd::Zero(m);

  // Cold starts go through restoration first: Gauss-Newton on the violation
  // is fast, and the augmented Lagrangian behaves far better when it starts
  // on the feasible manifold instead of crawling down a penalty valley.
  int used = 0;
  if (multipliers0.size() != m) {
    Eigen::VectorXd z_feas;
    double pg1 = 0.0;
    phase1_min_violation(p, z.head(p.n), opts, &z_feas, 300, &pg1);
    z.head(p.n) = z_feas;
    ws.eval_values(z.data());
    for (int k = 0; k < m; ++k)
      if (aug.slack_of[static_cast<std::size_t>(k)] >= 0)
        z[aug.slack_of[static_cast<std::size_t>(k)]] = std::max(0.0, ws.values[k]);
    used += 0;  // restoration cost is counted separately from AL iterations
  }

  double rho = opts.rho0;
  // Cold starts walk the classic tolerance ladder; warm restarts with
  // multiplier estimates open near the bottom and just polish.
  ws.eval_values(z.data());
  const double viol0 = ws.max_violation();
  const bool warm = multipliers0.size() == m;
  double omega = warm ? std::max(opts.opt_tol, 1e-4) : 1e-2;
  double eta = warm ? std::clamp(viol0, opts.feas_tol * 10, 1e-2) : 1e-2;

  // All rows are equalities after the slack substitution: r_k = c_k - s_k for
  // original inequalities, c_k otherwise.
  auto residual = [&](int k, const VectorXd& zq) {
    const int sk = aug.slack_of[static_cast<std::size_t>(k)];
    return sk >= 0 ? ws.values[k] - zq[sk] : ws.values[k];
  };
  auto al_terms = [&](const VectorXd& zq) {
    MeritTerms t;
    t.grad = aug.cost_grad;
    t.value = aug.cost_grad.dot(zq);
    t.curv.assign(static_cast<std::size_t>(m), 0.0);
    t.weights.assign(static_cast<std::size_t>(m), 0.0);
    for (int k = 0; k < m; ++k) {
      const double r = residual(k, zq);
      t.value += -lam[k] * r + 0.5 * rho * r * r;
      const double w = rho * r - lam[k];
      t.curv[static_cast<std::size_t>(k)] = rho;
      t.weights[static_cast<std::size_t>(k)] = w;
      if (w != 0.0) {
        const Row& row = p.rows[static_cast<std::size_t>(k)];
        const auto& g = ws.grads[static_cast<std::size_t>(k)];
        for (std::size_t j = 0; j < row.support.size(); ++j)
          t.grad[row.support[j]] += w * g[j];
        const int sk = aug.slack_of[static_cast<std::size_t>(k)];
        if (sk >= 0) t.grad[sk] -= w;
      }
    }
    return t;
  };
  auto al_value = [&](const VectorXd& zq) {
    double val = aug.cost_grad.dot(zq);
    for (int k = 0; k < m; ++k) {
      const double r = residual(k, zq);
      val += -lam[k] * r + 0.5 * rho * r * r;
    }
    return val;
  };

  double pg = std::numeric_limits<double>::infinity();
  double best_viol = std::numeric_limits<double>::infinity();
  VectorXd best_z = z;
  int stalled_outers = 0;

  while (used < opts.iter_limit) {
    const double opt_eff = opts.opt_tol * (1.0 + std::abs(p.cost_grad.dot(z.head(p.n))));
    const double inner_tol = std::max(omega, opt_eff);
    const int spent =
        inner.minimize(z, al_terms, al_value, inner_tol, opts.iter_limit - used, &pg);
    used += spent;
    const bool inner_converged = pg <= inner_tol;

    ws.eval_values(z.data());
    const double viol = ws.max_violation();
    // The equality residuals (including slacks) drive the multiplier logic.
    double res_norm = 0.0;
    for (int k = 0; k < m; ++k) res_norm = std::max(res_norm, std::abs(residual(k, z)));

    if (viol < best_viol) {
      best_viol = viol;
      best_z = z;
    }
    if (trace_enabled())
      std::fprintf(stderr, "[al] used=%4d spent=%3d rho=%.1e viol=%.3e res=%.3e pg=%.3e J=%.6f\n",
                   used, spent, rho, viol, res_norm, pg, p.cost_grad.dot(z.head(p.n)));

    if (viol <= opts.feas_tol && pg <= opt_eff) {
      SolveResult r;
      r.status = SolveStatus::solved;
      r.objective = p.cost_grad.dot(z.head(p.n));
      r.z = z.head(p.n);
      r.max_violation = viol;
      r.stationarity = pg;
      r.iterations = used;
      r.multipliers = lam;
      r.wall_ms = elapsed_ms();
      return r;
    }

    if (!inner_converged) {
      if (used >= opts.iter_limit) break;
      ++stalled_outers;
      if (stalled_outers >= 4) break;
      // A stalled inner with small residuals still earns a multiplier
      // update: the refreshed Lagrangian is what unsticks it.
      if (res_norm > std::max(eta, opts.feas_tol)) continue;
    } else {
      stalled_outers = 0;
    }

    if (res_norm <= std::max(eta, opts.feas_tol)) {
      for (int k = 0; k < m; ++k) {
        lam[k] -= rho * residual(k, z);
        lam[k] = std::clamp(lam[k], -1e10, 1e10);
      }
      eta = std::max(opts.feas_tol * 0.5, eta * 0.1);
      omega = std::max(opts.opt_tol, omega * 0.1);
    } else {
      rho = std::min(rho * 10.0, opts.rho_max);
    }
  }

  // Budget exhausted or stalled: classify via phase 1 from the best iterate.
  SolveResult r;
  r.z = best_z.head(p.n);
  r.iterations = used;
  r.multipliers = lam;
  Eigen::VectorXd z1;
  double pg1 = 0.0;
  const double v1 = phase1_min_violation(p, best_z.head(p.n), opts, &z1, 400, &pg1);
  const bool phase1_converged = pg1 <= 100.0 * opts.opt_tol;
  if (v1 > opts.infeas_threshold && phase1_converged) {
    r.status = SolveStatus::infeasible;
    r.z = z1;
    r.max_violation = v1;
  } else {
    r.status = SolveStatus::iteration_limit;
    r.max_violation = std::min(best_viol, v1);
  }
  r.objective = p.cost_grad.dot(r.z);
  r.stationarity = pg;
  r.wall_ms = elapsed_ms();
  return r;
}

}  // namespace ovt::nlp
