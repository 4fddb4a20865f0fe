#include "latmech/solver.hpp"

#include "latmech/errors.hpp"

#include <Eigen/SparseCholesky>

#include <algorithm>
#include <cmath>
#include <limits>
#include <stdexcept>

namespace latmech {

void SolverOptions::validate() const {
  if (!(tol_residual > 0.0)) throw std::invalid_argument("solver: tol_residual must be > 0");
  if (max_iterations < 0) throw std::invalid_argument("solver: max_iterations must be >= 0");
  if (!(damping >= 0.0)) throw std::invalid_argument("solver: damping must be >= 0");
  if (!(line_search_beta > 0.0 && line_search_beta < 1.0))
    throw std::invalid_argument("solver: line_search_beta must be in (0, 1)");
  if (max_backtracks < 0) throw std::invalid_argument("solver: max_backtracks must be >= 0");
  if (load_steps < 1) throw std::invalid_argument("solver: load_steps must be >= 1");
}

const char* to_string(SolveStatus status) {
  switch (status) {
    case SolveStatus::Converged:
      return "Converged";
    case SolveStatus::MaxIterations:
      return "MaxIterations";
    case SolveStatus::SingularSystem:
      return "SingularSystem";
    case SolveStatus::DegenerateGeometry:
      return "DegenerateGeometry";
    case SolveStatus::StepFailure:
      return "StepFailure";
  }
  return "Unknown";
}

namespace {

Real load_scale(const EquilibriumProblem& prob) {
  const Real b_inf =
      prob.applied_loads().size() > 0 ? prob.applied_loads().cwiseAbs().maxCoeff() : 0.0;
  return std::max(1.0, b_inf);
}

Eigen::VectorXd flatten(const MatX3& m) {
  Eigen::VectorXd v(3 * m.rows());
  for (Eigen::Index i = 0; i < m.rows(); ++i) v.segment<3>(3 * i) = m.row(i).transpose();
  return v;
}

MatX3 unflatten(const Eigen::VectorXd& v) {
  MatX3 m(v.size() / 3, 3);
  for (Eigen::Index i = 0; i < m.rows(); ++i) m.row(i) = v.segment<3>(3 * i).transpose();
  return m;
}

struct NewtonScratch {
  std::vector<IterationRecord>& trace;
  int& iterations_used;  // accepted steps so far, shared across fracture rounds
  int load_step = 1;
  int fracture_round = 0;
};

// Newton at fixed targets and fixed bond states. Updates x_p in place.
SolveStatus newton_loop(const EquilibriumProblem& prob, const SolverOptions& opts, MatX3& x_p,
                        const std::vector<BondState>& states, NewtonScratch& sc, Real& out_rn) {
  const Real tol = opts.tol_residual * load_scale(prob);

  MatX3 r;
  try {
    r = residual(prob, x_p, states);
  } catch (const DegenerateBondError&) {
    return SolveStatus::DegenerateGeometry;
  }
  Real rn = r.norm();
  out_rn = rn;
  if (rn <= tol) return SolveStatus::Converged;

  Real lambda = opts.damping;
  const Eigen::Index dim = 3 * prob.partition().free_count();

  int local_iterations = 0;
  while (local_iterations < opts.max_iterations) {
    BlockSparseMatrix jac;
    try {
      jac = jacobian(prob, x_p, states);
    } catch (const DegenerateBondError&) {
      return SolveStatus::DegenerateGeometry;
    }
    const Eigen::SparseMatrix<Real> j = jac.to_sparse();
    Real diag_scale = 0.0;
    for (Eigen::Index i = 0; i < dim; ++i) diag_scale += std::abs(j.coeff(i, i));
    diag_scale = std::max(diag_scale / static_cast<Real>(dim), 1e-300);
    const Real lambda_floor = 1e-10 * diag_scale;
    const Real lambda_cap = 1e12 * diag_scale;

    const Eigen::VectorXd rhs = -flatten(r);
    bool accepted = false;
    while (!accepted) {
      Eigen::SparseMatrix<Real> shifted = j;
      if (lambda > 0.0) {
        for (Eigen::Index i = 0; i < dim; ++i) shifted.coeffRef(i, i) += lambda;
      }
      Eigen::SimplicialLDLT<Eigen::SparseMatrix<Real>> ldlt(shifted);
      Eigen::VectorXd delta;
      bool usable = ldlt.info() == Eigen::Success;
      if (usable) {
        delta = ldlt.solve(rhs);
        usable = delta.allFinite();
      }
      if (usable) {
        // Backtracking on ||R||; accept only on sufficient strict decrease.
        Real alpha = 1.0;
        for (int bt = 0; bt <= opts.max_backtracks; ++bt) {
          const MatX3 trial = x_p + alpha * unflatten(delta);
          // near-singular factorizations can return absurdly large steps;
          // reject before bond norms overflow
          if (!trial.allFinite() || trial.cwiseAbs().maxCoeff() > 1e100) {
            alpha *= opts.line_search_beta;
            continue;
          }
          MatX3 trial_r;
          Real trial_rn = std::numeric_limits<Real>::infinity();
          try {
            trial_r = residual(prob, trial, states);
            trial_rn = trial_r.norm();
          } catch (const DegenerateBondError&) {
            // collapsed trial configuration: treat as a rejected step
          }
          if (trial_rn <= (1.0 - 1e-4 * alpha) * rn) {
            x_p = trial;
            r = std::move(trial_r);
            rn = trial_rn;
            sc.trace.push_back({rn, alpha * delta.norm(), lambda, bt, sc.load_step,
                                sc.fracture_round});
            ++sc.iterations_used;
            ++local_iterations;
            lambda = std::max(opts.damping, lambda * 0.25);
            accepted = true;
            break;
          }
          alpha *= opts.line_search_beta;
        }
      }
      if (!accepted) {
        // rank-deficient or non-descending direction: escalate the shift
        lambda = std::max(lambda * 10.0, lambda_floor);
        if (lambda > lambda_cap) {
          out_rn = rn;
          return SolveStatus::SingularSystem;
        }
      }
    }
    out_rn = rn;
    if (rn <= tol) return SolveStatus::Converged;
  }
  return SolveStatus::MaxIterations;
}

// Newton plus event-driven fracture: break the worst over-extended bond at
// the converged state and re-solve the same load level.
SolveStatus equilibrate_level(const EquilibriumProblem& prob, const SolverOptions& opts,
                              MatX3& x_p, std::vector<BondState>& states, NewtonScratch& sc,
                              Real& out_rn) {
  const int m = prob.net().bond_count();
  sc.fracture_round = 0;
  for (int round = 0; round <= m; ++round) {
    sc.fracture_round = round;
    const SolveStatus status = newton_loop(prob, opts, x_p, states, sc, out_rn);
    if (status != SolveStatus::Converged) return status;
    if (!opts.allow_fracture) return status;

    const SystemState st = assemble_state(prob, x_p, states);
    int worst = -1;
    Real worst_over = 0.0;
    for (int i = 0; i < m; ++i) {
      if (states[i].broken) continue;
      const Real over = st.extensions[i] - prob.law(i).fracture_extension;
      if (over > 0.0 && over > worst_over) {
        worst = i;
        worst_over = over;
      }
    }
    if (worst < 0) return SolveStatus::Converged;
    states[worst].broken = true;
  }
  return SolveStatus::Converged;  // unreachable: at most m breaks
}

SolveReport finalize_report(const EquilibriumProblem& prob, const MatX3& x_p,
                            const std::vector<BondState>& states, SolveReport&& report) {
  try {
    const SystemState st = assemble_state(prob, x_p, states);
    report.x = st.x;
    report.f = st.f;
    report.b_q = reactions(prob, st);
  } catch (const DegenerateBondError&) {
    // failed solve left a collapsed bond: report the geometry, zero forces
    report.x = prob.scatter_positions(x_p);
    report.f = MatX3::Zero(prob.net().bond_count(), 3);
    report.b_q = MatX3::Zero(prob.partition().prescribed_count(), 3);
  }
  report.broken_bonds.clear();
  for (int i = 0; i < prob.net().bond_count(); ++i)
    if (states[i].broken) report.broken_bonds.push_back(i);
  return std::move(report);
}

StepHistory capture_history(const EquilibriumProblem& prob, const MatX3& x_p,
                            const std::vector<BondState>& states) {
  const SystemState st = assemble_state(prob, x_p, states);
  StepHistory h;
  h.extensions = st.extensions;
  h.force_magnitudes = st.f.rowwise().norm();
  return h;
}

SolveReport run_steps(const EquilibriumProblem& prob, const SolverOptions& opts, int steps,
                      MatX3 x_p) {
  opts.validate();
  SolveReport report;
  std::vector<BondState> states = prob.initial_bond_states();

  const MatX3 b_p_final = prob.applied_loads();
  const MatX3 x_q_final = prob.prescribed_positions();
  MatX3 x_q_ref(prob.partition().prescribed_count(), 3);
  for (int i = 0; i < prob.partition().prescribed_count(); ++i)
    x_q_ref.row(i) = prob.net().reference_positions().row(prob.partition().prescribed[i]);

  NewtonScratch sc{report.trace, report.newton_iterations};
  for (int s = 1; s <= steps; ++s) {
    // the final step applies the target blocks verbatim
    const Real t = static_cast<Real>(s) / static_cast<Real>(steps);
    const EquilibriumProblem level =
        s == steps ? prob
                   : prob.with_targets(x_q_ref + t * (x_q_final - x_q_ref), t * b_p_final);
    sc.load_step = s;
    Real rn = 0.0;
    const SolveStatus status = equilibrate_level(level, opts, x_p, states, sc, rn);
    report.final_residual_norm = rn;
    if (status != SolveStatus::Converged) {
      report.status = steps == 1 ? status : SolveStatus::StepFailure;
      return finalize_report(level, x_p, states, std::move(report));
    }
    report.last_converged_step = s;
    report.per_step_history.push_back(capture_history(level, x_p, states));
  }
  report.status = SolveStatus::Converged;
  return finalize_report(prob, x_p, states, std::move(report));
}

}  // namespace

SolveReport solve(const EquilibriumProblem& prob, const SolverOptions& opts,
                  const std::optional<MatX3>& initial_guess) {
  MatX3 x0 = initial_guess ? *initial_guess : prob.reference_free_positions();
  if (x0.rows() != prob.partition().free_count())
    throw std::invalid_argument("solve: initial guess must have one row per free node");
  return run_steps(prob, opts, 1, std::move(x0));
}

SolveReport load_sweep(const EquilibriumProblem& prob, const SolverOptions& opts) {
  return run_steps(prob, opts, opts.load_steps, prob.reference_free_positions());
}

Real check_jacobian(const EquilibriumProblem& prob, const MatX3& x_p,
                    const std::vector<BondState>& states, Real fd_step) {
  if (!(fd_step > 0.0)) throw std::invalid_argument("check_jacobian: fd_step must be > 0");
  const Eigen::MatrixXd ja = jacobian(prob, x_p, states).to_dense();
  const Eigen::Index dim = ja.rows();
  Eigen::MatrixXd jfd(dim, dim);
  for (Eigen::Index col = 0; col < dim; ++col) {
    MatX3 xp = x_p;
    MatX3 xm = x_p;
    xp(col / 3, col % 3) += fd_step;
    xm(col / 3, col % 3) -= fd_step;
    const Eigen::VectorXd rp = flatten(residual(prob, xp, states));
    const Eigen::VectorXd rm = flatten(residual(prob, xm, states));
    jfd.col(col) = (rp - rm) / (2.0 * fd_step);
  }
  const Real scale =
      std::max({ja.cwiseAbs().maxCoeff(), jfd.cwiseAbs().maxCoeff(), 1e-300});
  return (ja - jfd).cwiseAbs().maxCoeff() / scale;
}

}  // namespace latmech
