#pragma once

#include "latmech/equilibrium.hpp"

#include <optional>
#include <vector>

namespace latmech {

struct SolverOptions {
  /// Convergence threshold on ||R||_F, interpreted relative to
  /// max(1, |B_P|_inf).
  Real tol_residual = 1e-10;
  int max_iterations = 100;
  /// Resting Levenberg-Marquardt shift; escalated automatically when the
  /// linear solve detects rank deficiency, decreased back on success.
  Real damping = 0.0;
  Real line_search_beta = 0.5;  // backtracking factor, in (0, 1)
  int max_backtracks = 30;
  int load_steps = 1;
  bool allow_fracture = true;

  void validate() const;
};

enum class SolveStatus {
  Converged,
  MaxIterations,
  SingularSystem,
  DegenerateGeometry,
  StepFailure,
};

const char* to_string(SolveStatus status);

struct IterationRecord {
  Real residual_norm = 0.0;  // after the accepted step
  Real step_norm = 0.0;
  Real lambda = 0.0;
  int backtracks = 0;
  int load_step = 1;      // 1-based load step this iteration belongs to
  int fracture_round = 0; // re-equilibration count within the step
};

/// Per-bond (extension, |F|) snapshot at a converged load step.
struct StepHistory {
  VecX extensions;
  VecX force_magnitudes;
};

struct SolveReport {
  SolveStatus status = SolveStatus::Converged;
  MatX3 x;    // n x 3 final positions
  MatX3 f;    // m x 3 bond forces
  MatX3 b_q;  // q x 3 reactions
  std::vector<int> broken_bonds;  // sorted bond indices
  std::vector<IterationRecord> trace;
  std::vector<StepHistory> per_step_history;
  int newton_iterations = 0;
  Real final_residual_norm = 0.0;
  /// Number of load steps that reached equilibrium (equals load_steps on
  /// success; meaningful for StepFailure).
  int last_converged_step = 0;
};

/// Damped Newton with Levenberg-Marquardt escalation and backtracking line
/// search. Starts from the reference positions of the free nodes unless a
/// guess is given. With allow_fracture, bonds whose converged extension
/// exceeds the fracture point are broken one per event (worst first) and the
/// same load level is re-solved.
SolveReport solve(const EquilibriumProblem& prob, const SolverOptions& opts = {},
                  const std::optional<MatX3>& initial_guess = {});

/// Applies the loads and prescribed displacements in opts.load_steps equal
/// increments, warm-starting each step and recording a per-bond
/// (extension, force) history entry per converged step.
SolveReport load_sweep(const EquilibriumProblem& prob, const SolverOptions& opts = {});

/// Max relative discrepancy between the analytic Jacobian and central finite
/// differences of the residual at step fd_step, normalized by the largest
/// entry magnitude.
Real check_jacobian(const EquilibriumProblem& prob, const MatX3& x_p,
                    const std::vector<BondState>& states, Real fd_step);

}  // namespace latmech
