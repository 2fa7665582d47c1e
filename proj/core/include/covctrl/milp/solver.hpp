#pragma once

#include <cstdint>
#include <optional>
#include <vector>

#include "covctrl/milp/model.hpp"

namespace covctrl::milp {

struct SolveBudget {
  std::int64_t max_nodes = 1'000'000;
  double max_seconds = 30.0;
};

struct SolveTolerances {
  double feasibility = 1e-7;
  double integrality = 1e-6;
  double relative_gap = 1e-6;
};

enum class SolveStatus { kOptimal, kIncumbent, kInfeasible, kBudgetExhaustedNoSolution };

struct SolveStats {
  std::int64_t nodes = 0;
  std::int64_t lp_iterations = 0;
  double wall_seconds = 0.0;
  /// Set when the budget cut the search, in which case the incumbent
  /// returned may depend on timing.
  bool budget_limited = false;
  /// Set when the caller-provided assignment passed the feasibility check
  /// and seeded the incumbent.
  bool seed_used = false;
};

struct SolveResult {
  SolveStatus status = SolveStatus::kBudgetExhaustedNoSolution;
  std::vector<double> assignment;  // per variable id; binaries reported rounded
  double objective_value = 0.0;
  double bound = 0.0;  // best proven lower bound (minimization)
  SolveStats stats;
};

struct SolveOptions {
  SolveBudget budget;
  SolveTolerances tolerances;
  /// Optional feasible assignment used to seed the incumbent. It is verified
  /// against the model and silently ignored when infeasible.
  std::optional<std::vector<double>> initial_incumbent;
  /// LP relaxations are skipped for models with more rows than this; such
  /// solves can only return a seeded incumbent (intended for instances that
  /// get exported to an industrial solver instead).
  int max_lp_rows = 8000;
};

/// Branch and bound over the LP relaxation: most-fractional binary
/// branching, best-bound node selection (ties: lower depth, lower node id).
/// Deterministic whenever the budget does not bind.
SolveResult solve(const MilpModel& model, const SolveOptions& options = {});

/// True when the assignment satisfies bounds, integrality of binaries, and
/// every constraint within the given tolerances.
bool assignment_feasible(const MilpModel& model, const std::vector<double>& assignment,
                         const SolveTolerances& tol);

/// Objective value of an assignment.
double evaluate_objective(const MilpModel& model, const std::vector<double>& assignment);

}  // namespace covctrl::milp
