#pragma once

#include <chrono>
#include <cstdint>
#include <optional>
#include <vector>

#include "covctrl/milp/model.hpp"

namespace covctrl::milp {

/// LP in computational form: minimize c.x + c0 over boxed variables subject
/// to sparse rows. All bounds must be finite.
struct LpProblem {
  struct Row {
    std::vector<LinTerm> terms;  // sorted by var, merged
    Sense sense = Sense::kLe;
    double rhs = 0.0;
  };
  int num_vars = 0;
  std::vector<double> lower, upper;
  std::vector<double> cost;
  double cost_constant = 0.0;
  std::vector<Row> rows;
};

enum class LpStatus { kOptimal, kInfeasible, kIterLimit, kTimeLimit };

struct LpResult {
  LpStatus status = LpStatus::kIterLimit;
  std::vector<double> x;  // structural variable values (valid when optimal)
  double objective = 0.0;
  std::int64_t iterations = 0;
};

struct LpOptions {
  double feasibility_tol = 1e-7;
  double dual_tol = 1e-9;
  std::int64_t max_iterations = 0;  // 0 = automatic
  std::optional<std::chrono::steady_clock::time_point> deadline;
};

/// Bounded-variable primal simplex (two phases, dense basis inverse,
/// Dantzig pricing with a Bland fallback after prolonged degeneracy).
LpResult solve_lp(const LpProblem& problem, const LpOptions& options = {});

/// Extracts the LP relaxation of a model, with optional per-variable bound
/// overrides (used by branch and bound).
LpProblem lp_relaxation(const MilpModel& model,
                        const std::vector<double>* lower_override = nullptr,
                        const std::vector<double>* upper_override = nullptr);

}  // namespace covctrl::milp
