#include "covctrl/milp/solver.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <limits>
#include <memory>
#include <queue>

#include "covctrl/errors.hpp"
#include "covctrl/milp/simplex.hpp"

namespace covctrl::milp {

namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();

double evaluate_expr(const LinExpr& expr, const std::vector<double>& x) {
  double v = expr.constant();
  for (const LinTerm& t : expr.terms()) v += t.coef * x[t.var];
  return v;
}

struct Node {
  std::int64_t id = 0;
  int depth = 0;
  double bound = -kInf;
  int fixed_var = -1;      // variable fixed on the edge from the parent
  double fixed_value = 0;  // 0 or 1
  std::shared_ptr<const Node> parent;
};

struct NodeOrder {
  bool operator()(const std::shared_ptr<const Node>& a,
                  const std::shared_ptr<const Node>& b) const {
    if (a->bound != b->bound) return a->bound > b->bound;  // min-heap on bound
    if (a->depth != b->depth) return a->depth > b->depth;  // lower depth first
    return a->id > b->id;                                  // lower id first
  }
};

/// Interval minimum of the objective over the variable boxes: a valid global
/// lower bound available before any LP is solved.
double box_lower_bound(const MilpModel& model) {
  double bound = model.objective().constant();
  for (const LinTerm& t : model.objective().terms()) {
    const VarInfo& v = model.var(t.var);
    bound += t.coef >= 0.0 ? t.coef * v.lower : t.coef * v.upper;
  }
  return bound;
}

}  // namespace

bool assignment_feasible(const MilpModel& model, const std::vector<double>& assignment,
                         const SolveTolerances& tol) {
  if (static_cast<int>(assignment.size()) != model.var_count()) return false;
  for (int j = 0; j < model.var_count(); ++j) {
    const VarInfo& v = model.var(j);
    const double x = assignment[j];
    if (!std::isfinite(x)) return false;
    if (x < v.lower - tol.feasibility || x > v.upper + tol.feasibility) return false;
    if (v.kind == VarKind::kBinary &&
        std::abs(x - std::round(x)) > tol.integrality) {
      return false;
    }
  }
  for (const Constraint& c : model.constraints()) {
    const double lhs = evaluate_expr(c.expr, assignment);
    const double slack = lhs - c.rhs;
    const double feas = tol.feasibility * (1.0 + std::abs(c.rhs));
    switch (c.sense) {
      case Sense::kLe:
        if (slack > feas) return false;
        break;
      case Sense::kGe:
        if (slack < -feas) return false;
        break;
      case Sense::kEq:
        if (std::abs(slack) > feas) return false;
        break;
    }
  }
  return true;
}

double evaluate_objective(const MilpModel& model, const std::vector<double>& assignment) {
  return evaluate_expr(model.objective(), assignment);
}

SolveResult solve(const MilpModel& model, const SolveOptions& options) {
  model.validate();
  const auto start = std::chrono::steady_clock::now();
  const auto deadline =
      start + std::chrono::duration_cast<std::chrono::steady_clock::duration>(
                  std::chrono::duration<double>(options.budget.max_seconds));
  auto elapsed = [&] {
    return std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
  };

  SolveResult result;
  result.bound = box_lower_bound(model);
  result.objective_value = kInf;

  std::vector<double> incumbent;
  double incumbent_value = kInf;
  if (options.initial_incumbent &&
      assignment_feasible(model, *options.initial_incumbent, options.tolerances)) {
    incumbent = *options.initial_incumbent;
    for (int j = 0; j < model.var_count(); ++j) {
      if (model.var(j).kind == VarKind::kBinary) incumbent[j] = std::round(incumbent[j]);
    }
    incumbent_value = evaluate_objective(model, incumbent);
    result.stats.seed_used = true;
  }

  auto finish = [&](SolveStatus status) {
    result.status = status;
    result.stats.wall_seconds = elapsed();
    if (!incumbent.empty()) {
      result.assignment = incumbent;
      result.objective_value = incumbent_value;
    }
    if (status == SolveStatus::kOptimal) result.bound = std::min(result.bound, incumbent_value);
    return result;
  };

  // Models beyond the dense-LP limit cannot be bounded here; they are meant
  // for LP export. A verified seed still yields an incumbent.
  if (static_cast<int>(model.constraints().size()) > options.max_lp_rows) {
    result.stats.budget_limited = true;
    return finish(incumbent.empty() ? SolveStatus::kBudgetExhaustedNoSolution
                                    : SolveStatus::kIncumbent);
  }

  std::vector<double> base_lower(model.var_count()), base_upper(model.var_count());
  for (int j = 0; j < model.var_count(); ++j) {
    base_lower[j] = model.var(j).lower;
    base_upper[j] = model.var(j).upper;
  }

  std::priority_queue<std::shared_ptr<const Node>, std::vector<std::shared_ptr<const Node>>,
                      NodeOrder>
      open;
  auto root = std::make_shared<Node>();
  root->bound = result.bound;
  open.push(root);
  std::int64_t next_id = 1;

  const double int_tol = options.tolerances.integrality;
  bool budget_hit = false;

  while (!open.empty()) {
    if (result.stats.nodes >= options.budget.max_nodes ||
        std::chrono::steady_clock::now() > deadline) {
      budget_hit = true;
      break;
    }
    // Global bound = best open node bound (the heap top).
    result.bound = std::max(result.bound, std::min(open.top()->bound, incumbent_value));

    if (!incumbent.empty()) {
      const double gap = incumbent_value - result.bound;
      if (gap <= options.tolerances.relative_gap * std::max(1.0, std::abs(incumbent_value))) {
        return finish(SolveStatus::kOptimal);
      }
    }

    auto node = open.top();
    open.pop();
    if (node->bound >= incumbent_value - 1e-12) continue;  // pruned by bound

    // Materialize bounds along the path.
    std::vector<double> lower = base_lower;
    std::vector<double> upper = base_upper;
    for (const Node* n = node.get(); n; n = n->parent.get()) {
      if (n->fixed_var >= 0) {
        lower[n->fixed_var] = n->fixed_value;
        upper[n->fixed_var] = n->fixed_value;
      }
    }

    LpOptions lp_opt;
    lp_opt.feasibility_tol = options.tolerances.feasibility;
    lp_opt.deadline = deadline;
    const LpProblem lp = lp_relaxation(model, &lower, &upper);
    LpResult lp_result = solve_lp(lp, lp_opt);
    ++result.stats.nodes;
    result.stats.lp_iterations += lp_result.iterations;

    if (lp_result.status == LpStatus::kTimeLimit) {
      budget_hit = true;
      break;
    }
    if (lp_result.status == LpStatus::kIterLimit) {
      throw SolverNumericalError("simplex iteration limit reached");
    }
    if (lp_result.status == LpStatus::kInfeasible) continue;
    if (lp_result.objective >= incumbent_value - 1e-12) continue;

    // Most fractional binary.
    int branch_var = -1;
    double best_frac = int_tol;
    for (int j = 0; j < model.var_count(); ++j) {
      if (model.var(j).kind != VarKind::kBinary) continue;
      const double x = lp_result.x[j];
      const double frac = std::min(x - std::floor(x), std::ceil(x) - x);
      if (frac > best_frac) {
        best_frac = frac;
        branch_var = j;
      }
    }

    if (branch_var < 0) {
      // Integral: new incumbent.
      std::vector<double> candidate = lp_result.x;
      for (int j = 0; j < model.var_count(); ++j) {
        if (model.var(j).kind == VarKind::kBinary) candidate[j] = std::round(candidate[j]);
      }
      const double value = evaluate_objective(model, candidate);
      if (value < incumbent_value) {
        incumbent = std::move(candidate);
        incumbent_value = value;
      }
      continue;
    }

    for (int side = 0; side < 2; ++side) {
      auto child = std::make_shared<Node>();
      child->id = next_id++;
      child->depth = node->depth + 1;
      child->bound = lp_result.objective;
      child->fixed_var = branch_var;
      child->fixed_value = side == 0 ? 0.0 : 1.0;
      child->parent = node;
      open.push(child);
    }
  }

  if (budget_hit) {
    result.stats.budget_limited = true;
    if (!open.empty()) result.bound = std::max(result.bound, std::min(open.top()->bound, incumbent_value));
    return finish(incumbent.empty() ? SolveStatus::kBudgetExhaustedNoSolution
                                    : SolveStatus::kIncumbent);
  }

  // Tree exhausted.
  if (incumbent.empty()) {
    result.bound = kInf;
    result.objective_value = kInf;
    result.status = SolveStatus::kInfeasible;
    result.stats.wall_seconds = elapsed();
    return result;
  }
  result.bound = incumbent_value;
  return finish(SolveStatus::kOptimal);
}

}  // namespace covctrl::milp
