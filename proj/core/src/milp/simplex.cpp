#include "covctrl/milp/simplex.hpp"

#include <Eigen/Dense>

#include <algorithm>
#include <cmath>
#include <limits>

#include "covctrl/errors.hpp"

namespace covctrl::milp {

namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();
constexpr double kPivotTol = 1e-9;

enum class VStat : std::uint8_t { kAtLower, kAtUpper, kBasic };

/// Column-sparse matrix over structural + slack variables.
struct Columns {
  std::vector<std::vector<LinTerm>> cols;  // per variable: (row, coef)
};

class Simplex {
 public:
  Simplex(const LpProblem& p, const LpOptions& opt) : p_(p), opt_(opt) {
    m_ = static_cast<int>(p.rows.size());
    n_ = p.num_vars;
    total_ = n_ + m_;
  }

  LpResult run();

 private:
  void build();
  bool recompute_basics();
  void refactorize();
  double infeasibility(std::vector<double>* sigma) const;
  int price(const std::vector<double>& dual, const std::vector<double>& cost,
            bool phase1, const std::vector<double>& sigma, double* best_d) const;
  bool iterate(bool phase1);

  double lo(int j) const { return lo_[j]; }
  double hi(int j) const { return hi_[j]; }

  const LpProblem& p_;
  const LpOptions& opt_;
  int m_ = 0, n_ = 0, total_ = 0;

  Columns a_;                        // columns incl. slacks
  std::vector<double> lo_, hi_;      // bounds incl. slacks
  std::vector<double> cost_;         // phase-2 costs incl. slack zeros
  std::vector<double> rhs_;

  std::vector<int> basic_;           // row -> variable
  std::vector<VStat> stat_;          // variable -> status
  std::vector<double> value_;        // variable -> current value
  Eigen::MatrixXd binv_;             // dense basis inverse (column-major)

  std::int64_t iterations_ = 0;
  std::int64_t degenerate_streak_ = 0;
  bool bland_ = false;
  bool infeasible_box_ = false;
};

void Simplex::build() {
  a_.cols.resize(total_);
  lo_.resize(total_);
  hi_.resize(total_);
  cost_.assign(total_, 0.0);
  rhs_.resize(m_);

  for (int j = 0; j < n_; ++j) {
    lo_[j] = p_.lower[j];
    hi_[j] = p_.upper[j];
    cost_[j] = p_.cost[j];
  }

  // Row activity ranges from the variable boxes give finite slack bounds.
  for (int i = 0; i < m_; ++i) {
    const auto& row = p_.rows[i];
    rhs_[i] = row.rhs;
    double amin = 0.0, amax = 0.0;
    for (const LinTerm& t : row.terms) {
      a_.cols[t.var].push_back({t.coef, i});
      if (t.coef >= 0.0) {
        amin += t.coef * p_.lower[t.var];
        amax += t.coef * p_.upper[t.var];
      } else {
        amin += t.coef * p_.upper[t.var];
        amax += t.coef * p_.lower[t.var];
      }
    }
    const double pad = 1e-7 * (1.0 + std::abs(row.rhs)) +
                       1e-12 * (std::abs(amin) + std::abs(amax));
    double slo = row.rhs - amax - pad;
    double shi = row.rhs - amin + pad;
    switch (row.sense) {
      case Sense::kLe:
        slo = std::max(slo, 0.0);
        if (shi < slo) infeasible_box_ = true;
        break;
      case Sense::kGe:
        shi = std::min(shi, 0.0);
        if (shi < slo) infeasible_box_ = true;
        break;
      case Sense::kEq:
        slo = std::max(slo, 0.0);
        shi = std::min(shi, 0.0);
        if (shi < slo) infeasible_box_ = true;
        slo = 0.0;
        shi = 0.0;
        break;
    }
    const int sj = n_ + i;
    lo_[sj] = slo;
    hi_[sj] = shi;
    a_.cols[sj].push_back({1.0, i});
  }

  basic_.resize(m_);
  stat_.assign(total_, VStat::kAtLower);
  value_.assign(total_, 0.0);
  for (int j = 0; j < n_; ++j) {
    // Start at the bound with smaller magnitude; deterministic tie to lower.
    stat_[j] = std::abs(hi_[j]) < std::abs(lo_[j]) ? VStat::kAtUpper : VStat::kAtLower;
    value_[j] = stat_[j] == VStat::kAtUpper ? hi_[j] : lo_[j];
  }
  for (int i = 0; i < m_; ++i) {
    basic_[i] = n_ + i;
    stat_[n_ + i] = VStat::kBasic;
  }
  binv_ = Eigen::MatrixXd::Identity(m_, m_);
  recompute_basics();
}

bool Simplex::recompute_basics() {
  // x_B = B^-1 (b - N x_N)
  Eigen::VectorXd r(m_);
  for (int i = 0; i < m_; ++i) r[i] = rhs_[i];
  for (int j = 0; j < total_; ++j) {
    if (stat_[j] == VStat::kBasic || value_[j] == 0.0) continue;
    for (const LinTerm& t : a_.cols[j]) r[t.var] -= t.coef * value_[j];
  }
  Eigen::VectorXd xb = binv_ * r;
  for (int i = 0; i < m_; ++i) value_[basic_[i]] = xb[i];
  return true;
}

void Simplex::refactorize() {
  Eigen::MatrixXd b = Eigen::MatrixXd::Zero(m_, m_);
  for (int i = 0; i < m_; ++i) {
    for (const LinTerm& t : a_.cols[basic_[i]]) b(t.var, i) = t.coef;
  }
  Eigen::PartialPivLU<Eigen::MatrixXd> lu(b);
  binv_ = lu.inverse();
  recompute_basics();
}

double Simplex::infeasibility(std::vector<double>* sigma) const {
  double total = 0.0;
  if (sigma) sigma->assign(m_, 0.0);
  for (int i = 0; i < m_; ++i) {
    const int j = basic_[i];
    const double v = value_[j];
    if (v > hi_[j] + opt_.feasibility_tol) {
      total += v - hi_[j];
      if (sigma) (*sigma)[i] = 1.0;
    } else if (v < lo_[j] - opt_.feasibility_tol) {
      total += lo_[j] - v;
      if (sigma) (*sigma)[i] = -1.0;
    }
  }
  return total;
}

int Simplex::price(const std::vector<double>& dual, const std::vector<double>& cost,
                   bool /*phase1*/, const std::vector<double>& /*sigma*/,
                   double* best_d) const {
  int entering = -1;
  double best = opt_.dual_tol;
  for (int j = 0; j < total_; ++j) {
    if (stat_[j] == VStat::kBasic) continue;
    if (hi_[j] - lo_[j] <= 1e-13) continue;  // fixed, never enters
    double d = cost[j];
    for (const LinTerm& t : a_.cols[j]) d -= dual[t.var] * t.coef;
    double improvement = 0.0;
    if (stat_[j] == VStat::kAtLower && d < -opt_.dual_tol) improvement = -d;
    if (stat_[j] == VStat::kAtUpper && d > opt_.dual_tol) improvement = d;
    if (improvement > best) {
      best = improvement;
      entering = j;
      *best_d = d;
      if (bland_) break;  // first eligible index
    }
  }
  return entering;
}

bool Simplex::iterate(bool phase1) {
  // Costs and duals for the current phase.
  std::vector<double> sigma;
  std::vector<double> cost(total_, 0.0);
  if (phase1) {
    infeasibility(&sigma);
    // Phase-1 objective sum of bound violations: gradient sigma over basics.
    // Reduced cost of nonbasic j is -sigma^T B^-1 A_j.
  } else {
    cost = cost_;
  }

  // dual = c_B^T B^-1 (phase 2) or sigma^T B^-1 (phase 1)
  Eigen::VectorXd cb(m_);
  for (int i = 0; i < m_; ++i) {
    cb[i] = phase1 ? sigma[i] : cost[basic_[i]];
  }
  Eigen::VectorXd dual = binv_.transpose() * cb;
  std::vector<double> dual_v(dual.data(), dual.data() + m_);

  double d = 0.0;
  const int q = price(dual_v, cost, phase1, sigma, &d);
  if (q < 0) return false;  // no improving direction

  const double dir = stat_[q] == VStat::kAtLower ? 1.0 : -1.0;

  // w = B^-1 A_q
  Eigen::VectorXd w = Eigen::VectorXd::Zero(m_);
  for (const LinTerm& t : a_.cols[q]) w += t.coef * binv_.col(t.var);

  // Ratio test: entering moves by t >= 0 in direction dir, basics move by
  // -dir * w_i * t. In phase 1, infeasible basics stop at the violated
  // bound they are approaching (the cost gradient changes there).
  double t_limit = hi_[q] - lo_[q];
  int leave_row = -1;
  double leave_pivot = 0.0;
  int leave_to_upper = 0;

  for (int i = 0; i < m_; ++i) {
    const double wi = w[i];
    if (std::abs(wi) < kPivotTol) continue;
    const int bj = basic_[i];
    const double delta = -dir * wi;  // rate of change of basic i
    const double v = value_[bj];
    double room;
    int to_upper;
    if (delta > 0.0) {
      double target = hi_[bj];
      if (v < lo_[bj] - opt_.feasibility_tol) target = lo_[bj];  // rising infeasible
      room = (target - v) / delta;
      to_upper = target == hi_[bj] ? 1 : 0;
    } else {
      double target = lo_[bj];
      if (v > hi_[bj] + opt_.feasibility_tol) target = hi_[bj];  // falling infeasible
      room = (target - v) / delta;
      to_upper = target == hi_[bj] ? 1 : 0;
    }
    if (room < -1e-12) room = 0.0;
    if (room < t_limit - 1e-12 ||
        (room < t_limit + 1e-12 &&
         (leave_row < 0 || std::abs(wi) > std::abs(leave_pivot)))) {
      t_limit = std::min(room, t_limit);
      leave_row = i;
      leave_pivot = wi;
      leave_to_upper = to_upper;
    }
  }

  if (t_limit >= kInf) {
    throw SolverNumericalError("unbounded direction in a boxed LP");
  }
  if (t_limit < 0.0) t_limit = 0.0;

  degenerate_streak_ = t_limit > 1e-12 ? 0 : degenerate_streak_ + 1;
  if (!bland_ && degenerate_streak_ > 10 * static_cast<std::int64_t>(total_)) {
    bland_ = true;  // anti-cycling fallback
  }

  // Apply the step.
  value_[q] += dir * t_limit;
  for (int i = 0; i < m_; ++i) {
    if (std::abs(w[i]) < 1e-15) continue;
    value_[basic_[i]] -= dir * w[i] * t_limit;
  }

  if (leave_row < 0) {
    // Bound flip: entering travelled its whole range.
    stat_[q] = stat_[q] == VStat::kAtLower ? VStat::kAtUpper : VStat::kAtLower;
    value_[q] = stat_[q] == VStat::kAtUpper ? hi_[q] : lo_[q];
    return true;
  }

  // Basis change.
  const int out = basic_[leave_row];
  stat_[out] = leave_to_upper ? VStat::kAtUpper : VStat::kAtLower;
  value_[out] = leave_to_upper ? hi_[out] : lo_[out];
  basic_[leave_row] = q;
  stat_[q] = VStat::kBasic;

  // Rank-1 update of B^-1: row leave_row scaled, others eliminated.
  const double piv = w[leave_row];
  Eigen::VectorXd pivot_row = binv_.row(leave_row) / piv;
  binv_ -= w * pivot_row.transpose();
  binv_.row(leave_row) = pivot_row;
  // The subtraction also touched the pivot row (w_r * row), restore it.
  return true;
}

LpResult Simplex::run() {
  LpResult result;
  if (m_ == 0) {
    // Pure box problem: each variable sits at its cheaper bound.
    result.status = LpStatus::kOptimal;
    result.x.resize(n_);
    result.objective = p_.cost_constant;
    for (int j = 0; j < n_; ++j) {
      result.x[j] = p_.cost[j] >= 0.0 ? p_.lower[j] : p_.upper[j];
      result.objective += p_.cost[j] * result.x[j];
    }
    return result;
  }

  build();
  if (infeasible_box_) {
    result.status = LpStatus::kInfeasible;
    return result;
  }

  const std::int64_t max_iter =
      opt_.max_iterations > 0 ? opt_.max_iterations
                              : 20000 + 60LL * static_cast<std::int64_t>(total_);

  bool phase1 = infeasibility(nullptr) > opt_.feasibility_tol;
  while (true) {
    if (iterations_ >= max_iter) {
      result.status = LpStatus::kIterLimit;
      result.iterations = iterations_;
      return result;
    }
    if ((iterations_ & 127) == 0 && opt_.deadline &&
        std::chrono::steady_clock::now() > *opt_.deadline) {
      result.status = LpStatus::kTimeLimit;
      result.iterations = iterations_;
      return result;
    }
    if (iterations_ > 0 && (iterations_ % 4096) == 0) {
      refactorize();
    }

    if (phase1) {
      if (infeasibility(nullptr) <= opt_.feasibility_tol) {
        phase1 = false;
        continue;
      }
      ++iterations_;
      if (!iterate(true)) {
        // Rule out accumulated round-off before declaring infeasibility.
        refactorize();
        if (infeasibility(nullptr) <= opt_.feasibility_tol) {
          phase1 = false;
          continue;
        }
        if (!iterate(true)) {
          result.status = LpStatus::kInfeasible;
          result.iterations = iterations_;
          return result;
        }
      }
      continue;
    }

    ++iterations_;
    if (!iterate(false)) {
      // No improving direction: check primal feasibility once more against
      // accumulated round-off, refactorizing on failure.
      recompute_basics();
      if (infeasibility(nullptr) > opt_.feasibility_tol) {
        refactorize();
        if (infeasibility(nullptr) > opt_.feasibility_tol) {
          phase1 = true;
          continue;
        }
      }
      break;
    }
  }

  result.status = LpStatus::kOptimal;
  result.iterations = iterations_;
  result.x.resize(n_);
  result.objective = p_.cost_constant;
  for (int j = 0; j < n_; ++j) {
    result.x[j] = value_[j];
    result.objective += p_.cost[j] * value_[j];
  }
  return result;
}

}  // namespace

LpResult solve_lp(const LpProblem& problem, const LpOptions& options) {
  Simplex simplex(problem, options);
  return simplex.run();
}

LpProblem lp_relaxation(const MilpModel& model, const std::vector<double>* lower_override,
                        const std::vector<double>* upper_override) {
  LpProblem lp;
  lp.num_vars = model.var_count();
  lp.lower.resize(lp.num_vars);
  lp.upper.resize(lp.num_vars);
  lp.cost.assign(lp.num_vars, 0.0);
  for (int j = 0; j < lp.num_vars; ++j) {
    lp.lower[j] = lower_override ? (*lower_override)[j] : model.var(j).lower;
    lp.upper[j] = upper_override ? (*upper_override)[j] : model.var(j).upper;
  }
  for (const LinTerm& t : model.objective().terms()) lp.cost[t.var] += t.coef;
  lp.cost_constant = model.objective().constant();
  lp.rows.reserve(model.constraints().size());
  for (const Constraint& c : model.constraints()) {
    LpProblem::Row row;
    row.terms = c.expr.terms();
    row.sense = c.sense;
    row.rhs = c.rhs - c.expr.constant();
    lp.rows.push_back(std::move(row));
  }
  return lp;
}

}  // namespace covctrl::milp
