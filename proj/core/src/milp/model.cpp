#include "covctrl/milp/model.hpp"

#include <algorithm>
#include <cmath>

#include "covctrl/errors.hpp"

namespace covctrl::milp {

LinExpr& LinExpr::add(double coef, VarRef v) {
  terms_.push_back({coef, v.id});
  normalize();
  return *this;
}

LinExpr& LinExpr::operator+=(const LinExpr& o) {
  constant_ += o.constant_;
  terms_.insert(terms_.end(), o.terms_.begin(), o.terms_.end());
  normalize();
  return *this;
}

LinExpr& LinExpr::operator-=(const LinExpr& o) {
  constant_ -= o.constant_;
  for (const LinTerm& t : o.terms_) terms_.push_back({-t.coef, t.var});
  normalize();
  return *this;
}

LinExpr& LinExpr::operator*=(double s) {
  constant_ *= s;
  for (LinTerm& t : terms_) t.coef *= s;
  return *this;
}

void LinExpr::normalize() {
  std::sort(terms_.begin(), terms_.end(),
            [](const LinTerm& a, const LinTerm& b) { return a.var < b.var; });
  std::vector<LinTerm> merged;
  merged.reserve(terms_.size());
  for (const LinTerm& t : terms_) {
    if (!merged.empty() && merged.back().var == t.var) {
      merged.back().coef += t.coef;
    } else {
      merged.push_back(t);
    }
  }
  merged.erase(std::remove_if(merged.begin(), merged.end(),
                              [](const LinTerm& t) { return t.coef == 0.0; }),
               merged.end());
  terms_ = std::move(merged);
}

VarRef MilpModel::add_continuous(double lower, double upper, std::string name) {
  if (!(lower <= upper)) throw ModelError("variable '" + name + "' has empty bounds");
  vars_.push_back({VarKind::kContinuous, lower, upper, std::move(name)});
  return {static_cast<int>(vars_.size()) - 1};
}

VarRef MilpModel::add_binary(std::string name) {
  vars_.push_back({VarKind::kBinary, 0.0, 1.0, std::move(name)});
  return {static_cast<int>(vars_.size()) - 1};
}

void MilpModel::add_constraint(LinExpr expr, Sense sense, double rhs, std::string tag) {
  if (!std::isfinite(rhs)) throw ModelError("constraint rhs must be finite");
  constraints_.push_back({std::move(expr), sense, rhs, std::move(tag)});
}

void MilpModel::tighten_bounds(VarRef v, double lower, double upper) {
  VarInfo& info = vars_.at(v.id);
  info.lower = std::max(info.lower, lower);
  info.upper = std::min(info.upper, upper);
  if (info.lower > info.upper) {
    if (info.lower - info.upper > 1e-9) {
      throw ModelError("bounds of '" + info.name + "' emptied");
    }
    info.lower = info.upper = 0.5 * (info.lower + info.upper);
  }
}

void MilpModel::validate() const {
  for (const VarInfo& v : vars_) {
    if (!std::isfinite(v.lower) || !std::isfinite(v.upper)) {
      throw ModelError("variable '" + v.name + "' must have finite bounds");
    }
  }
  auto check_expr = [&](const LinExpr& e) {
    for (const LinTerm& t : e.terms()) {
      if (t.var < 0 || t.var >= static_cast<int>(vars_.size())) {
        throw ModelError("expression references an unregistered variable");
      }
      if (!std::isfinite(t.coef)) throw ModelError("non-finite coefficient");
    }
  };
  check_expr(objective_);
  for (const Constraint& c : constraints_) check_expr(c.expr);
}

void add_conjunction(MilpModel& model, VarRef out, const std::vector<BoolInput>& ins) {
  if (ins.empty()) throw ModelError("conjunction needs at least one input");

  std::vector<VarRef> var_ins;
  for (const BoolInput& in : ins) {
    if (std::holds_alternative<int>(in)) {
      const int c = std::get<int>(in);
      if (c != 0 && c != 1) throw ModelError("conjunction constants must be 0 or 1");
      if (c == 0) {
        model.tighten_bounds(out, 0.0, 0.0);
        return;
      }
      // constant 1 inputs do not restrict the conjunction
    } else {
      var_ins.push_back(std::get<VarRef>(in));
    }
  }

  if (var_ins.empty()) {
    model.tighten_bounds(out, 1.0, 1.0);
    return;
  }
  LinExpr sum;
  for (VarRef v : var_ins) {
    LinExpr upper;
    upper.add(1.0, out).add(-1.0, v);
    model.add_constraint(std::move(upper), Sense::kLe, 0.0, "and_ub");
    sum.add(1.0, v);
  }
  LinExpr lower;
  lower.add(1.0, out);
  lower -= sum;
  model.add_constraint(std::move(lower), Sense::kGe,
                       -(static_cast<double>(var_ins.size()) - 1.0), "and_lb");
}

}  // namespace covctrl::milp
