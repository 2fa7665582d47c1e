#pragma once

#include <string>
#include <variant>
#include <vector>

namespace covctrl::milp {

enum class VarKind { kContinuous, kBinary };

struct VarRef {
  int id = -1;
};

struct VarInfo {
  VarKind kind = VarKind::kContinuous;
  double lower = 0.0;
  double upper = 0.0;
  std::string name;
};

struct LinTerm {
  double coef = 0.0;
  int var = -1;
};

/// Linear expression sum(coef_i * var_i) + constant. Terms are merged per
/// variable and kept sorted by variable id.
class LinExpr {
 public:
  LinExpr() = default;
  LinExpr(double constant) : constant_(constant) {}  // NOLINT(google-explicit-constructor)
  LinExpr(VarRef v) { terms_.push_back({1.0, v.id}); }  // NOLINT

  LinExpr& add(double coef, VarRef v);
  LinExpr& add_constant(double c) {
    constant_ += c;
    return *this;
  }

  const std::vector<LinTerm>& terms() const { return terms_; }
  double constant() const { return constant_; }

  LinExpr& operator+=(const LinExpr& o);
  LinExpr& operator-=(const LinExpr& o);
  LinExpr& operator*=(double s);
  friend LinExpr operator+(LinExpr a, const LinExpr& b) { return a += b; }
  friend LinExpr operator-(LinExpr a, const LinExpr& b) { return a -= b; }
  friend LinExpr operator*(double s, LinExpr e) { return e *= s; }

 private:
  void normalize();
  std::vector<LinTerm> terms_;
  double constant_ = 0.0;
};

enum class Sense { kLe, kGe, kEq };

struct Constraint {
  LinExpr expr;
  Sense sense = Sense::kLe;
  double rhs = 0.0;
  std::string tag;  // formulation provenance, free-form
};

/// Minimization model over boxed continuous/binary variables.
class MilpModel {
 public:
  VarRef add_continuous(double lower, double upper, std::string name);
  VarRef add_binary(std::string name);

  void add_constraint(LinExpr expr, Sense sense, double rhs, std::string tag = {});

  void set_objective(LinExpr objective) { objective_ = std::move(objective); }
  const LinExpr& objective() const { return objective_; }

  /// Shrinks a variable's box; throws ModelError if the box empties beyond
  /// a small tolerance (then clamps, so fix(v, 1.0) on binaries is exact).
  void tighten_bounds(VarRef v, double lower, double upper);

  int var_count() const { return static_cast<int>(vars_.size()); }
  const VarInfo& var(int id) const { return vars_.at(id); }
  const std::vector<VarInfo>& vars() const { return vars_; }
  const std::vector<Constraint>& constraints() const { return constraints_; }

  /// Validates that references are registered and all bounds are finite.
  void validate() const;

 private:
  std::vector<VarInfo> vars_;
  std::vector<Constraint> constraints_;
  LinExpr objective_;
};

/// Boolean input to a conjunction: a binary variable or the constant 0/1.
using BoolInput = std::variant<VarRef, int>;

/// Standard AND linearization: out <= in_i for every variable input and
/// out >= sum(in_i) - (count - 1). A constant 0 input fixes out to 0 and
/// skips the rest; constant 1 inputs drop out of the conjunction.
void add_conjunction(MilpModel& model, VarRef out, const std::vector<BoolInput>& ins);

}  // namespace covctrl::milp
