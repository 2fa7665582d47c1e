#include "covctrl/milp/lp_writer.hpp"

#include <cctype>
#include <cmath>
#include <cstdio>
#include <sstream>
#include <unordered_set>

namespace covctrl::milp {

namespace {

std::string fmt(double v) {
  char buf[40];
  std::snprintf(buf, sizeof(buf), "%.17g", v);
  return buf;
}

std::string sanitize(const std::string& raw, int id, const char* prefix) {
  std::string out;
  out.reserve(raw.size());
  for (char c : raw) {
    if (std::isalnum(static_cast<unsigned char>(c)) || c == '_') {
      out.push_back(c);
    } else {
      out.push_back('_');
    }
  }
  if (out.empty() || std::isdigit(static_cast<unsigned char>(out[0]))) {
    out = std::string(prefix) + std::to_string(id) + (out.empty() ? "" : "_" + out);
  }
  return out;
}

void append_expr(std::ostringstream& out, const LinExpr& expr,
                 const std::vector<std::string>& names) {
  bool first = true;
  for (const LinTerm& t : expr.terms()) {
    const double c = t.coef;
    if (first) {
      if (c < 0.0) out << "- ";
      first = false;
    } else {
      out << (c < 0.0 ? " - " : " + ");
    }
    const double mag = std::abs(c);
    if (mag != 1.0) out << fmt(mag) << " ";
    out << names[t.var];
  }
  if (expr.constant() != 0.0) {
    if (first) {
      out << fmt(expr.constant());
      first = false;
    } else {
      out << (expr.constant() < 0.0 ? " - " : " + ") << fmt(std::abs(expr.constant()));
    }
  }
  if (first) out << "0";
}

}  // namespace

std::string export_lp_text(const MilpModel& model, const std::string& name) {
  std::vector<std::string> names(model.var_count());
  std::unordered_set<std::string> used;
  for (int j = 0; j < model.var_count(); ++j) {
    std::string candidate = sanitize(model.var(j).name, j, "x");
    if (!used.insert(candidate).second) {
      candidate += "_v" + std::to_string(j);
      used.insert(candidate);
    }
    names[j] = std::move(candidate);
  }

  std::ostringstream out;
  out << "\\ Problem: " << name << "\n";
  out << "Minimize\n obj: ";
  append_expr(out, model.objective(), names);
  out << "\nSubject To\n";

  std::unordered_set<std::string> row_names;
  int row_id = 0;
  for (const Constraint& c : model.constraints()) {
    std::string row_name = sanitize(c.tag.empty() ? "c" + std::to_string(row_id) : c.tag,
                                    row_id, "c");
    if (!row_names.insert(row_name).second) {
      row_name += "_r" + std::to_string(row_id);
      row_names.insert(row_name);
    }
    ++row_id;
    out << " " << row_name << ": ";
    LinExpr lhs = c.expr;
    const double rhs = c.rhs - lhs.constant();
    lhs.add_constant(-lhs.constant());
    append_expr(out, lhs, names);
    switch (c.sense) {
      case Sense::kLe: out << " <= "; break;
      case Sense::kGe: out << " >= "; break;
      case Sense::kEq: out << " = "; break;
    }
    out << fmt(rhs) << "\n";
  }

  out << "Bounds\n";
  for (int j = 0; j < model.var_count(); ++j) {
    const VarInfo& v = model.var(j);
    out << " " << fmt(v.lower) << " <= " << names[j] << " <= " << fmt(v.upper) << "\n";
  }

  bool any_binary = false;
  for (int j = 0; j < model.var_count(); ++j) {
    if (model.var(j).kind == VarKind::kBinary) {
      any_binary = true;
      break;
    }
  }
  if (any_binary) {
    out << "Binaries\n";
    for (int j = 0; j < model.var_count(); ++j) {
      if (model.var(j).kind == VarKind::kBinary) out << " " << names[j] << "\n";
    }
  }
  out << "End\n";
  return out.str();
}

}  // namespace covctrl::milp
