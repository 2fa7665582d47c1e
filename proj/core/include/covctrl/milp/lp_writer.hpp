#pragma once

#include <string>

#include "covctrl/milp/model.hpp"

namespace covctrl::milp {

/// Serializes the model in LP text format (Minimize / Subject To / Bounds /
/// Binaries / End). Variable names are sanitized to [A-Za-z0-9_]; ordering
/// follows variable and constraint ids, so output is byte-stable.
std::string export_lp_text(const MilpModel& model, const std::string& name = "model");

}  // namespace covctrl::milp
