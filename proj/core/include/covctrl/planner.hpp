#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "covctrl/agent.hpp"
#include "covctrl/geometry.hpp"
#include "covctrl/milp/model.hpp"
#include "covctrl/milp/solver.hpp"
#include "covctrl/visibility.hpp"

namespace covctrl {

struct Obstacle {
  ConvexHullH hull;
  std::string name;
};

/// Mission-level record of covered facets, 1-based like facet indices.
class CoverageMap {
 public:
  CoverageMap() = default;
  explicit CoverageMap(int facet_count) : q_(facet_count, 0) {}

  bool covered(int facet_1based) const { return q_.at(facet_1based - 1) != 0; }
  void mark_covered(int facet_1based) { q_.at(facet_1based - 1) = 1; }
  int facet_count() const { return static_cast<int>(q_.size()); }
  int covered_count() const;
  bool all_covered() const { return covered_count() == facet_count(); }

 private:
  std::vector<std::uint8_t> q_;
};

/// kReduced applies exact model reductions (interval presolve, unreachable
/// and already-covered blocks dropped, indicator relaxations that provably
/// keep the optimum). kFaithful emits the textbook encoding with the global
/// big-M and the full variable cross product; it exists for encoding-level
/// verification and scales poorly.
enum class PlanMode { kReduced, kFaithful };

struct PlannerConfig {
  int horizon = 5;
  double big_m = 0.0;         // 0 = 10 x environment diameter
  double eps_strict = 1e-4;   // strictness margin replacing '>' constraints
  double w_d = 0.0;           // 0 = 1 / (K |Xi| |T|)
  bool d_term_later_steps = false;  // attract every horizon step, not just the first
  PlanMode mode = PlanMode::kReduced;
};

struct PlanInputs {
  std::vector<AgentState> agents;
  CoverageMap coverage;
  const Mesh* mesh = nullptr;
  const GridDecomposition* grid = nullptr;
  const VisibilityTable* table = nullptr;
  const GimbalSet* gimbal = nullptr;
  CameraIntrinsics camera;
  KinematicParams kinematics;
  std::vector<Obstacle> obstacles;
  double safety_radius = 0.0;  // 0 disables inter-agent separation
  Aabb environment;
  PlannerConfig config;
};

/// Ids of one coverage block's variables (o vars may be partially fixed and
/// are not tracked individually).
struct CoverageVarIds {
  int agent = 0;   // 0-based
  int facet = 0;   // 1-based
  int xi = 0;      // 1-based
  int kappa = 0;   // 1-based
  int b = -1;
  int b_bar = -1;
  int b_hat = -1;
};

/// Built model plus the decode map back to controls/states/configurations.
struct PlanModel {
  milp::MilpModel model;
  int num_agents = 0;
  int horizon = 0;
  std::vector<std::vector<std::array<int, 3>>> pos_vars;  // [j][kappa-1]
  std::vector<std::vector<std::array<int, 3>>> vel_vars;
  std::vector<std::vector<std::array<int, 3>>> u_vars;
  std::vector<std::vector<std::vector<int>>> nu_vars;     // [j][kappa-1][xi-1]
  std::vector<CoverageVarIds> coverage_vars;
  std::vector<int> nearest_target;  // per agent, 0 when everything is covered
};

struct AgentStepPlan {
  Vec3 u = Vec3::Zero();
  AgentState state;
  int xi = 0;
};

struct PlannedCoverage {
  int agent = 0;  // 0-based
  int facet = 0;  // 1-based
  int xi = 0;     // 1-based
  int kappa = 0;  // 1-based
};

struct PlanSolution {
  std::vector<std::vector<AgentStepPlan>> agents;  // [j][kappa-1]
  std::vector<PlannedCoverage> coverage;           // newly planned facets only
  double objective = 0.0;
  milp::SolveStatus status = milp::SolveStatus::kInfeasible;
  milp::SolveStats stats;
};

/// Nearest uncovered facet by centroid distance, ties to the lower index.
/// Throws NoTargetRemaining when everything is covered.
int nearest_unobserved_facet(const Vec3& p, const Mesh& mesh, const CoverageMap& coverage);

/// Translates one receding-horizon step into a MILP. Throws PlanInfeasible
/// when a constant part of the model is already violated (first predicted
/// position inside an obstacle, outside the environment, or separation
/// failure), or in faithful mode when a candidate cell set is empty.
PlanModel build_milp(const PlanInputs& inputs);

/// Feasible hover/brake assignment used to seed the solver incumbent, or an
/// empty vector when the rollout violates the model.
std::vector<double> build_hover_seed(const PlanModel& plan, const PlanInputs& inputs);

/// Extracts controls, states, active configurations and planned coverage
/// from a solved model; verifies integrality and dynamics consistency.
PlanSolution decode(const PlanModel& plan, const milp::SolveResult& result,
                    const PlanInputs& inputs);

}  // namespace covctrl
