#include "covctrl/planner.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <optional>

#include "covctrl/errors.hpp"
#include "covctrl/mesh_io.hpp"

namespace covctrl {

namespace {

using milp::LinExpr;
using milp::MilpModel;
using milp::Sense;
using milp::VarRef;

constexpr double kMargin = 1e-9;

std::string idx(const std::string& base, std::initializer_list<std::pair<const char*, int>> parts) {
  std::string out = base;
  for (const auto& [key, value] : parts) {
    out += "_";
    out += key;
    out += std::to_string(value);
  }
  return out;
}

double box_min(const Vec3& n, const Aabb& box) {
  double v = 0.0;
  for (int a = 0; a < 3; ++a) v += n[a] >= 0.0 ? n[a] * box.lo[a] : n[a] * box.hi[a];
  return v;
}

double box_max(const Vec3& n, const Aabb& box) {
  double v = 0.0;
  for (int a = 0; a < 3; ++a) v += n[a] >= 0.0 ? n[a] * box.hi[a] : n[a] * box.lo[a];
  return v;
}

bool boxes_overlap(const Aabb& a, const Aabb& b) { return a.overlaps(b); }

struct ReachBox {
  Aabb pos;
  Aabb vel;
};

/// Exact per-axis reachable intervals of position and velocity under the
/// dynamics, input/velocity bounds, and the environment box.
std::vector<std::vector<ReachBox>> reachable_boxes(const PlanInputs& in) {
  const int N = static_cast<int>(in.agents.size());
  const int K = in.config.horizon;
  const KinematicParams& kin = in.kinematics;
  std::vector<std::vector<ReachBox>> reach(N);
  for (int j = 0; j < N; ++j) {
    Aabb pos = Aabb::of_point(in.agents[j].p);
    Aabb vel = Aabb::of_point(in.agents[j].v);
    reach[j].resize(K);
    for (int k = 0; k < K; ++k) {
      Aabb next_pos;
      next_pos.lo = pos.lo + kin.dt * vel.lo;
      next_pos.hi = pos.hi + kin.dt * vel.hi;
      next_pos.lo = next_pos.lo.cwiseMax(in.environment.lo);
      next_pos.hi = next_pos.hi.cwiseMin(in.environment.hi);
      for (int a = 0; a < 3; ++a) {
        if (next_pos.lo[a] > next_pos.hi[a] + 1e-9) {
          throw PlanInfeasible("agent " + std::to_string(j) +
                               " cannot stay inside the environment at step " +
                               std::to_string(k + 1));
        }
        if (next_pos.lo[a] > next_pos.hi[a]) next_pos.hi[a] = next_pos.lo[a];
      }
      const double dv = kin.dt / kin.mass * kin.u_bound;
      Aabb next_vel;
      next_vel.lo = ((1.0 - kin.gamma) * vel.lo).array() - dv;
      next_vel.hi = ((1.0 - kin.gamma) * vel.hi).array() + dv;
      next_vel.lo = next_vel.lo.cwiseMax(Vec3::Constant(-kin.v_bound));
      next_vel.hi = next_vel.hi.cwiseMin(Vec3::Constant(kin.v_bound));
      reach[j][k] = {next_pos, next_vel};
      pos = next_pos;
      vel = next_vel;
    }
  }
  return reach;
}

LinExpr dot_pos(const Vec3& n, const std::array<int, 3>& pos_ids, double scale = 1.0) {
  LinExpr e;
  for (int a = 0; a < 3; ++a) {
    if (n[a] != 0.0) e.add(scale * n[a], VarRef{pos_ids[a]});
  }
  return e;
}

struct FaceAnalysis {
  bool dead = false;      // some face can never be satisfied over the reach box
  int fixed_ones = 0;     // faces satisfied for every reachable position
  struct Open {
    Vec3 normal;          // face normal of the origin-anchored hull
    double beta0;         // face offset of the origin-anchored hull
    double big_m;         // tight upper bound of normal.(c - x) over reach
  };
  std::vector<Open> open;
};

FaceAnalysis analyze_faces(const ConvexHullH& origin_hull, const Vec3& centroid,
                           const Aabb& reach_pos, bool faithful, double global_m) {
  FaceAnalysis fa;
  for (const Plane& face : origin_hull.faces) {
    const double value_lo = face.normal.dot(centroid) - box_max(face.normal, reach_pos);
    const double value_hi = face.normal.dot(centroid) - box_min(face.normal, reach_pos);
    if (!faithful) {
      if (value_hi <= face.offset) {
        ++fa.fixed_ones;
        continue;
      }
      if (value_lo > face.offset) {
        fa.dead = true;
        return fa;
      }
      fa.open.push_back({face.normal, face.offset, value_hi + kMargin * (1.0 + std::abs(value_hi))});
    } else {
      fa.open.push_back({face.normal, face.offset, global_m});
    }
  }
  return fa;
}

}  // namespace

int CoverageMap::covered_count() const {
  int n = 0;
  for (std::uint8_t b : q_) n += b;
  return n;
}

int nearest_unobserved_facet(const Vec3& p, const Mesh& mesh, const CoverageMap& coverage) {
  int best = 0;
  double best_dist = std::numeric_limits<double>::infinity();
  for (const Facet& f : mesh.facets()) {
    if (coverage.covered(f.index)) continue;
    const double d = (p - f.centroid).norm();
    if (d < best_dist) {
      best_dist = d;
      best = f.index;
    }
  }
  if (best == 0) throw NoTargetRemaining("all facets are already covered");
  return best;
}

PlanModel build_milp(const PlanInputs& in) {
  if (!in.mesh || !in.grid || !in.table || !in.gimbal) {
    throw ModelError("plan inputs must reference mesh, grid, table and gimbal set");
  }
  if (in.config.horizon < 1) throw ModelError("horizon must be >= 1");
  if (in.agents.empty()) throw ModelError("at least one agent is required");
  in.kinematics.validate();
  if (in.table->facet_count() != in.mesh->facet_count() || in.table->nx != in.grid->nx ||
      in.table->ny != in.grid->ny || in.table->nz != in.grid->nz) {
    throw StaleTable("visibility table does not match the mesh/grid of this plan");
  }
  if (in.coverage.facet_count() != in.mesh->facet_count()) {
    throw ModelError("coverage map size does not match the mesh");
  }

  const int N = static_cast<int>(in.agents.size());
  const int K = in.config.horizon;
  const int nxi = in.gimbal->size();
  const int nfacet = in.mesh->facet_count();
  const bool faithful = in.config.mode == PlanMode::kFaithful;
  const KinematicParams& kin = in.kinematics;
  const double env_diameter = in.environment.diagonal();
  const double big_m = in.config.big_m > 0.0 ? in.config.big_m : 10.0 * env_diameter;
  const double eps = in.config.eps_strict;
  const double sigma_full = static_cast<double>(K);
  const double w_d = in.config.w_d > 0.0
                         ? in.config.w_d
                         : 1.0 / (static_cast<double>(K) * std::max(1, nxi) *
                                  std::max(1, nfacet));

  // Precompute the rotated FOV hulls anchored at the origin.
  const FovVertices base = base_fov_vertices(in.camera);
  std::vector<ConvexHullH> origin_hulls;
  std::vector<Aabb> hull_boxes;
  origin_hulls.reserve(nxi);
  for (int xi = 1; xi <= nxi; ++xi) {
    const GimbalConfig& gc = in.gimbal->config(xi);
    const FovVertices rot = rotate_fov(base, gc.theta, gc.phi);
    origin_hulls.push_back(hull_from_fov(rot));
    Aabb box = Aabb::of_point(rot[0]);
    for (int i = 1; i < 5; ++i) box.expand(rot[i]);
    hull_boxes.push_back(box);
  }

  const auto reach = reachable_boxes(in);

  PlanModel plan;
  plan.num_agents = N;
  plan.horizon = K;
  MilpModel& m = plan.model;

  // --- kinematic variables and dynamics ------------------------------------
  plan.pos_vars.assign(N, {});
  plan.vel_vars.assign(N, {});
  plan.u_vars.assign(N, {});
  const char* axis_name[3] = {"x", "y", "z"};
  for (int j = 0; j < N; ++j) {
    plan.pos_vars[j].resize(K);
    plan.vel_vars[j].resize(K);
    plan.u_vars[j].resize(K);
    for (int k = 1; k <= K; ++k) {
      const ReachBox& rb = reach[j][k - 1];
      for (int a = 0; a < 3; ++a) {
        const double plo = faithful ? in.environment.lo[a] : rb.pos.lo[a];
        const double phi_b = faithful ? in.environment.hi[a] : rb.pos.hi[a];
        plan.pos_vars[j][k - 1][a] =
            m.add_continuous(plo, phi_b,
                             idx("p", {{"j", j}, {"k", k}}) + "_" + axis_name[a]).id;
        const double vlo = faithful ? -kin.v_bound : rb.vel.lo[a];
        const double vhi = faithful ? kin.v_bound : rb.vel.hi[a];
        plan.vel_vars[j][k - 1][a] =
            m.add_continuous(vlo, vhi,
                             idx("v", {{"j", j}, {"k", k}}) + "_" + axis_name[a]).id;
        plan.u_vars[j][k - 1][a] =
            m.add_continuous(-kin.u_bound, kin.u_bound,
                             idx("u", {{"j", j}, {"k", k}}) + "_" + axis_name[a]).id;
      }
    }
    for (int k = 1; k <= K; ++k) {
      for (int a = 0; a < 3; ++a) {
        // p_k = p_{k-1} + dt v_{k-1}
        LinExpr pe;
        pe.add(1.0, VarRef{plan.pos_vars[j][k - 1][a]});
        double rhs_p = 0.0;
        if (k == 1) {
          rhs_p = in.agents[j].p[a] + kin.dt * in.agents[j].v[a];
        } else {
          pe.add(-1.0, VarRef{plan.pos_vars[j][k - 2][a]});
          pe.add(-kin.dt, VarRef{plan.vel_vars[j][k - 2][a]});
        }
        m.add_constraint(std::move(pe), Sense::kEq, rhs_p,
                         idx("dyn_p", {{"j", j}, {"k", k}}));
        // v_k = (1-gamma) v_{k-1} + (dt/m) u_k
        LinExpr ve;
        ve.add(1.0, VarRef{plan.vel_vars[j][k - 1][a]});
        ve.add(-kin.dt / kin.mass, VarRef{plan.u_vars[j][k - 1][a]});
        double rhs_v = 0.0;
        if (k == 1) {
          rhs_v = (1.0 - kin.gamma) * in.agents[j].v[a];
        } else {
          ve.add(-(1.0 - kin.gamma), VarRef{plan.vel_vars[j][k - 2][a]});
        }
        m.add_constraint(std::move(ve), Sense::kEq, rhs_v,
                         idx("dyn_v", {{"j", j}, {"k", k}}));
      }
    }
    if (K == 1) {
      // With a one-step horizon the position after the horizon is already
      // committed; keep it inside the environment.
      for (int a = 0; a < 3; ++a) {
        LinExpr e;
        e.add(1.0, VarRef{plan.pos_vars[j][0][a]});
        e.add(kin.dt, VarRef{plan.vel_vars[j][0][a]});
        m.add_constraint(e, Sense::kLe, in.environment.hi[a], idx("env_next", {{"j", j}}));
        m.add_constraint(std::move(e), Sense::kGe, in.environment.lo[a],
                         idx("env_next", {{"j", j}}));
      }
    }
  }

  // --- gimbal configuration selection ---------------------------------------
  plan.nu_vars.assign(N, {});
  for (int j = 0; j < N; ++j) {
    plan.nu_vars[j].assign(K, std::vector<int>(nxi, -1));
    for (int k = 1; k <= K; ++k) {
      LinExpr sum;
      for (int xi = 1; xi <= nxi; ++xi) {
        const VarRef nu = m.add_binary(idx("nu", {{"j", j}, {"k", k}, {"xi", xi}}));
        plan.nu_vars[j][k - 1][xi - 1] = nu.id;
        sum.add(1.0, nu);
      }
      m.add_constraint(std::move(sum), Sense::kEq, 1.0, idx("onecfg", {{"j", j}, {"k", k}}));
    }
  }

  // --- candidate cells -------------------------------------------------------
  struct CellVar {
    int cell = 0;
    int var = -1;
    Aabb active;  // cell box intersected with the reach box
  };
  std::vector<std::vector<std::vector<CellVar>>> cells(N);
  for (int j = 0; j < N; ++j) {
    cells[j].resize(K);
    for (int k = 1; k <= K; ++k) {
      const Aabb& rpos = reach[j][k - 1].pos;
      std::vector<int> candidate_ids;
      if (faithful) {
        const double radius = k * kin.dt * kin.v_bound * std::sqrt(3.0);
        const Aabb ball_box = Aabb{in.agents[j].p.array() - radius,
                                   in.agents[j].p.array() + radius};
        for (int c = 1; c <= in.grid->cell_count(); ++c) {
          const Aabb cb = in.grid->cell_box(c);
          // cell intersects the reachability ball
          Vec3 closest = in.agents[j].p.cwiseMax(cb.lo).cwiseMin(cb.hi);
          if ((closest - in.agents[j].p).norm() <= radius) candidate_ids.push_back(c);
          (void)ball_box;
        }
        if (candidate_ids.empty()) {
          throw PlanInfeasible("empty candidate cell set for agent " + std::to_string(j) +
                               " at step " + std::to_string(k));
        }
      } else {
        for (int c = 1; c <= in.grid->cell_count(); ++c) {
          const Aabb cb = in.grid->cell_box(c);
          if (!boxes_overlap(cb, rpos)) continue;
          bool support = false;
          for (int t = 1; t <= nfacet && !support; ++t) {
            if (!in.coverage.covered(t) && in.table->visible(c, t)) support = true;
          }
          if (support) candidate_ids.push_back(c);
        }
      }

      LinExpr sum;
      for (int c : candidate_ids) {
        const Aabb cb = in.grid->cell_box(c);
        CellVar cv;
        cv.cell = c;
        cv.active.lo = cb.lo.cwiseMax(rpos.lo);
        cv.active.hi = cb.hi.cwiseMin(rpos.hi);
        const VarRef rho = m.add_binary(idx("cell", {{"j", j}, {"k", k}, {"c", c}}));
        cv.var = rho.id;
        sum.add(1.0, rho);
        // rho = 1 forces the position into the cell box.
        for (int a = 0; a < 3; ++a) {
          const double over = faithful ? big_m : reach[j][k - 1].pos.hi[a] - cb.hi[a];
          if (over > 0.0) {
            LinExpr e;
            e.add(1.0, VarRef{plan.pos_vars[j][k - 1][a]});
            e.add(over + kMargin, rho);
            m.add_constraint(std::move(e), Sense::kLe, cb.hi[a] + over + kMargin,
                             idx("cellbox", {{"j", j}, {"k", k}, {"c", c}}));
          }
          const double under = faithful ? big_m : cb.lo[a] - reach[j][k - 1].pos.lo[a];
          if (under > 0.0) {
            LinExpr e;
            e.add(-1.0, VarRef{plan.pos_vars[j][k - 1][a]});
            e.add(under + kMargin, rho);
            m.add_constraint(std::move(e), Sense::kLe, -cb.lo[a] + under + kMargin,
                             idx("cellbox", {{"j", j}, {"k", k}, {"c", c}}));
          }
        }
        cells[j][k - 1].push_back(cv);
      }
      if (!cells[j][k - 1].empty()) {
        m.add_constraint(std::move(sum), faithful ? Sense::kEq : Sense::kLe, 1.0,
                         idx("cellsel", {{"j", j}, {"k", k}}));
      }
    }
  }

  // --- coverage blocks --------------------------------------------------------
  std::vector<std::vector<int>> bhat_by_facet(nfacet + 1);
  LinExpr objective;

  for (int j = 0; j < N; ++j) {
    for (int k = 1; k <= K; ++k) {
      const Aabb& rpos = reach[j][k - 1].pos;
      const double sigma = static_cast<double>(K - (k - 1));
      for (int t = 1; t <= nfacet; ++t) {
        const bool covered = in.coverage.covered(t);
        if (!faithful && covered) continue;  // no variable can pay off
        const Vec3& centroid = in.mesh->facet(t).centroid;

        // Support cells: candidates from which the facet was learned visible.
        std::vector<const CellVar*> support;
        for (const CellVar& cv : cells[j][k - 1]) {
          if (in.table->visible(cv.cell, t)) support.push_back(&cv);
        }
        if (!faithful && support.empty()) continue;

        for (int xi = 1; xi <= nxi; ++xi) {
          if (!faithful) {
            // The position must lie in centroid - hull while in a support cell.
            const Aabb xbox{centroid - hull_boxes[xi - 1].hi,
                            centroid - hull_boxes[xi - 1].lo};
            bool possible = false;
            for (const CellVar* cv : support) {
              if (boxes_overlap(cv->active, xbox)) {
                possible = true;
                break;
              }
            }
            if (!possible) continue;
          }

          const FaceAnalysis fa =
              analyze_faces(origin_hulls[xi - 1], centroid, rpos, faithful, big_m);
          if (fa.dead) continue;

          const VarRef b = m.add_binary(idx("b", {{"j", j}, {"t", t}, {"xi", xi}, {"k", k}}));
          LinExpr chull2;
          chull2.add(5.0, b);
          int face_no = 0;
          for (const FaceAnalysis::Open& face : fa.open) {
            ++face_no;
            VarRef o{-1};
            if (faithful) {
              o = m.add_binary(
                  idx("o", {{"j", j}, {"t", t}, {"xi", xi}, {"k", k}, {"f", face_no}}));
            } else {
              o = m.add_continuous(0.0, 1.0,
                  idx("o", {{"j", j}, {"t", t}, {"xi", xi}, {"k", k}, {"f", face_no}}));
            }
            // normal.(centroid - x) + o (M - beta0) <= M
            LinExpr row = dot_pos(face.normal, plan.pos_vars[j][k - 1], -1.0);
            row.add(face.big_m - face.beta0, o);
            m.add_constraint(std::move(row), Sense::kLe,
                             face.big_m - face.normal.dot(centroid),
                             idx("fovface", {{"j", j}, {"t", t}, {"xi", xi}, {"k", k}}));
            chull2.add(-1.0, o);
          }
          m.add_constraint(std::move(chull2), Sense::kLe,
                           static_cast<double>(fa.fixed_ones),
                           idx("fovin", {{"j", j}, {"t", t}, {"xi", xi}, {"k", k}}));

          VarRef bbar{-1}, bhat{-1};
          const std::string suffix = idx("", {{"j", j}, {"t", t}, {"xi", xi}, {"k", k}});
          if (faithful) {
            bbar = m.add_binary("bb" + suffix);
            bhat = m.add_binary("bh" + suffix);
          } else {
            bbar = m.add_continuous(0.0, 1.0, "bb" + suffix);
            bhat = m.add_continuous(0.0, 1.0, "bh" + suffix);
          }

          LinExpr s_expr;  // sum of support-cell selectors (learned rho = 1)
          for (const CellVar* cv : support) s_expr.add(1.0, VarRef{cv->var});

          const VarRef nu{plan.nu_vars[j][k - 1][xi - 1]};
          LinExpr ub_nu;  // bbar <= nu
          ub_nu.add(1.0, bbar).add(-1.0, nu);
          m.add_constraint(std::move(ub_nu), Sense::kLe, 0.0, "seen_ub_nu" + suffix);
          LinExpr ub_b;
          ub_b.add(1.0, bbar).add(-1.0, b);
          m.add_constraint(std::move(ub_b), Sense::kLe, 0.0, "seen_ub_b" + suffix);
          LinExpr ub_s;
          ub_s.add(1.0, bbar);
          ub_s -= s_expr;
          m.add_constraint(std::move(ub_s), Sense::kLe, 0.0, "seen_ub_cell" + suffix);
          LinExpr lb;
          lb.add(1.0, bbar).add(-1.0, nu).add(-1.0, b);
          lb -= s_expr;
          m.add_constraint(std::move(lb), Sense::kGe, -2.0, "seen_lb" + suffix);

          // No payment for work already done.
          LinExpr claim;
          claim.add(1.0, bhat).add(-1.0, bbar);
          m.add_constraint(std::move(claim), Sense::kLe, covered ? 1.0 : 0.0,
                           "claim" + suffix);

          objective.add(-sigma, bhat);
          bhat_by_facet[t].push_back(bhat.id);
          plan.coverage_vars.push_back({j, t, xi, k, b.id, bbar.id, bhat.id});
        }
      }
    }
  }

  for (int t = 1; t <= nfacet; ++t) {
    if (bhat_by_facet[t].empty()) continue;
    LinExpr once;
    for (int id : bhat_by_facet[t]) once.add(1.0, VarRef{id});
    m.add_constraint(std::move(once), Sense::kLe, 1.0, idx("once", {{"t", t}}));
  }

  // --- obstacle avoidance ------------------------------------------------------
  for (int j = 0; j < N; ++j) {
    for (int k = 1; k <= K; ++k) {
      const Aabb& rpos = reach[j][k - 1].pos;
      const bool point_reach =
          !faithful && (rpos.hi - rpos.lo).cwiseAbs().maxCoeff() < 1e-12;
      for (size_t ob = 0; ob < in.obstacles.size(); ++ob) {
        const ConvexHullH& hull = in.obstacles[ob].hull;
        if (point_reach) {
          bool separated = false;
          for (const Plane& face : hull.faces) {
            if (face.normal.dot(rpos.lo) >= face.offset + eps) {
              separated = true;
              break;
            }
          }
          if (!separated) {
            throw PlanInfeasible("agent " + std::to_string(j) +
                                 " is committed to enter obstacle '" +
                                 in.obstacles[ob].name + "' at step " + std::to_string(k));
          }
          continue;
        }

        int const_ones = 0;
        LinExpr zsum;
        std::vector<std::pair<const Plane*, int>> face_vars;
        bool skip_obstacle = false;
        for (const Plane& face : hull.faces) {
          const double rlo = box_min(face.normal, rpos);
          const double rhi = box_max(face.normal, rpos);
          if (!faithful && rlo >= face.offset + eps) {
            // Every reachable position is separated by this face.
            skip_obstacle = true;
            break;
          }
          if (!faithful && rhi < face.offset + eps) {
            ++const_ones;  // this face can never separate
            continue;
          }
          const VarRef z = m.add_binary(idx("zo", {{"j", j}, {"k", k},
                                                   {"ob", static_cast<int>(ob)},
                                                   {"f", static_cast<int>(face_vars.size())}}));
          const double mrow = faithful
                                  ? big_m
                                  : (face.offset + eps - rlo) + kMargin * (1.0 + std::abs(rlo));
          LinExpr row = dot_pos(face.normal, plan.pos_vars[j][k - 1]);
          row.add(mrow, z);
          m.add_constraint(std::move(row), Sense::kGe, face.offset + eps,
                           idx("avoid", {{"j", j}, {"k", k}, {"ob", static_cast<int>(ob)}}));
          zsum.add(1.0, z);
          face_vars.push_back({&face, z.id});
        }
        if (skip_obstacle) continue;
        const int n_faces = hull.face_count();
        if (const_ones >= n_faces) {
          throw PlanInfeasible("agent " + std::to_string(j) +
                               " cannot escape obstacle '" + in.obstacles[ob].name +
                               "' within reach at step " + std::to_string(k));
        }
        m.add_constraint(std::move(zsum), Sense::kLe,
                         static_cast<double>(n_faces - 1 - const_ones),
                         idx("avoid_n", {{"j", j}, {"k", k}, {"ob", static_cast<int>(ob)}}));
      }
    }
  }

  // --- pairwise separation -------------------------------------------------------
  if (in.safety_radius > 0.0 && N > 1) {
    const ConvexHullH dodeca = dodecahedron_hull(Vec3::Zero(), in.safety_radius);
    for (int i = 0; i < N; ++i) {
      for (int j = i + 1; j < N; ++j) {
        for (int k = 1; k <= K; ++k) {
          const Aabb& ri = reach[i][k - 1].pos;
          const Aabb& rj = reach[j][k - 1].pos;
          Aabb diff;  // range of x_j - x_i
          diff.lo = rj.lo - ri.hi;
          diff.hi = rj.hi - ri.lo;
          const bool point_reach =
              !faithful && (diff.hi - diff.lo).cwiseAbs().maxCoeff() < 1e-12;
          if (point_reach) {
            bool separated = false;
            for (const Plane& face : dodeca.faces) {
              if (face.normal.dot(diff.lo) >= face.offset + eps) {
                separated = true;
                break;
              }
            }
            if (!separated) {
              throw PlanInfeasible("agents " + std::to_string(i) + " and " +
                                   std::to_string(j) +
                                   " are committed to violate separation at step " +
                                   std::to_string(k));
            }
            continue;
          }

          int const_ones = 0;
          bool skip_pair = false;
          LinExpr zsum;
          int face_no = 0;
          for (const Plane& face : dodeca.faces) {
            const double rlo = box_min(face.normal, diff);
            const double rhi = box_max(face.normal, diff);
            if (!faithful && rlo >= face.offset + eps) {
              skip_pair = true;
              break;
            }
            if (!faithful && rhi < face.offset + eps) {
              ++const_ones;
              continue;
            }
            const VarRef z = m.add_binary(
                idx("zs", {{"j", j}, {"i", i}, {"k", k}, {"f", face_no}}));
            const double mrow = faithful
                                    ? big_m
                                    : (face.offset + eps - rlo) + kMargin * (1.0 + std::abs(rlo));
            LinExpr row = dot_pos(face.normal, plan.pos_vars[j][k - 1]);
            row += dot_pos(face.normal, plan.pos_vars[i][k - 1], -1.0);
            row.add(mrow, z);
            m.add_constraint(std::move(row), Sense::kGe, face.offset + eps,
                             idx("sep", {{"j", j}, {"i", i}, {"k", k}}));
            zsum.add(1.0, z);
            ++face_no;
          }
          if (skip_pair) continue;
          if (const_ones >= dodeca.face_count()) {
            throw PlanInfeasible("agents " + std::to_string(i) + " and " +
                                 std::to_string(j) + " cannot restore separation at step " +
                                 std::to_string(k));
          }
          m.add_constraint(std::move(zsum), Sense::kLe,
                           static_cast<double>(dodeca.face_count() - 1 - const_ones),
                           idx("sep_n", {{"j", j}, {"i", i}, {"k", k}}));
        }
      }
    }
  }

  // --- progress (distance) term ----------------------------------------------------
  plan.nearest_target.assign(N, 0);
  if (in.coverage.covered_count() < nfacet) {
    for (int j = 0; j < N; ++j) {
      plan.nearest_target[j] = nearest_unobserved_facet(in.agents[j].p, *in.mesh, in.coverage);
      const Vec3 target = in.mesh->facet(plan.nearest_target[j]).centroid;
      const int last_k = in.config.d_term_later_steps ? K : 1;
      for (int k = 1; k <= last_k; ++k) {
        for (int a = 0; a < 3; ++a) {
          const VarRef dist = m.add_continuous(
              0.0, env_diameter + 1.0,
              idx("dst", {{"j", j}, {"k", k}}) + "_" + axis_name[a]);
          LinExpr above;  // dist >= p - target
          above.add(1.0, dist).add(-1.0, VarRef{plan.pos_vars[j][k - 1][a]});
          m.add_constraint(std::move(above), Sense::kGe, -target[a],
                           idx("dterm", {{"j", j}, {"k", k}}));
          LinExpr below;  // dist >= target - p
          below.add(1.0, dist).add(1.0, VarRef{plan.pos_vars[j][k - 1][a]});
          m.add_constraint(std::move(below), Sense::kGe, target[a],
                           idx("dterm", {{"j", j}, {"k", k}}));
          objective.add(w_d, dist);
        }
      }
    }
  }
  (void)sigma_full;

  m.set_objective(std::move(objective));
  m.validate();
  return plan;
}

std::vector<double> build_hover_seed(const PlanModel& plan, const PlanInputs& in) {
  const milp::MilpModel& m = plan.model;
  std::vector<double> x(m.var_count(), 0.0);
  std::vector<char> is_set(m.var_count(), 0);
  auto set_var = [&](int id, double value) {
    if (id < 0) return;
    x[id] = value;
    is_set[id] = 1;
  };

  const KinematicParams& kin = in.kinematics;
  for (int j = 0; j < plan.num_agents; ++j) {
    AgentState s = in.agents[j];
    for (int k = 1; k <= plan.horizon; ++k) {
      // Brake toward zero velocity within the input bounds.
      Vec3 u = (-(1.0 - kin.gamma) * kin.mass / kin.dt) * s.v;
      u = u.cwiseMax(Vec3::Constant(-kin.u_bound)).cwiseMin(Vec3::Constant(kin.u_bound));
      s = step(s, u, kin);
      for (int a = 0; a < 3; ++a) {
        set_var(plan.u_vars[j][k - 1][a], u[a]);
        set_var(plan.pos_vars[j][k - 1][a], s.p[a]);
        set_var(plan.vel_vars[j][k - 1][a], s.v[a]);
      }
      for (int xi = 0; xi < static_cast<int>(plan.nu_vars[j][k - 1].size()); ++xi) {
        set_var(plan.nu_vars[j][k - 1][xi], xi == 0 ? 1.0 : 0.0);
      }
    }
  }
  for (const CoverageVarIds& cv : plan.coverage_vars) {
    set_var(cv.b, 0.0);
    set_var(cv.b_bar, 0.0);
    set_var(cv.b_hat, 0.0);
  }

  // Remaining variables (o, cell selectors, separation indicators, distance
  // auxiliaries) each appear in rows where they are the only unset variable;
  // a single pass picks the cheapest satisfying value.
  for (const milp::Constraint& c : m.constraints()) {
    int unset = -1;
    int unset_count = 0;
    double fixed = c.expr.constant();
    double coef = 0.0;
    for (const milp::LinTerm& term : c.expr.terms()) {
      if (is_set[term.var]) {
        fixed += term.coef * x[term.var];
      } else {
        ++unset_count;
        unset = term.var;
        coef = term.coef;
      }
    }
    if (unset_count != 1 || coef == 0.0) continue;
    const milp::VarInfo& info = m.var(unset);
    // Candidate values: bounds of the variable plus the exactly-binding value.
    double chosen = info.lower;
    bool found = false;
    const double binding = (c.rhs - fixed) / coef;
    for (double candidate : {info.lower, info.upper, std::clamp(binding, info.lower, info.upper)}) {
      if (info.kind == milp::VarKind::kBinary) candidate = std::round(candidate);
      const double lhs = fixed + coef * candidate;
      const double tol = 1e-9 * (1.0 + std::abs(c.rhs));
      bool ok = false;
      switch (c.sense) {
        case Sense::kLe: ok = lhs <= c.rhs + tol; break;
        case Sense::kGe: ok = lhs >= c.rhs - tol; break;
        case Sense::kEq: ok = std::abs(lhs - c.rhs) <= tol; break;
      }
      if (ok) {
        chosen = candidate;
        found = true;
        break;
      }
    }
    if (!found) return {};  // the hover plan does not fit this model
    set_var(unset, chosen);
  }

  for (int id = 0; id < m.var_count(); ++id) {
    if (!is_set[id]) x[id] = std::clamp(0.0, m.var(id).lower, m.var(id).upper);
  }
  return x;
}

PlanSolution decode(const PlanModel& plan, const milp::SolveResult& result,
                    const PlanInputs& in) {
  if (result.status != milp::SolveStatus::kOptimal &&
      result.status != milp::SolveStatus::kIncumbent) {
    throw DecodeError("cannot decode an unsolved model");
  }
  const std::vector<double>& x = result.assignment;
  auto as_binary = [&](int id) {
    const double v = x.at(id);
    if (v > 1.0 - 1e-5) return 1;
    if (v < 1e-5) return 0;
    throw DecodeError("binary variable '" + plan.model.var(id).name +
                      "' is fractional: " + std::to_string(v));
  };

  PlanSolution sol;
  sol.status = result.status;
  sol.stats = result.stats;
  sol.objective = result.objective_value;
  sol.agents.resize(plan.num_agents);

  for (int j = 0; j < plan.num_agents; ++j) {
    sol.agents[j].resize(plan.horizon);
    AgentState sim = in.agents[j];
    for (int k = 1; k <= plan.horizon; ++k) {
      AgentStepPlan& step_plan = sol.agents[j][k - 1];
      for (int a = 0; a < 3; ++a) {
        step_plan.u[a] = x.at(plan.u_vars[j][k - 1][a]);
        step_plan.state.p[a] = x.at(plan.pos_vars[j][k - 1][a]);
        step_plan.state.v[a] = x.at(plan.vel_vars[j][k - 1][a]);
      }
      int active = 0;
      for (int xi = 1; xi <= static_cast<int>(plan.nu_vars[j][k - 1].size()); ++xi) {
        if (as_binary(plan.nu_vars[j][k - 1][xi - 1]) == 1) {
          if (active != 0) throw DecodeError("more than one active FOV configuration");
          active = xi;
        }
      }
      if (active == 0) throw DecodeError("no active FOV configuration");
      step_plan.xi = active;

      sim = step(sim, step_plan.u, in.kinematics);
      if ((sim.p - step_plan.state.p).cwiseAbs().maxCoeff() > 1e-6 ||
          (sim.v - step_plan.state.v).cwiseAbs().maxCoeff() > 1e-6) {
        throw DecodeError("decoded trajectory diverges from the kinematic model");
      }
    }
  }

  for (const CoverageVarIds& cv : plan.coverage_vars) {
    if (in.coverage.covered(cv.facet)) continue;
    if (as_binary(cv.b_hat) == 1) {
      sol.coverage.push_back({cv.agent, cv.facet, cv.xi, cv.kappa});
    }
  }
  std::sort(sol.coverage.begin(), sol.coverage.end(),
            [](const PlannedCoverage& a, const PlannedCoverage& b) {
              return std::tie(a.kappa, a.agent, a.facet, a.xi) <
                     std::tie(b.kappa, b.agent, b.facet, b.xi);
            });
  return sol;
}

}  // namespace covctrl
