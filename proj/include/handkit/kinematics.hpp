#pragma once

// Tendon excursion (Landsmeer model III), the three-stage cumulative cable
// system, and the single-cable quasi-static finger model.
//
// With one flexor cable per finger the cable displacement fixes only the
// distal-stage excursion L_d. The remaining freedom is closed by elastic
// return springs at each joint: the finger settles in the pose of least
// spring energy 1/2 sum k_j phi_j^2 subject to L_d(phi) = displacement and
// the joint limits.

#include <nlohmann/json.hpp>

#include <algorithm>
#include <array>
#include <cmath>
#include <limits>
#include <string>
#include <utility>
#include <vector>

#include "handkit/error.hpp"

namespace handkit {

enum class StageId { proximal, intermediate, distal };

struct TendonStage {
  double b = 0.0;  // mm
  double h = 0.0;  // mm/rad
  StageId stage_id = StageId::proximal;
};

inline void validate(const TendonStage& s) {
  if (!(s.b >= 0.0) || !(s.h >= 0.0) || !std::isfinite(s.b) || !std::isfinite(s.h) || (s.b == 0.0 && s.h == 0.0)) {
    throw Error(ErrorKind::InvalidArgument, "tendon stage needs b >= 0, h >= 0, not both zero");
  }
}

/// (b + h phi) phi.
inline double tendon_excursion(const TendonStage& stage, double phi) { return (stage.b + stage.h * phi) * phi; }

/// Joint flexion angles in radians, 0 = straight: MCP, PIP, DIP.
struct JointState {
  std::array<double, 3> phi{0.0, 0.0, 0.0};

  double proximal() const { return phi[0]; }
  double intermediate() const { return phi[1]; }
  double distal() const { return phi[2]; }
};

inline constexpr std::array<double, 3> kDefaultJointLimits{1.57, 1.92, 1.22};

struct FingerConfig {
  std::string design_id;
  std::array<double, 3> lengths{45.0, 25.0, 20.0};  // mm
  std::array<TendonStage, 3> stages{TendonStage{8.0, 2.0, StageId::proximal},
                                    TendonStage{6.0, 1.5, StageId::intermediate},
                                    TendonStage{4.0, 1.0, StageId::distal}};
  std::array<double, 3> springs{30.0, 20.0, 12.0};  // N mm / rad
  std::array<double, 3> limits = kDefaultJointLimits;
  bool baseline = false;
};

inline void validate(const FingerConfig& cfg) {
  for (int j = 0; j < 3; ++j) {
    validate(cfg.stages[j]);
    if (!(cfg.lengths[j] > 0.0) || !(cfg.springs[j] > 0.0) || !(cfg.limits[j] > 0.0) ||
        !std::isfinite(cfg.lengths[j]) || !std::isfinite(cfg.springs[j]) || !std::isfinite(cfg.limits[j])) {
      throw Error(ErrorKind::InvalidArgument,
                  "design '" + cfg.design_id + "': lengths, springs and joint limits must be positive");
    }
  }
}

inline void validate(const FingerConfig& cfg, const JointState& state) {
  for (int j = 0; j < 3; ++j) {
    if (!(state.phi[j] >= 0.0) || state.phi[j] > cfg.limits[j]) {
      throw Error(ErrorKind::InvalidArgument, "joint angle " + detail::format_float(state.phi[j], 6) + " outside [0, " +
                                                  detail::format_float(cfg.limits[j], 6) + "]");
    }
  }
}

struct CableExcursion {
  double proximal = 0.0;      // L_p
  double intermediate = 0.0;  // L_i
  double distal = 0.0;        // L_d
};

/// L_p = e_p, L_i = L_p + e_i, L_d = L_p + L_i + e_d.
inline CableExcursion cumulative_excursion(const FingerConfig& cfg, const JointState& state) {
  CableExcursion L;
  L.proximal = tendon_excursion(cfg.stages[0], state.phi[0]);
  L.intermediate = L.proximal + tendon_excursion(cfg.stages[1], state.phi[1]);
  L.distal = L.proximal + L.intermediate + tendon_excursion(cfg.stages[2], state.phi[2]);
  return L;
}

/// Multiplicity of each joint's excursion in L_d: the proximal stage enters
/// through both L_p and L_i.
inline constexpr std::array<double, 3> kDistalWeights{2.0, 1.0, 1.0};

inline double elastic_energy(const FingerConfig& cfg, const JointState& state) {
  double e = 0.0;
  for (int j = 0; j < 3; ++j) e += 0.5 * cfg.springs[j] * state.phi[j] * state.phi[j];
  return e;
}

struct FlexionSolution {
  JointState state;
  bool saturated = false;
};

namespace detail {

/// Smallest phi >= 0 with (b + h phi) phi = target.
inline double invert_excursion(const TendonStage& s, double target) {
  if (target <= 0.0) return 0.0;
  if (s.h == 0.0) return target / s.b;
  return 2.0 * target / (s.b + std::sqrt(s.b * s.b + 4.0 * s.h * target));
}

/// Minimizer of the Lagrangian term 1/2 k phi^2 - mu w e(phi) over [0, max].
inline double lagrangian_argmin(double k, double w, const TendonStage& s, double limit, double mu) {
  const double curvature = k - 2.0 * mu * w * s.h;
  if (curvature <= 0.0) return s.b == 0.0 && curvature == 0.0 ? 0.0 : limit;
  return std::clamp(mu * w * s.b / curvature, 0.0, limit);
}

}  // namespace detail

/// Least-energy pose whose distal excursion equals `cable_displacement`.
///
/// Solved through the one-dimensional dual: for a multiplier mu >= 0 each
/// joint minimizes its own Lagrangian term in closed form, and the distal
/// excursion of that pose is nondecreasing in mu. Bisection on mu brackets
/// the displacement; a final exact inversion on the joint(s) still moving
/// inside the bracket removes the residual. Any pose obtained this way
/// minimizes the Lagrangian, so it is a global minimum of the constrained
/// problem.
inline FlexionSolution solve_flexion(const FingerConfig& cfg, double cable_displacement) {
  validate(cfg);
  if (!(cable_displacement >= 0.0) || !std::isfinite(cable_displacement)) {
    throw Error(ErrorKind::InvalidArgument, "cable displacement must be finite and >= 0");
  }
  const auto& w = kDistalWeights;
  auto pose_at = [&](double mu) {
    JointState s;
    for (int j = 0; j < 3; ++j) s.phi[j] = detail::lagrangian_argmin(cfg.springs[j], w[j], cfg.stages[j], cfg.limits[j], mu);
    return s;
  };
  auto distal = [&](const JointState& s) { return cumulative_excursion(cfg, s).distal; };

  FlexionSolution out;
  if (cable_displacement == 0.0) return out;

  JointState full;
  full.phi = cfg.limits;
  const double reach = distal(full);
  if (cable_displacement >= reach) {
    out.state = full;
    out.saturated = cable_displacement > reach;
    return out;
  }

  double lo = 0.0, hi = 1.0;
  int guard = 0;
  while (distal(pose_at(hi)) < cable_displacement) {
    lo = hi;
    hi *= 2.0;
    if (++guard > 2000 || !std::isfinite(hi)) {
      throw Error(ErrorKind::NonConvergence, "design '" + cfg.design_id + "': cannot bracket the multiplier");
    }
  }
  for (int it = 0; it < 400; ++it) {
    const double mid = 0.5 * (lo + hi);
    if (!(mid > lo && mid < hi)) break;
    if (distal(pose_at(mid)) < cable_displacement) {
      lo = mid;
    } else {
      hi = mid;
    }
  }

  const JointState below = pose_at(lo);
  JointState state = pose_at(hi);
  double excess = distal(state) - cable_displacement;
  // Give back the excess on the joints that differ across the bracket,
  // largest change first; each stays within [below, above].
  std::array<int, 3> order{0, 1, 2};
  std::sort(order.begin(), order.end(), [&](int a, int b) {
    return w[a] * (tendon_excursion(cfg.stages[a], state.phi[a]) - tendon_excursion(cfg.stages[a], below.phi[a])) >
           w[b] * (tendon_excursion(cfg.stages[b], state.phi[b]) - tendon_excursion(cfg.stages[b], below.phi[b]));
  });
  for (int j : order) {
    if (excess <= 0.0) break;
    const double e_hi = tendon_excursion(cfg.stages[j], state.phi[j]);
    const double e_lo = tendon_excursion(cfg.stages[j], below.phi[j]);
    const double give = std::min(excess / w[j], e_hi - e_lo);
    if (give <= 0.0) continue;
    state.phi[j] = std::clamp(detail::invert_excursion(cfg.stages[j], e_hi - give), below.phi[j], state.phi[j]);
    excess = distal(state) - cable_displacement;
  }
  // Rounding can leave the excess a few ulps either side; settle it on the
  // joint with the most room.
  for (int pass = 0; pass < 4 && std::abs(excess) > 0.0; ++pass) {
    int j = order[0];
    const double target = tendon_excursion(cfg.stages[j], state.phi[j]) - excess / w[j];
    const double phi = std::clamp(detail::invert_excursion(cfg.stages[j], target), 0.0, cfg.limits[j]);
    if (phi == state.phi[j]) break;
    state.phi[j] = phi;
    excess = distal(state) - cable_displacement;
  }
  if (!(std::abs(excess) < 1e-9)) {
    throw Error(ErrorKind::NonConvergence, "design '" + cfg.design_id + "': constraint residual " +
                                               detail::format_float(excess, 6) + " mm");
  }
  out.state = state;
  return out;
}

struct FingertipPosition {
  double y = 0.0;
  double z = 0.0;
};

/// Planar three-link chain in the lateral (yz) plane, rooted at the MCP
/// joint. The straight finger points along +y; flexion turns toward -z.
inline FingertipPosition fingertip_position(const FingerConfig& cfg, const JointState& state) {
  FingertipPosition p;
  double angle = 0.0;
  for (int j = 0; j < 3; ++j) {
    angle += state.phi[j];
    p.y += cfg.lengths[j] * std::cos(angle);
    p.z -= cfg.lengths[j] * std::sin(angle);
  }
  return p;
}

struct Trajectory {
  std::vector<FingertipPosition> points;
  std::vector<double> displacements;
  std::vector<JointState> states;
  bool saturated = false;
};

inline Trajectory sweep_trajectory(const FingerConfig& cfg, double displacement_max, int steps) {
  if (steps < 2) throw Error(ErrorKind::InvalidArgument, "a sweep needs at least 2 steps");
  if (!(displacement_max >= 0.0)) throw Error(ErrorKind::InvalidArgument, "displacement_max must be >= 0");
  Trajectory t;
  for (int k = 0; k < steps; ++k) {
    const double d = displacement_max * k / (steps - 1);
    const auto sol = solve_flexion(cfg, d);
    t.displacements.push_back(d);
    t.states.push_back(sol.state);
    t.points.push_back(fingertip_position(cfg, sol.state));
    t.saturated = t.saturated || sol.saturated;
  }
  return t;
}

struct DesignMetrics {
  std::string design_id;
  double min_y = 0.0;
  FingertipPosition final_point;
  double path_length = 0.0;
  bool saturated = false;
  bool baseline = false;
};

inline DesignMetrics trajectory_metrics(const FingerConfig& cfg, const Trajectory& t) {
  DesignMetrics m;
  m.design_id = cfg.design_id;
  m.baseline = cfg.baseline;
  m.saturated = t.saturated;
  m.min_y = std::numeric_limits<double>::infinity();
  for (std::size_t k = 0; k < t.points.size(); ++k) {
    m.min_y = std::min(m.min_y, t.points[k].y);
    if (k > 0) m.path_length += std::hypot(t.points[k].y - t.points[k - 1].y, t.points[k].z - t.points[k - 1].z);
  }
  m.final_point = t.points.back();
  return m;
}

struct DesignComparison {
  std::vector<DesignMetrics> ranking;  // deepest flexion (smallest min y) first
  std::vector<Trajectory> trajectories;  // in input order
};

inline DesignComparison compare_designs(const std::vector<FingerConfig>& configs, double displacement_max, int steps) {
  if (configs.empty()) throw Error(ErrorKind::InvalidArgument, "no designs to compare");
  DesignComparison out;
  for (const auto& cfg : configs) {
    Trajectory t;
    try {
      t = sweep_trajectory(cfg, displacement_max, steps);
    } catch (const Error& e) {
      throw Error(e.kind(), "design '" + cfg.design_id + "': " + e.message());
    }
    out.ranking.push_back(trajectory_metrics(cfg, t));
    out.trajectories.push_back(std::move(t));
  }
  std::stable_sort(out.ranking.begin(), out.ranking.end(), [](const DesignMetrics& a, const DesignMetrics& b) {
    return a.min_y < b.min_y;
  });
  return out;
}

inline FingerConfig finger_config_from_json(const nlohmann::json& j) {
  FingerConfig cfg;
  cfg.design_id = j.at("design_id").get<std::string>();
  const auto& stages = j.at("stages");
  if (!stages.is_array() || stages.size() != 3) {
    throw Error(ErrorKind::InvalidArgument, "design '" + cfg.design_id + "' needs 3 stages");
  }
  for (int k = 0; k < 3; ++k) {
    cfg.stages[k].b = stages[k].at("b").get<double>();
    cfg.stages[k].h = stages[k].at("h").get<double>();
    cfg.stages[k].stage_id = static_cast<StageId>(k);
    cfg.lengths[k] = j.at("lengths").at(k).get<double>();
    cfg.springs[k] = j.at("springs").at(k).get<double>();
    if (j.contains("limits")) cfg.limits[k] = j.at("limits").at(k).get<double>();
  }
  cfg.baseline = j.value("baseline", false);
  validate(cfg);
  return cfg;
}

inline nlohmann::json to_json(const FingerConfig& cfg) {
  nlohmann::json stages = nlohmann::json::array();
  for (const auto& s : cfg.stages) stages.push_back({{"b", s.b}, {"h", s.h}});
  return {{"design_id", cfg.design_id},
          {"lengths", cfg.lengths},
          {"stages", stages},
          {"springs", cfg.springs},
          {"limits", cfg.limits},
          {"baseline", cfg.baseline}};
}

struct DesignSet {
  std::vector<FingerConfig> designs;
  double displacement_max = 0.0;
  int steps = 0;
};

inline DesignSet design_set_from_json(const nlohmann::json& doc) {
  DesignSet set;
  for (const auto& d : doc.at("designs")) set.designs.push_back(finger_config_from_json(d));
  set.displacement_max = doc.value("displacement_max", 40.0);
  set.steps = doc.value("steps", 41);
  return set;
}

inline nlohmann::json to_json(const DesignSet& set) {
  nlohmann::json designs = nlohmann::json::array();
  for (const auto& d : set.designs) designs.push_back(to_json(d));
  return {{"designs", designs}, {"displacement_max", set.displacement_max}, {"steps", set.steps}};
}

inline nlohmann::json to_json(const DesignComparison& c) {
  nlohmann::json ranking = nlohmann::json::array();
  int rank = 1;
  for (const auto& m : c.ranking) {
    ranking.push_back({{"rank", rank++},
                       {"design_id", m.design_id},
                       {"baseline", m.baseline},
                       {"min_y_mm", m.min_y},
                       {"final_y_mm", m.final_point.y},
                       {"final_z_mm", m.final_point.z},
                       {"path_length_mm", m.path_length},
                       {"saturated", m.saturated}});
  }
  return {{"ranking", ranking}};
}

}  // namespace handkit
