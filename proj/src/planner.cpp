#include "robotack/planner.hpp"

#include <algorithm>
#include <cmath>
#include <vector>

namespace robotack::world {

ActuationCommand ego_planner(const perception::WorldModelEstimate& perceived, const KinematicState& ego,
                             const PlannerConfig& cfg, bool eb_latched, PlanDiagnostics* diag) {
  const LaneGeometry lanes;
  const Footprint ego_fp = ego_footprint();

  // Lead = nearest registered in-lane object ahead.
  const perception::PerceivedObject* lead = nullptr;
  double lead_gap = kEnvelopeHorizon;
  for (const auto& o : perceived.objects) {
    if (!o.registered || !o.in_ego_lane) continue;
    if (o.lon_pos + 0.5 * o.length <= ego.lon_pos - 0.5 * ego_fp.length) continue;
    const double gap = std::max(0.0, longitudinal_gap(ego, ego_fp, o.lon_pos, o.length));
    if (gap < lead_gap) {
      lead_gap = gap;
      lead = &o;
    }
  }

  const double d_stop = compute_stopping_distance(ego.speed, cfg.comfortable_decel);
  const SafetyState s = safety_potential(lead_gap, d_stop);
  if (diag) *diag = {s.d_safe, s.d_stop, s.delta, lead ? lead->id : -1};

  const double trigger = eb_latched ? cfg.eb_threshold + cfg.eb_hysteresis : cfg.eb_threshold;
  if (lead && s.delta <= trigger) return {-cfg.max_brake, true};

  double v_target = kph_to_mps(cfg.cruise_kph);
  if (lead) {
    const double v_lead = std::max(0.0, lead->vel_lon);
    const double v_follow = v_lead + cfg.gap_gain * (lead_gap - cfg.follow_gap);
    const double v_cap = std::sqrt(2.0 * cfg.cap_decel * std::max(0.0, lead_gap - cfg.standoff));
    v_target = std::max(0.0, std::min({v_target, v_follow, v_cap}));
  }
  double a = cfg.speed_gain * (v_target - ego.speed);
  a = std::clamp(a, -cfg.max_brake, cfg.max_throttle);
  if (std::abs(a) < cfg.deadband) a = 0.0;
  return {a, false};
}

ActuationCommand pid_smooth(const ActuationCommand& prev_cmd, const ActuationCommand& raw_cmd,
                            const PlannerConfig& cfg) {
  if (raw_cmd.emergency_brake) return raw_cmd;
  const double step = cfg.max_jerk * cfg.dt;
  const double delta = std::clamp(raw_cmd.accel_cmd - prev_cmd.accel_cmd, -step, step);
  return {prev_cmd.accel_cmd + delta, false};
}

}  // namespace robotack::world
