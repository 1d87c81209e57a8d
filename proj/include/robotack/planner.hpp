#pragma once

#include "robotack/estimate.hpp"
#include "robotack/safety.hpp"
#include "robotack/world.hpp"

namespace robotack::world {

struct PlannerConfig {
  double cruise_kph = 45.0;
  double follow_gap = 20.0;          // m, bumper to bumper
  double comfortable_decel = 5.0;    // m/s^2, used for d_stop
  double max_brake = 8.0;            // m/s^2, emergency deceleration
  double max_throttle = 0.5;         // m/s^2
  double max_jerk = 5.0;             // m/s^3
  double eb_threshold = 10.0;        // m, perceived delta that triggers emergency braking
  double eb_hysteresis = 2.0;        // m
  double standoff = 12.0;            // m, gap held when closing on a stopped in-lane object
  double cap_decel = 3.5;            // m/s^2, approach profile toward the standoff
  double gap_gain = 0.3;             // 1/s, follow speed correction per meter of gap error
  double speed_gain = 1.0;           // 1/s
  double deadband = 0.05;            // m/s^2
  double dt = 1.0 / 15.0;            // s
};

struct PlanDiagnostics {
  double d_safe = kEnvelopeHorizon;
  double d_stop = 0.0;
  double delta = kEnvelopeHorizon;
  int lead_id = -1;
};

// Speed planner over the perceived world model (never ground truth).
// `eb_latched` is the previous frame's emergency_brake flag; braking releases
// only once the perceived delta exceeds threshold + hysteresis.
ActuationCommand ego_planner(const perception::WorldModelEstimate& perceived, const KinematicState& ego,
                             const PlannerConfig& cfg, bool eb_latched = false,
                             PlanDiagnostics* diag = nullptr);

// Jerk-limited smoothing of the raw command. Emergency braking bypasses it.
ActuationCommand pid_smooth(const ActuationCommand& prev_cmd, const ActuationCommand& raw_cmd,
                            const PlannerConfig& cfg);

}  // namespace robotack::world
