#pragma once

#include <cstdint>
#include <iosfwd>
#include <optional>
#include <string>
#include <vector>

#include "robotack/attack.hpp"
#include "robotack/fusion.hpp"
#include "robotack/planner.hpp"
#include "robotack/sensing.hpp"
#include "robotack/tracker.hpp"
#include "robotack/world.hpp"

namespace robotack::sim {

struct SimConfig {
  world::ScenarioConfig scenario;
  sensing::SensorChannelConfig camera = sensing::SensorChannelConfig::camera_default();
  sensing::SensorChannelConfig range = sensing::SensorChannelConfig::range_default();
  perception::TrackerParams tracker;
  perception::FusionPolicy fusion;
  world::PlannerConfig planner;
  attack::AttackerConfig attacker;  // Mode::None gives golden runs
  bool halt_on_crash = false;
  // Stop this many frames after an injected episode's label frame (data
  // collection only); negative runs the full scenario.
  int stop_after_label = -1;
};

struct FrameRecord {
  std::int64_t frame = 0;
  double time = 0.0;
  double ego_lon = 0.0;
  double ego_speed = 0.0;
  double accel_cmd = 0.0;
  bool emergency_brake = false;
  double d_safe = 0.0;  // ground truth, in-lane objects
  double d_stop = 0.0;
  double delta_truth = 0.0;
  double delta_perceived = 0.0;  // planner's view
};

// Optional CSV sinks for a single run.
struct SimLogs {
  std::ostream* world = nullptr;
  std::ostream* tracks = nullptr;
  std::ostream* attack = nullptr;
  std::ostream* detections = nullptr;  // camera stream as the ADS saw it
};

struct SimResult {
  bool valid = true;
  std::string invalid_reason;
  bool eb_occurred = false;
  bool crash_occurred = false;  // min ground-truth delta < 4 m
  double min_delta = world::kEnvelopeHorizon;
  std::int64_t frames = 0;
  attack::AttackState attack;                    // final attacker state
  std::vector<attack::AttackLogRow> attack_log;  // frames with an active episode
  std::vector<FrameRecord> frame_log;
  // Injection runs: ground-truth delta against the target at start + k
  // (MoveIn: lowest perceived delta over the attack, capped at the trigger delta).
  std::optional<double> label;
};

// Longitudinal safety potential against one actor, ignoring lanes.
double target_delta_truth(const world::WorldState& w, int actor_id, double comfortable_decel);

// One closed-loop run. Each frame: render camera and range, attack the camera
// stream, track, fuse, plan, smooth, then advance ground truth.
SimResult run_simulation(const SimConfig& cfg, const attack::PredictorRegistry& predictors, std::uint64_t run_seed,
                         const SimLogs* logs = nullptr);

void write_world_log_header(std::ostream& out);
void append_world_log(std::ostream& out, const FrameRecord& r);

}  // namespace robotack::sim
