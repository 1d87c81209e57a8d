#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "robotack/types.hpp"

namespace robotack::world {

constexpr double kph_to_mps(double kph) { return kph / 3.6; }

struct KinematicState {
  double lon_pos = 0.0;  // m, along lane
  double lat_pos = 0.0;  // m, positive = left of ego-lane center
  double speed = 0.0;    // m/s
  double accel = 0.0;    // m/s^2
  double heading = 0.0;  // rad, 0 = along lane

  friend bool operator==(const KinematicState&, const KinematicState&) = default;
};

struct Footprint {
  double length = 4.0;
  double width = 1.8;

  friend bool operator==(const Footprint&, const Footprint&) = default;
};

struct Waypoint {
  double lon_pos = 0.0;
  double lat_pos = 0.0;
  double speed = 0.0;  // speed used while travelling toward this waypoint

  friend bool operator==(const Waypoint&, const Waypoint&) = default;
};

struct Actor {
  int id = 0;
  ObjectClass cls = ObjectClass::Vehicle;
  KinematicState state;
  Footprint footprint;
  std::vector<Waypoint> waypoints;
  double start_delay = 0.0;      // s; the actor holds still until then
  std::size_t next_waypoint = 0;

  Bbox box() const { return {state.lat_pos, state.lon_pos, footprint.width, footprint.length}; }

  friend bool operator==(const Actor&, const Actor&) = default;
};

// Ego lane is centered at lat 0. The adjacent travel lane is to the left,
// the parking lane to the right.
struct LaneGeometry {
  double lane_width = 3.5;
  double adjacent_lane_center = 3.5;
  double parking_lane_center = -3.0;
  double road_half_width = 8.0;

  double ego_lane_left() const { return 0.5 * lane_width; }
  double ego_lane_right() const { return -0.5 * lane_width; }
  // True when a lateral extent [lat - w/2, lat + w/2] overlaps the ego lane.
  bool overlaps_ego_lane(double lat, double width) const;

  friend bool operator==(const LaneGeometry&, const LaneGeometry&) = default;
};

struct WorldState {
  double time = 0.0;
  std::int64_t frame = 0;
  double frame_rate = 15.0;
  Actor ego;
  std::vector<Actor> actors;
  LaneGeometry lanes;

  const Actor* find_actor(int id) const;

  friend bool operator==(const WorldState&, const WorldState&) = default;
};

struct ActuationCommand {
  double accel_cmd = 0.0;  // m/s^2, negative = braking
  bool emergency_brake = false;

  friend bool operator==(const ActuationCommand&, const ActuationCommand&) = default;
};

struct ActorSpec {
  ObjectClass cls = ObjectClass::Vehicle;
  double lon_pos = 0.0;
  double lat_pos = 0.0;
  double speed = 0.0;
  std::optional<Footprint> footprint;
  std::vector<Waypoint> waypoints;
  double start_delay = 0.0;
};

struct ScenarioConfig {
  ScenarioId scenario_id = ScenarioId::DS1;
  double duration = 45.0;           // s
  double frame_rate = 15.0;         // Hz
  double ego_cruise_kph = 45.0;
  std::optional<double> ego_initial_kph;  // scenario default when unset
  std::vector<ActorSpec> actors;    // overrides the scenario's default actors when non-empty
  std::uint64_t rng_seed = 0;

  std::int64_t frames() const;
  double dt() const { return 1.0 / frame_rate; }
};

Footprint default_footprint(ObjectClass cls);
Footprint ego_footprint();

// Initial world for a driving scenario. Deterministic in config.rng_seed.
WorldState build_scenario(const ScenarioConfig& config);

// Advances ground truth by dt. The ego integrates the commanded acceleration
// (speed clamped at 0); every other actor follows its waypoints.
WorldState step_world(const WorldState& world, const ActuationCommand& ego_cmd, double dt);

// The actor whose id was designated as the scenario's target (TV/TO), if any.
int scenario_target_id(ScenarioId id);

}  // namespace robotack::world
