#include "robotack/world.hpp"

#include <algorithm>
#include <cmath>
#include <random>

#include "robotack/rng.hpp"

namespace robotack::world {

namespace {

constexpr int kEgoId = 0;
constexpr int kTargetId = 1;
constexpr double kPedestrianWalk = 1.4;  // m/s
constexpr double kFarAhead = 1.0e5;

Actor make_actor(int id, const ActorSpec& spec) {
  Actor a;
  a.id = id;
  a.cls = spec.cls;
  a.state.lon_pos = spec.lon_pos;
  a.state.lat_pos = spec.lat_pos;
  a.state.speed = spec.start_delay > 0.0 ? 0.0 : spec.speed;
  a.footprint = spec.footprint.value_or(default_footprint(spec.cls));
  a.waypoints = spec.waypoints;
  a.start_delay = spec.start_delay;
  return a;
}

ActorSpec cruising_vehicle(double lon, double lat, double speed) {
  ActorSpec s;
  s.cls = ObjectClass::Vehicle;
  s.lon_pos = lon;
  s.lat_pos = lat;
  s.speed = speed;
  s.waypoints = {{kFarAhead, lat, speed}};
  return s;
}

std::vector<ActorSpec> default_actors(const ScenarioConfig& config, double ego_speed) {
  std::vector<ActorSpec> out;
  const LaneGeometry lanes;
  switch (config.scenario_id) {
    case ScenarioId::DS1:
      out.push_back(cruising_vehicle(60.0, 0.0, kph_to_mps(25.0)));
      break;
    case ScenarioId::DS2: {
      // Pedestrian waits at the parking-lane edge and crosses once the ego
      // is about 44 m away (bumper gap), assuming the ego cruises.
      ActorSpec ped;
      ped.cls = ObjectClass::Pedestrian;
      ped.lon_pos = 100.0;
      ped.lat_pos = -2.8;
      ped.speed = kPedestrianWalk;
      const double half_lengths = 0.5 * (ego_footprint().length + default_footprint(ped.cls).length);
      ped.start_delay = std::max(0.0, (ped.lon_pos - half_lengths - 44.0) / std::max(ego_speed, 1.0));
      ped.waypoints = {{ped.lon_pos, 7.5, kPedestrianWalk}};
      out.push_back(ped);
      break;
    }
    case ScenarioId::DS3: {
      ActorSpec parked;
      parked.cls = ObjectClass::Vehicle;
      parked.lon_pos = 120.0;
      parked.lat_pos = lanes.parking_lane_center;
      parked.speed = 0.0;
      out.push_back(parked);
      break;
    }
    case ScenarioId::DS4: {
      ActorSpec ped;
      ped.cls = ObjectClass::Pedestrian;
      ped.lon_pos = 110.0;
      ped.lat_pos = lanes.parking_lane_center;
      ped.speed = kPedestrianWalk;
      ped.waypoints = {{ped.lon_pos - 5.0, lanes.parking_lane_center, kPedestrianWalk}};
      out.push_back(ped);
      break;
    }
    case ScenarioId::DS5: {
      // Target vehicle already at the follow distance; NPCs at random
      // speeds/positions in the adjacent lane and ahead/behind in the ego lane.
      const double tv_speed = kph_to_mps(25.0);
      out.push_back(cruising_vehicle(20.0 + 0.5 * (ego_footprint().length + 4.5), 0.0, tv_speed));
      Rng rng = make_stream(config.rng_seed, Stream::Scenario);
      std::uniform_real_distribution<double> u01(0.0, 1.0);
      for (int i = 0; i < 20; ++i) {
        const double pick = u01(rng);
        if (pick < 0.6) {
          const double lon = -60.0 + 260.0 * u01(rng);
          const double speed = kph_to_mps(20.0 + 30.0 * u01(rng));
          out.push_back(cruising_vehicle(lon, lanes.adjacent_lane_center, speed));
        } else if (pick < 0.85) {
          // Ahead of the target and at least as fast, so lane order holds.
          const double lon = 90.0 + 150.0 * u01(rng);
          const double speed = tv_speed + kph_to_mps(20.0 * u01(rng));
          out.push_back(cruising_vehicle(lon, 0.0, speed));
        } else {
          const double lon = -30.0 - 80.0 * u01(rng);
          const double speed = kph_to_mps(15.0 + 10.0 * u01(rng));
          out.push_back(cruising_vehicle(lon, 0.0, speed));
        }
      }
      break;
    }
  }
  return out;
}

double default_ego_kph(ScenarioId id) {
  switch (id) {
    case ScenarioId::DS1: return 25.0;
    case ScenarioId::DS5: return 25.0;
    default: return 45.0;
  }
}

void advance_actor(Actor& a, double time, double dt) {
  const double old_speed = a.state.speed;
  double new_speed = 0.0;
  if (time >= a.start_delay && a.next_waypoint < a.waypoints.size()) {
    const Waypoint& wp = a.waypoints[a.next_waypoint];
    const double dlon = wp.lon_pos - a.state.lon_pos;
    const double dlat = wp.lat_pos - a.state.lat_pos;
    const double dist = std::hypot(dlon, dlat);
    const double step = wp.speed * dt;
    new_speed = wp.speed;
    if (dist > 0.0) a.state.heading = std::atan2(dlat, dlon);
    if (step >= dist) {
      a.state.lon_pos = wp.lon_pos;
      a.state.lat_pos = wp.lat_pos;
      ++a.next_waypoint;
    } else {
      a.state.lon_pos += step * dlon / dist;
      a.state.lat_pos += step * dlat / dist;
    }
  }
  a.state.speed = new_speed;
  a.state.accel = (new_speed - old_speed) / dt;
}

}  // namespace

bool LaneGeometry::overlaps_ego_lane(double lat, double width) const {
  return lat + 0.5 * width > ego_lane_right() && lat - 0.5 * width < ego_lane_left();
}

const Actor* WorldState::find_actor(int id) const {
  for (const auto& a : actors)
    if (a.id == id) return &a;
  return nullptr;
}

std::int64_t ScenarioConfig::frames() const {
  return static_cast<std::int64_t>(std::llround(duration * frame_rate));
}

Footprint default_footprint(ObjectClass cls) {
  return cls == ObjectClass::Vehicle ? Footprint{4.5, 1.8} : Footprint{0.6, 0.6};
}

Footprint ego_footprint() { return {4.0, 1.8}; }

int scenario_target_id(ScenarioId) { return kTargetId; }

WorldState build_scenario(const ScenarioConfig& config) {
  if (!(config.frame_rate > 0.0)) throw ConfigError("frame_rate must be positive");
  if (!(config.duration > 0.0)) throw ConfigError("duration must be positive");
  if (static_cast<int>(config.scenario_id) > static_cast<int>(ScenarioId::DS5))
    throw ConfigError("unknown scenario id");

  WorldState w;
  w.frame_rate = config.frame_rate;
  w.ego.id = kEgoId;
  w.ego.cls = ObjectClass::Vehicle;
  w.ego.footprint = ego_footprint();
  w.ego.state.speed = kph_to_mps(config.ego_initial_kph.value_or(default_ego_kph(config.scenario_id)));

  const auto specs = config.actors.empty() ? default_actors(config, w.ego.state.speed) : config.actors;
  int next_id = kTargetId;
  for (const auto& spec : specs) {
    if (!(spec.speed >= 0.0)) throw ConfigError("actor speed must be non-negative");
    for (const auto& wp : spec.waypoints)
      if (!(wp.speed >= 0.0)) throw ConfigError("waypoint speed must be non-negative");
    Actor a = make_actor(next_id++, spec);
    if (!(a.footprint.length > 0.0 && a.footprint.width > 0.0))
      throw ConfigError("actor footprint must be positive");
    w.actors.push_back(std::move(a));
  }
  return w;
}

WorldState step_world(const WorldState& world, const ActuationCommand& ego_cmd, double dt) {
  WorldState next = world;
  auto& ego = next.ego.state;
  const double v0 = ego.speed;
  const double a = ego_cmd.accel_cmd;
  const double v1 = v0 + a * dt;
  if (v1 < 0.0) {
    // Stops within the step; no reversing.
    ego.lon_pos += a < 0.0 ? v0 * v0 / (-2.0 * a) : 0.0;
    ego.speed = 0.0;
    ego.accel = 0.0;
  } else {
    ego.lon_pos += v0 * dt + 0.5 * a * dt * dt;
    ego.speed = v1;
    ego.accel = a;
  }
  for (auto& actor : next.actors) advance_actor(actor, world.time, dt);
  next.time = world.time + dt;
  next.frame = static_cast<std::int64_t>(std::llround(next.time * next.frame_rate));
  return next;
}

}  // namespace robotack::world
