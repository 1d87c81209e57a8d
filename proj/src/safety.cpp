#include "robotack/safety.hpp"

#include <algorithm>
#include <vector>

namespace robotack::world {

double compute_stopping_distance(double speed, double comfortable_decel) {
  if (!(comfortable_decel > 0.0)) throw ConfigError("comfortable deceleration must be positive");
  return speed * speed / (2.0 * comfortable_decel);
}

double longitudinal_gap(const KinematicState& ego, const Footprint& ego_footprint, double obj_lon,
                        double obj_length) {
  return (obj_lon - 0.5 * obj_length) - (ego.lon_pos + 0.5 * ego_footprint.length);
}

double compute_safety_envelope(std::span<const EnvelopeObject> objects, const KinematicState& ego,
                               const Footprint& ego_footprint, const LaneGeometry& lanes,
                               double horizon) {
  double best = horizon;
  const double ego_rear = ego.lon_pos - 0.5 * ego_footprint.length;
  for (const auto& o : objects) {
    if (!lanes.overlaps_ego_lane(o.lat_pos, o.width)) continue;
    if (o.lon_pos + 0.5 * o.length <= ego_rear) continue;
    const double gap = std::max(0.0, longitudinal_gap(ego, ego_footprint, o.lon_pos, o.length));
    best = std::min(best, gap);
  }
  return best;
}

double compute_safety_envelope(const WorldState& world, double horizon) {
  std::vector<EnvelopeObject> objs;
  objs.reserve(world.actors.size());
  for (const auto& a : world.actors)
    objs.push_back({a.state.lon_pos, a.state.lat_pos, a.footprint.length, a.footprint.width});
  return compute_safety_envelope(objs, world.ego.state, world.ego.footprint, world.lanes, horizon);
}

SafetyState safety_potential(double d_safe, double d_stop) {
  return {d_stop, d_safe, d_safe - d_stop};
}

}  // namespace robotack::world
