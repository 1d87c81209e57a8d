#pragma once

#include <span>

#include "robotack/world.hpp"

namespace robotack::world {

// Crash threshold on ground-truth safety potential. Below it a run is
// recorded as a crash.
constexpr double kSafeDeltaMin = 4.0;
constexpr double kEnvelopeHorizon = 200.0;

struct SafetyState {
  double d_stop = 0.0;
  double d_safe = 0.0;
  double delta = 0.0;

  bool safe() const { return delta >= kSafeDeltaMin; }
};

// Anything the envelope can be measured against, ground truth or perceived.
struct EnvelopeObject {
  double lon_pos = 0.0;
  double lat_pos = 0.0;
  double length = 0.0;
  double width = 0.0;
};

// v^2 / (2 a). Throws ConfigError for non-positive deceleration.
double compute_stopping_distance(double speed, double comfortable_decel);

// Bumper-to-bumper longitudinal gap to the nearest object overlapping the ego
// lane, capped at horizon. Objects entirely behind the ego are ignored;
// longitudinal overlap yields 0.
double compute_safety_envelope(std::span<const EnvelopeObject> objects, const KinematicState& ego,
                               const Footprint& ego_footprint, const LaneGeometry& lanes,
                               double horizon = kEnvelopeHorizon);

// Ground-truth envelope over all non-ego actors.
double compute_safety_envelope(const WorldState& world, double horizon = kEnvelopeHorizon);

// Longitudinal bumper gap from ego to a single object, ignoring lanes.
double longitudinal_gap(const KinematicState& ego, const Footprint& ego_footprint, double obj_lon,
                        double obj_length);

SafetyState safety_potential(double d_safe, double d_stop);

}  // namespace robotack::world
