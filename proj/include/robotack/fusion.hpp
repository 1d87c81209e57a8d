#pragma once

#include <filesystem>
#include <iosfwd>
#include <vector>

#include "robotack/estimate.hpp"
#include "robotack/tracker.hpp"
#include "robotack/world.hpp"

namespace robotack::perception {

struct FusionPolicy {
  double gate_lon = 3.0;  // m, range detection to camera track
  double gate_lat = 3.5;  // m
  int drop_grace = 3;     // frames a confirmed track may go without a camera update
  double range_vehicle = 80.0;  // range-channel effective ranges
  double range_pedestrian = 35.0;
  double dt = 1.0 / 15.0;
  world::LaneGeometry lanes;
};

// Camera-gated fusion. A confirmed camera track is registered when a range
// detection of the same class lies within the gate, or when the object is
// beyond the range channel's reach. Lateral position always comes from the
// camera track; longitudinal from the range detection when one matched.
// Tracks with more than drop_grace consecutive misses are left out.
WorldModelEstimate fuse(const TrackSet& camera_tracks, const std::vector<sensing::Detection>& range_dets,
                        const world::KinematicState& ego, const FusionPolicy& policy = {});

// CSV: frame,track_id,class,cx,cy,vx,vy,confirmed,misses
void write_track_log_header(std::ostream& out);
void append_track_log(std::ostream& out, const TrackSet& tracks);

}  // namespace robotack::perception
