#pragma once

#include <vector>

#include "robotack/types.hpp"

namespace robotack::perception {

// One object of the fused world model the planner consumes.
struct PerceivedObject {
  int id = 0;
  ObjectClass cls = ObjectClass::Vehicle;
  double lon_pos = 0.0;
  double lat_pos = 0.0;
  double vel_lon = 0.0;  // absolute, m/s
  double vel_lat = 0.0;
  double accel_lon = 0.0;
  double length = 0.0;
  double width = 0.0;
  bool in_ego_lane = false;
  bool registered = false;
};

struct WorldModelEstimate {
  std::vector<PerceivedObject> objects;
};

}  // namespace robotack::perception
