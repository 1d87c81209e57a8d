#include "robotack/fusion.hpp"

#include <algorithm>
#include <cmath>
#include <ostream>
#include <tuple>

namespace robotack::perception {

WorldModelEstimate fuse(const TrackSet& camera_tracks, const std::vector<sensing::Detection>& range_dets,
                        const world::KinematicState& ego, const FusionPolicy& policy) {
  std::vector<const Track*> live;
  for (const auto& t : camera_tracks.tracks)
    if (t.confirmed && t.consecutive_misses <= policy.drop_grace) live.push_back(&t);

  // Globally nearest-first pairing, so a displaced track cannot claim the
  // range return of an object another track sits on.
  struct Pair {
    double dist;
    std::size_t track, det;
  };
  std::vector<Pair> pairs;
  for (std::size_t i = 0; i < live.size(); ++i) {
    for (std::size_t j = 0; j < range_dets.size(); ++j) {
      const auto& d = range_dets[j];
      if (d.cls != live[i]->cls) continue;
      const double dlon = std::abs(d.bbox.cy - live[i]->mean(1));
      const double dlat = std::abs(d.bbox.cx - live[i]->mean(0));
      if (dlon > policy.gate_lon || dlat > policy.gate_lat) continue;
      pairs.push_back({std::hypot(dlon, dlat), i, j});
    }
  }
  std::sort(pairs.begin(), pairs.end(), [](const Pair& a, const Pair& b) {
    return std::tie(a.dist, a.track, a.det) < std::tie(b.dist, b.track, b.det);
  });
  std::vector<int> match(live.size(), -1);
  std::vector<char> used(range_dets.size(), 0);
  for (const auto& p : pairs) {
    if (match[p.track] >= 0 || used[p.det]) continue;
    match[p.track] = static_cast<int>(p.det);
    used[p.det] = 1;
  }

  WorldModelEstimate out;
  for (std::size_t i = 0; i < live.size(); ++i) {
    const Track& t = *live[i];
    const int best = match[i];
    const double reach = t.cls == ObjectClass::Vehicle ? policy.range_vehicle : policy.range_pedestrian;
    const double range = std::hypot(t.mean(1) - ego.lon_pos, t.mean(0) - ego.lat_pos);

    const auto traj = estimate_trajectory(t, policy.dt);
    PerceivedObject o;
    o.id = t.track_id;
    o.cls = t.cls;
    o.lat_pos = t.mean(0);
    o.lon_pos = best >= 0 ? range_dets[best].bbox.cy : t.mean(1);
    o.vel_lat = traj.vel_lat;
    o.vel_lon = traj.vel_lon;
    o.accel_lon = traj.accel_lon;
    o.width = t.width;
    o.length = t.length;
    o.in_ego_lane = policy.lanes.overlaps_ego_lane(o.lat_pos, o.width);
    o.registered = best >= 0 || range > reach;
    out.objects.push_back(o);
  }
  return out;
}

void write_track_log_header(std::ostream& out) { out << "frame,track_id,class,cx,cy,vx,vy,confirmed,misses\n"; }

void append_track_log(std::ostream& out, const TrackSet& tracks) {
  for (const auto& t : tracks.tracks) {
    out << tracks.frame << ',' << t.track_id << ',' << to_string(t.cls) << ',' << t.mean(0) << ',' << t.mean(1)
        << ',' << t.mean(2) << ',' << t.mean(3) << ',' << (t.confirmed ? 1 : 0) << ',' << t.consecutive_misses
        << '\n';
  }
}

}  // namespace robotack::perception
