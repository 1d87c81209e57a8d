#pragma once

#include <Eigen/Dense>
#include <cstdint>
#include <deque>
#include <vector>

#include "robotack/sensing.hpp"

namespace robotack::perception {

using Vec4 = Eigen::Vector4d;
using Mat4 = Eigen::Matrix4d;

// State layout [cx, cy, vx, vy]: lateral, longitudinal, and their rates.
struct KalmanParams {
  double q_pos = 0.01;  // m^2 per frame
  double q_vel = 0.05;  // (m/s)^2 per frame
  double nominal_dt = 1.0 / 15.0;
  double p0_vel = 25.0;  // (m/s)^2
  // Measurement noise comes from the detector model, scaled by box size.
  sensing::GaussianNoiseModel vehicle_noise = sensing::SensorChannelConfig::camera_default().vehicle.noise;
  sensing::GaussianNoiseModel pedestrian_noise = sensing::SensorChannelConfig::camera_default().pedestrian.noise;
  double r_floor = 1e-6;  // m^2

  Mat4 Q(double dt) const;
  Eigen::Matrix2d R(ObjectClass cls, double w, double h) const;
};

struct Track {
  int track_id = 0;
  ObjectClass cls = ObjectClass::Vehicle;
  Vec4 mean = Vec4::Zero();
  Mat4 covariance = Mat4::Zero();
  double width = 1.0;   // smoothed lateral extent
  double length = 1.0;  // smoothed longitudinal extent
  int age = 0;          // frames since birth
  int hits = 0;         // consecutive frames with a matched detection
  int consecutive_misses = 0;
  bool confirmed = false;
  std::deque<Vec4> history;  // most recent last

  Bbox bbox() const { return {mean(0), mean(1), width, length}; }
};

struct TrackSet {
  std::vector<Track> tracks;
  std::int64_t frame = 0;
  int next_id = 1;

  const Track* find(int track_id) const;
};

struct AssociationMatch {
  int track_id = 0;
  int detection = 0;
  double cost = 0.0;
};

struct AssociationResult {
  std::vector<AssociationMatch> matches;
  std::vector<int> unmatched_tracks;      // track ids
  std::vector<int> unmatched_detections;  // detection indices
};

struct TrackerParams {
  KalmanParams kf;
  double gate = 0.7;  // max 1 - IoU for a match
  int confirm_hits = 3;
  int max_misses = 60;
  double size_alpha = 0.3;
  std::size_t history_len = 30;
};

Track kf_predict(const Track& track, double dt, const KalmanParams& kf = {});
// Throws RuntimeFailure when the innovation covariance is not positive definite.
Track kf_update(const Track& track, const sensing::Detection& det, const Eigen::Matrix2d& R);

// Cost 1 - IoU between each track's current box and each detection; pairs
// of different classes or with cost above `gate` are never matched.
AssociationResult associate(const TrackSet& tracks, const std::vector<sensing::Detection>& dets, double gate);

// Predict, associate, update, spawn, age out. Tentative tracks die on their
// first miss; confirmed tracks survive up to max_misses consecutive misses.
TrackSet mot_step(const TrackSet& tracks, const std::vector<sensing::Detection>& dets, double dt,
                  const TrackerParams& params = {});

struct TrajectoryEstimate {
  double vel_lat = 0.0;
  double vel_lon = 0.0;
  double accel_lat = 0.0;
  double accel_lon = 0.0;
  bool accel_valid = false;  // false when history is shorter than 3
};

// Velocity from the filter; acceleration as the finite difference of
// filtered velocity across up to `window` frames of history.
TrajectoryEstimate estimate_trajectory(const Track& track, double dt, std::size_t window = 5);

}  // namespace robotack::perception
