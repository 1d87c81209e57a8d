#include "robotack/tracker.hpp"

#include <algorithm>
#include <cmath>

#include "robotack/hungarian.hpp"
#include "robotack/iou.hpp"

namespace robotack::perception {

namespace {
constexpr double kForbidden = 1e6;

Eigen::Matrix<double, 2, 4> measurement_matrix() {
  Eigen::Matrix<double, 2, 4> H = Eigen::Matrix<double, 2, 4>::Zero();
  H(0, 0) = 1.0;
  H(1, 1) = 1.0;
  return H;
}
}  // namespace

Mat4 KalmanParams::Q(double dt) const {
  const double s = dt / nominal_dt;
  Vec4 d(q_pos, q_pos, q_vel, q_vel);
  return (d * s).asDiagonal();
}

Eigen::Matrix2d KalmanParams::R(ObjectClass cls, double w, double h) const {
  const auto& n = cls == ObjectClass::Vehicle ? vehicle_noise : pedestrian_noise;
  Eigen::Matrix2d r = Eigen::Matrix2d::Zero();
  r(0, 0) = std::max(r_floor, std::pow(n.sigma_x * w, 2));
  r(1, 1) = std::max(r_floor, std::pow(n.sigma_y * h, 2));
  return r;
}

const Track* TrackSet::find(int track_id) const {
  for (const auto& t : tracks)
    if (t.track_id == track_id) return &t;
  return nullptr;
}

Track kf_predict(const Track& track, double dt, const KalmanParams& kf) {
  Mat4 F = Mat4::Identity();
  F(0, 2) = dt;
  F(1, 3) = dt;
  Track t = track;
  t.mean = F * track.mean;
  t.covariance = F * track.covariance * F.transpose() + kf.Q(dt);
  t.covariance = 0.5 * (t.covariance + t.covariance.transpose());
  return t;
}

Track kf_update(const Track& track, const sensing::Detection& det, const Eigen::Matrix2d& R) {
  const auto H = measurement_matrix();
  const Eigen::Vector2d z(det.bbox.cx, det.bbox.cy);
  const Eigen::Vector2d y = z - H * track.mean;
  const Eigen::Matrix2d S = H * track.covariance * H.transpose() + R;
  const Eigen::LLT<Eigen::Matrix2d> llt(S);
  if (llt.info() != Eigen::Success || !S.allFinite())
    throw RuntimeFailure("kf_update: innovation covariance is not positive definite");
  const Eigen::Matrix<double, 4, 2> K = llt.solve(H * track.covariance).transpose();

  Track t = track;
  t.mean = track.mean + K * y;
  // Joseph form keeps the covariance symmetric PSD.
  const Mat4 I_KH = Mat4::Identity() - K * H;
  t.covariance = I_KH * track.covariance * I_KH.transpose() + K * R * K.transpose();
  t.covariance = 0.5 * (t.covariance + t.covariance.transpose());
  t.consecutive_misses = 0;
  return t;
}

AssociationResult associate(const TrackSet& tracks, const std::vector<sensing::Detection>& dets, double gate) {
  AssociationResult out;
  const auto& ts = tracks.tracks;
  if (ts.empty() || dets.empty()) {
    for (const auto& t : ts) out.unmatched_tracks.push_back(t.track_id);
    for (int j = 0; j < static_cast<int>(dets.size()); ++j) out.unmatched_detections.push_back(j);
    return out;
  }

  CostMatrix cost(ts.size(), std::vector<double>(dets.size(), kForbidden));
  for (std::size_t i = 0; i < ts.size(); ++i) {
    for (std::size_t j = 0; j < dets.size(); ++j) {
      if (ts[i].cls != dets[j].cls) continue;
      const double c = 1.0 - iou(ts[i].bbox(), dets[j].bbox);
      if (c <= gate) cost[i][j] = c;
    }
  }

  std::vector<char> track_used(ts.size(), 0), det_used(dets.size(), 0);
  for (auto [i, j] : hungarian_assign(cost)) {
    if (cost[i][j] >= kForbidden) continue;
    out.matches.push_back({ts[i].track_id, j, cost[i][j]});
    track_used[i] = det_used[j] = 1;
  }
  for (std::size_t i = 0; i < ts.size(); ++i)
    if (!track_used[i]) out.unmatched_tracks.push_back(ts[i].track_id);
  for (std::size_t j = 0; j < dets.size(); ++j)
    if (!det_used[j]) out.unmatched_detections.push_back(static_cast<int>(j));
  return out;
}

TrackSet mot_step(const TrackSet& tracks, const std::vector<sensing::Detection>& dets, double dt,
                  const TrackerParams& params) {
  TrackSet predicted = tracks;
  predicted.frame = tracks.frame + 1;
  for (auto& t : predicted.tracks) {
    t = kf_predict(t, dt, params.kf);
    ++t.age;
  }

  const auto assoc = associate(predicted, dets, params.gate);

  TrackSet out;
  out.frame = predicted.frame;
  out.next_id = predicted.next_id;
  std::vector<int> matched_det(predicted.tracks.size(), -1);
  for (const auto& m : assoc.matches) {
    for (std::size_t i = 0; i < predicted.tracks.size(); ++i)
      if (predicted.tracks[i].track_id == m.track_id) matched_det[i] = m.detection;
  }

  for (std::size_t i = 0; i < predicted.tracks.size(); ++i) {
    Track t = predicted.tracks[i];
    if (matched_det[i] >= 0) {
      const auto& d = dets[matched_det[i]];
      t = kf_update(t, d, params.kf.R(t.cls, d.bbox.w, d.bbox.h));
      t.width += params.size_alpha * (d.bbox.w - t.width);
      t.length += params.size_alpha * (d.bbox.h - t.length);
      ++t.hits;
      if (t.hits >= params.confirm_hits) t.confirmed = true;
    } else {
      ++t.consecutive_misses;
      t.hits = 0;
      if (!t.confirmed || t.consecutive_misses > params.max_misses) continue;
    }
    t.history.push_back(t.mean);
    while (t.history.size() > params.history_len) t.history.pop_front();
    out.tracks.push_back(std::move(t));
  }

  for (int j : assoc.unmatched_detections) {
    const auto& d = dets[j];
    Track t;
    t.track_id = out.next_id++;
    t.cls = d.cls;
    t.mean = Vec4(d.bbox.cx, d.bbox.cy, 0.0, 0.0);
    const auto R = params.kf.R(d.cls, d.bbox.w, d.bbox.h);
    t.covariance = Vec4(R(0, 0), R(1, 1), params.kf.p0_vel, params.kf.p0_vel).asDiagonal();
    t.width = d.bbox.w;
    t.length = d.bbox.h;
    t.age = 1;
    t.hits = 1;
    t.confirmed = params.confirm_hits <= 1;
    t.history.push_back(t.mean);
    out.tracks.push_back(std::move(t));
  }
  return out;
}

TrajectoryEstimate estimate_trajectory(const Track& track, double dt, std::size_t window) {
  TrajectoryEstimate e;
  e.vel_lat = track.mean(2);
  e.vel_lon = track.mean(3);
  const auto& h = track.history;
  if (h.size() < 3 || window < 1) return e;
  const std::size_t k = std::min(window, h.size() - 1);
  const Vec4& now = h.back();
  const Vec4& then = h[h.size() - 1 - k];
  const double span = static_cast<double>(k) * dt;
  e.accel_lat = (now(2) - then(2)) / span;
  e.accel_lon = (now(3) - then(3)) / span;
  e.accel_valid = true;
  return e;
}

}  // namespace robotack::perception
