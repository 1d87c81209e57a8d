#include <gtest/gtest.h>

#include <algorithm>
#include <numeric>

#include "robotack/fusion.hpp"
#include "robotack/hungarian.hpp"
#include "robotack/iou.hpp"
#include "robotack/tracker.hpp"

using namespace robotack;
using namespace robotack::perception;
using sensing::Detection;

namespace {

double brute_force_min(const CostMatrix& c) {
  const int rows = static_cast<int>(c.size());
  const int cols = static_cast<int>(c[0].size());
  const int n = std::max(rows, cols);
  std::vector<int> perm(n);
  std::iota(perm.begin(), perm.end(), 0);
  double best = 1e300;
  do {
    double total = 0.0;
    for (int i = 0; i < rows; ++i)
      if (perm[i] < cols) total += c[i][perm[i]];
    best = std::min(best, total);
  } while (std::next_permutation(perm.begin(), perm.end()));
  return best;
}

Detection det(double cx, double cy, ObjectClass cls = ObjectClass::Vehicle, double w = 1.8, double h = 4.5) {
  return {0, Channel::Camera, -1, cls, {cx, cy, w, h}};
}

bool is_psd(const Mat4& m) {
  Eigen::SelfAdjointEigenSolver<Mat4> es(m);
  return es.eigenvalues().minCoeff() >= -1e-9 && (m - m.transpose()).cwiseAbs().maxCoeff() < 1e-9;
}

}  // namespace

TEST(Iou, Examples) {
  const Bbox a{0, 0, 1, 1};
  EXPECT_EQ(iou(a, a), 1.0);
  EXPECT_EQ(iou(a, Bbox{5, 5, 1, 1}), 0.0);
  EXPECT_NEAR(iou(a, Bbox{0.5, 0, 1, 1}), 1.0 / 3.0, 1e-12);
  EXPECT_THROW(iou(a, Bbox{0, 0, 0, 1}), std::invalid_argument);
}

TEST(Iou, SymmetricAndBounded) {
  robotack::Rng rng(1);
  std::uniform_real_distribution<double> pos(-3, 3), size(0.2, 4);
  for (int i = 0; i < 2000; ++i) {
    Bbox a{pos(rng), pos(rng), size(rng), size(rng)};
    Bbox b{pos(rng), pos(rng), size(rng), size(rng)};
    const double ab = iou(a, b);
    EXPECT_EQ(ab, iou(b, a));
    EXPECT_GE(ab, 0.0);
    EXPECT_LE(ab, 1.0);
  }
}

TEST(Hungarian, Examples) {
  auto r = hungarian_assign({{0, 1}, {1, 0}});
  EXPECT_EQ(r, (std::vector<std::pair<int, int>>{{0, 0}, {1, 1}}));
  const CostMatrix c{{4, 1}, {2, 8}};
  r = hungarian_assign(c);
  EXPECT_EQ(r, (std::vector<std::pair<int, int>>{{0, 1}, {1, 0}}));
  EXPECT_EQ(assignment_cost(c, r), 3.0);
  EXPECT_TRUE(hungarian_assign({}).empty());
}

TEST(Hungarian, MatchesBruteForceUpTo7) {
  robotack::Rng rng(7);
  std::uniform_int_distribution<int> dim(1, 7);
  std::uniform_real_distribution<double> val(0.0, 10.0);
  for (int trial = 0; trial < 1000; ++trial) {
    const int rows = dim(rng), cols = dim(rng);
    CostMatrix c(rows, std::vector<double>(cols));
    for (auto& row : c)
      for (auto& x : row) x = std::round(val(rng) * 4) / 4;  // ties exercised, totals exact
    const auto r = hungarian_assign(c);
    EXPECT_EQ(static_cast<int>(r.size()), std::min(rows, cols));
    EXPECT_EQ(assignment_cost(c, r), brute_force_min(c)) << rows << "x" << cols;
  }
}

TEST(Kalman, PredictConstantVelocity) {
  Track t;
  t.mean = Vec4(0, 0, 1, 0);
  KalmanParams zero_q;
  zero_q.q_pos = zero_q.q_vel = 0.0;
  const auto p = kf_predict(t, 1.0, zero_q);
  EXPECT_TRUE(p.mean.isApprox(Vec4(1, 0, 1, 0)));
  EXPECT_EQ(p.covariance, Mat4::Zero());
}

TEST(Kalman, ProcessNoiseOnlyAddsUncertainty) {
  robotack::Rng rng(2);
  std::normal_distribution<double> g(0, 1);
  for (int i = 0; i < 100; ++i) {
    Eigen::Matrix4d A;
    for (int r = 0; r < 4; ++r)
      for (int c = 0; c < 4; ++c) A(r, c) = g(rng);
    Track t;
    t.covariance = A * A.transpose();
    Mat4 F = Mat4::Identity();
    F(0, 2) = F(1, 3) = 0.1;
    const auto p = kf_predict(t, 0.1);
    EXPECT_GE(p.covariance.trace(), (F * t.covariance * F.transpose()).trace() - 1e-12);
  }
}

TEST(Kalman, UpdateLimits) {
  Track t;
  t.mean = Vec4(0, 0, 0, 0);
  t.covariance = Mat4::Identity();
  const auto d = det(1.0, 2.0);
  const auto exact = kf_update(t, d, Eigen::Matrix2d::Identity() * 1e-12);
  EXPECT_NEAR(exact.mean(0), 1.0, 1e-9);
  EXPECT_NEAR(exact.mean(1), 2.0, 1e-9);
  const auto ignore = kf_update(t, d, Eigen::Matrix2d::Identity() * 1e12);
  EXPECT_NEAR(ignore.mean(0), 0.0, 1e-9);
  // Posterior never more uncertain than prior on the measured subspace.
  const auto mid = kf_update(t, d, Eigen::Matrix2d::Identity());
  const Eigen::Matrix2d diff = t.covariance.topLeftCorner<2, 2>() - mid.covariance.topLeftCorner<2, 2>();
  EXPECT_GE(Eigen::SelfAdjointEigenSolver<Eigen::Matrix2d>(diff).eigenvalues().minCoeff(), -1e-12);
  EXPECT_EQ(mid.consecutive_misses, 0);
}

TEST(Kalman, NonPdInnovationThrows) {
  Track t;
  t.covariance = -Mat4::Identity();
  EXPECT_THROW(kf_update(t, det(0, 0), Eigen::Matrix2d::Zero()), RuntimeFailure);
}

TEST(Kalman, StationaryConverges) {
  robotack::Rng rng(3);
  const double sigma = 0.5;
  std::normal_distribution<double> g(0, sigma);
  Track t;
  t.mean = Vec4(g(rng), 10 + g(rng), 0, 0);
  t.covariance = Vec4(sigma * sigma, sigma * sigma, 1, 1).asDiagonal();
  KalmanParams kf;
  kf.q_pos = 0.0;
  kf.q_vel = 0.0;
  const Eigen::Matrix2d R = Eigen::Matrix2d::Identity() * sigma * sigma;
  for (int i = 0; i < 100; ++i) {
    t = kf_predict(t, 1.0 / 15.0, kf);
    t = kf_update(t, det(g(rng), 10 + g(rng)), R);
  }
  EXPECT_LT(std::hypot(t.mean(0), t.mean(1) - 10), sigma / 3);
}

TEST(Kalman, CovarianceStaysPsd) {
  robotack::Rng rng(4);
  std::normal_distribution<double> g(0, 1);
  Track t;
  t.covariance = Vec4(1, 1, 25, 25).asDiagonal();
  const Eigen::Matrix2d R = Eigen::Vector2d(0.04, 0.3).asDiagonal();
  for (int i = 0; i < 10000; ++i) {
    t = kf_predict(t, 1.0 / 15.0);
    if (i % 7 != 0) t = kf_update(t, det(g(rng), g(rng)), R);
    ASSERT_TRUE(is_psd(t.covariance)) << "step " << i;
  }
}

TEST(Associate, ExactOverlapAndOrphans) {
  TrackSet ts;
  Track t;
  t.track_id = 5;
  t.mean = Vec4(0, 10, 0, 0);
  t.width = 1.8;
  t.length = 4.5;
  ts.tracks.push_back(t);
  const auto r = associate(ts, {det(0, 10), det(0, 50)}, 0.7);
  ASSERT_EQ(r.matches.size(), 1u);
  EXPECT_EQ(r.matches[0].track_id, 5);
  EXPECT_EQ(r.matches[0].cost, 0.0);
  EXPECT_EQ(r.unmatched_detections, std::vector<int>{1});
  EXPECT_TRUE(r.unmatched_tracks.empty());
}

TEST(Associate, CrossedGeometryMatchesOracle) {
  TrackSet ts;
  for (int i = 0; i < 2; ++i) {
    Track t;
    t.track_id = i + 1;
    t.mean = Vec4(0.0, 10.0 + 2.0 * i, 0, 0);
    t.width = 1.8;
    t.length = 4.5;
    ts.tracks.push_back(t);
  }
  const std::vector<Detection> dets{det(0.2, 12.3), det(-0.1, 9.6)};
  const auto r = associate(ts, dets, 0.7);
  CostMatrix c(2, std::vector<double>(2));
  for (int i = 0; i < 2; ++i)
    for (int j = 0; j < 2; ++j) c[i][j] = 1.0 - iou(ts.tracks[i].bbox(), dets[j].bbox);
  double total = 0.0;
  for (const auto& m : r.matches) total += m.cost;
  EXPECT_EQ(r.matches.size(), 2u);
  EXPECT_NEAR(total, brute_force_min(c), 1e-12);
}

TEST(Associate, NeverCrossesClasses) {
  TrackSet ts;
  Track t;
  t.track_id = 1;
  t.cls = ObjectClass::Pedestrian;
  t.mean = Vec4(0, 10, 0, 0);
  t.width = 1.8;
  t.length = 4.5;
  ts.tracks.push_back(t);
  const auto r = associate(ts, {det(0, 10, ObjectClass::Vehicle)}, 0.7);
  EXPECT_TRUE(r.matches.empty());
}

TEST(MotStep, SpawnConfirmAndDelete) {
  TrackerParams params;
  TrackSet ts;
  ts = mot_step(ts, {det(0, 10), det(3.5, 30)}, 1.0 / 15.0, params);
  ASSERT_EQ(ts.tracks.size(), 2u);
  EXPECT_FALSE(ts.tracks[0].confirmed);
  EXPECT_NE(ts.tracks[0].track_id, ts.tracks[1].track_id);
  ts = mot_step(ts, {det(0, 10), det(3.5, 30)}, 1.0 / 15.0, params);
  ts = mot_step(ts, {det(0, 10), det(3.5, 30)}, 1.0 / 15.0, params);
  EXPECT_TRUE(ts.tracks[0].confirmed);
  for (int i = 0; i < params.max_misses; ++i) ts = mot_step(ts, {}, 1.0 / 15.0, params);
  EXPECT_EQ(ts.tracks.size(), 2u);
  ts = mot_step(ts, {}, 1.0 / 15.0, params);
  EXPECT_TRUE(ts.tracks.empty());
}

TEST(MotStep, IdsStayUnique) {
  robotack::Rng rng(6);
  std::uniform_real_distribution<double> u(-5, 5);
  std::bernoulli_distribution keep(0.7);
  TrackSet ts;
  for (int f = 0; f < 300; ++f) {
    std::vector<Detection> dets;
    for (int k = 0; k < 6; ++k)
      if (keep(rng)) dets.push_back(det(u(rng), 10.0 * k + u(rng), k % 2 ? ObjectClass::Pedestrian : ObjectClass::Vehicle));
    ts = mot_step(ts, dets, 1.0 / 15.0);
    std::vector<int> ids;
    for (const auto& t : ts.tracks) {
      ids.push_back(t.track_id);
      EXPECT_TRUE(!t.confirmed || t.age >= 3);
    }
    std::sort(ids.begin(), ids.end());
    ASSERT_EQ(std::adjacent_find(ids.begin(), ids.end()), ids.end());
  }
}

TEST(MotStep, VelocityConverges) {
  TrackSet ts;
  const double dt = 1.0 / 15.0;
  for (int f = 0; f < 50; ++f) ts = mot_step(ts, {det(0.0, 10.0 + 5.0 * f * dt)}, dt);
  ASSERT_EQ(ts.tracks.size(), 1u);
  EXPECT_NEAR(ts.tracks[0].mean(3), 5.0, 0.1);
}

TEST(Trajectory, ConstantVelocityHasNoAcceleration) {
  TrackSet ts;
  const double dt = 1.0 / 15.0;
  for (int f = 0; f < 60; ++f) ts = mot_step(ts, {det(0.0, 10.0 + 7.0 * f * dt)}, dt);
  const auto e = estimate_trajectory(ts.tracks[0], dt);
  EXPECT_TRUE(e.accel_valid);
  EXPECT_LT(std::abs(e.accel_lon), 0.2);
}

TEST(Trajectory, DeceleratingTruth) {
  TrackSet ts;
  const double dt = 1.0 / 15.0;
  double x = 10.0, v = 12.0;
  for (int f = 0; f < 60; ++f) {
    ts = mot_step(ts, {det(0.0, x)}, dt);
    x += v * dt - dt * dt;  // a = -2
    v -= 2.0 * dt;
  }
  const auto e = estimate_trajectory(ts.tracks[0], dt);
  EXPECT_NEAR(e.accel_lon, -2.0, 0.3);
}

TEST(Trajectory, ShortHistoryFlagged) {
  Track t;
  t.history = {Vec4::Zero(), Vec4::Zero()};
  const auto e = estimate_trajectory(t, 1.0 / 15.0);
  EXPECT_FALSE(e.accel_valid);
  EXPECT_EQ(e.accel_lon, 0.0);
}

namespace {
TrackSet confirmed_track_at(double lat, double lon) {
  TrackSet ts;
  for (int f = 0; f < 4; ++f) ts = mot_step(ts, {det(lat, lon)}, 1.0 / 15.0);
  return ts;
}
}  // namespace

TEST(Fuse, CameraAndRangeRegisters) {
  const auto ts = confirmed_track_at(0.0, 30.0);
  Detection r = det(0.1, 30.8);
  r.channel = Channel::Range;
  const auto wm = fuse(ts, {r}, {});
  ASSERT_EQ(wm.objects.size(), 1u);
  EXPECT_TRUE(wm.objects[0].registered);
  EXPECT_EQ(wm.objects[0].lon_pos, 30.8);
  EXPECT_NEAR(wm.objects[0].lat_pos, 0.0, 1e-9);
  EXPECT_TRUE(wm.objects[0].in_ego_lane);
}

TEST(Fuse, RangeAloneDoesNotRegister) {
  Detection r = det(0.0, 30.0);
  r.channel = Channel::Range;
  EXPECT_TRUE(fuse(TrackSet{}, {r}, {}).objects.empty());
}

TEST(Fuse, CameraOnlyWithinRangeReachIsUnregistered) {
  const auto ts = confirmed_track_at(0.0, 30.0);
  EXPECT_FALSE(fuse(ts, {}, {}).objects.at(0).registered);
  const auto far = confirmed_track_at(0.0, 95.0);
  EXPECT_TRUE(fuse(far, {}, {}).objects.at(0).registered);
}

TEST(Fuse, SuppressedTrackLeavesWorldModel) {
  auto ts = confirmed_track_at(0.0, 95.0);
  FusionPolicy policy;
  for (int i = 0; i < policy.drop_grace; ++i) {
    ts = mot_step(ts, {}, 1.0 / 15.0);
    EXPECT_EQ(fuse(ts, {}, {}, policy).objects.size(), 1u);
  }
  ts = mot_step(ts, {}, 1.0 / 15.0);
  EXPECT_TRUE(fuse(ts, {}, {}, policy).objects.empty());
}
