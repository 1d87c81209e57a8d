#include <gtest/gtest.h>

#include <cmath>
#include <random>

#include "robotack/attack.hpp"
#include "robotack/iou.hpp"

using namespace robotack;
using namespace robotack::attack;
using perception::Track;
using perception::TrackSet;
using sensing::Detection;

namespace {

Track track(int id, double lat, double lon, double vlat = 0.0, ObjectClass cls = ObjectClass::Vehicle) {
  Track t;
  t.track_id = id;
  t.cls = cls;
  t.mean << lat, lon, vlat, 0.0;
  t.width = cls == ObjectClass::Vehicle ? 1.8 : 0.6;
  t.length = cls == ObjectClass::Vehicle ? 4.5 : 0.6;
  t.confirmed = true;
  t.covariance = perception::Mat4::Identity();
  return t;
}

Detection det(double lat, double lon, int truth = 1, ObjectClass cls = ObjectClass::Vehicle) {
  const bool veh = cls == ObjectClass::Vehicle;
  return {0, Channel::Camera, truth, cls, {lat, lon, veh ? 1.8 : 0.6, veh ? 4.5 : 0.6}};
}

world::KinematicState ego_at(double lon, double speed = 0.0) {
  world::KinematicState e;
  e.lon_pos = lon;
  e.speed = speed;
  return e;
}

// Drives an attacker against one static in-lane vehicle and a victim tracker
// fed with the attacked detections.
struct Loop {
  Attacker attacker;
  TrackSet victim;
  std::vector<AttackStepResult> steps;

  Loop(AttackerConfig cfg, PredictorRegistry reg, std::uint64_t seed = 1)
      : attacker(std::move(cfg), std::move(reg), make_stream(seed, Stream::Attack)) {}

  void run(int frames, double lat = 0.0) {
    const double dt = 1.0 / 15.0;
    for (int f = 0; f < frames; ++f) {
      auto r = attack_step(attacker, {det(lat, 30.0)}, victim, ego_at(0.0), f, dt);
      victim = perception::mot_step(victim, r.dets, dt, attacker.cfg.tracker);
      victim.frame = f;
      steps.push_back(std::move(r));
    }
  }
};

}  // namespace

TEST(SelectTarget, PicksClosestAhead) {
  TrackSet ts;
  ts.tracks = {track(1, 0.0, 60.0), track(2, 3.5, 30.0), track(3, 0.0, -10.0)};
  const auto sel = select_target(ts, ego_at(0.0), ShConfig{});
  ASSERT_TRUE(sel);
  EXPECT_EQ(sel->track->track_id, 2);
}

TEST(SelectTarget, SingleTrackAndTieBreak) {
  TrackSet one;
  one.tracks = {track(7, 0.0, 40.0)};
  EXPECT_EQ(select_target(one, ego_at(0.0), ShConfig{})->track->track_id, 7);

  TrackSet tie;
  tie.tracks = {track(9, 0.0, 40.0), track(4, 3.5, 40.0)};
  EXPECT_EQ(select_target(tie, ego_at(0.0), ShConfig{})->track->track_id, 4);
}

TEST(SelectTarget, IgnoresTentativeAndEmpty) {
  TrackSet ts;
  EXPECT_FALSE(select_target(ts, ego_at(0.0), ShConfig{}));
  ts.tracks = {track(1, 0.0, 20.0)};
  ts.tracks[0].confirmed = false;
  EXPECT_FALSE(select_target(ts, ego_at(0.0), ShConfig{}));
}

TEST(SelectTarget, DeltaSubtractsStoppingDistance) {
  TrackSet ts;
  ts.tracks = {track(1, 0.0, 50.0)};
  const auto sel = select_target(ts, ego_at(0.0, 10.0), ShConfig{});
  // Bumper gap: 50 - 4.5/2 - 4.0/2 = 45.75; stopping distance 10^2 / (2 * 5) = 10.
  EXPECT_NEAR(sel->delta, 35.75, 1e-9);
}

TEST(ScenarioMatch, Table) {
  const world::LaneGeometry lanes;
  EXPECT_EQ(scenario_match(track(1, 0.0, 30.0), lanes, 0.3), AttackVector::MoveOut);
  EXPECT_EQ(scenario_match(track(1, 0.0, 30.0, 0.0, ObjectClass::Pedestrian), lanes, 0.3),
            AttackVector::Disappear);
  // Moving in while already in the ego lane: no attack.
  EXPECT_FALSE(scenario_match(track(1, 1.0, 30.0, -1.0), lanes, 0.3));
  // Keep outside the lane: MoveIn.
  EXPECT_EQ(scenario_match(track(1, 3.5, 30.0), lanes, 0.3), AttackVector::MoveIn);
  // Moving in from outside: MoveOut/Disappear cell.
  EXPECT_EQ(scenario_match(track(1, -4.0, 30.0, 1.0, ObjectClass::Pedestrian), lanes, 0.3),
            AttackVector::Disappear);
  // Moving out while outside: no attack.
  EXPECT_FALSE(scenario_match(track(1, 4.0, 30.0, 1.0), lanes, 0.3));
  // Moving out while in lane: MoveIn.
  EXPECT_EQ(scenario_match(track(1, 1.0, 30.0, 1.0), lanes, 0.3), AttackVector::MoveIn);
}

TEST(ScenarioMatch, ForcedVectorOnlyInCompatibleCell) {
  const world::LaneGeometry lanes;
  EXPECT_EQ(scenario_match(track(1, 0.0, 30.0), lanes, 0.3, AttackVector::Disappear), AttackVector::Disappear);
  EXPECT_FALSE(scenario_match(track(1, 0.0, 30.0), lanes, 0.3, AttackVector::MoveIn));
  EXPECT_FALSE(scenario_match(track(1, 3.5, 30.0), lanes, 0.3, AttackVector::MoveOut));
}

TEST(SafetyHijacker, LinearOracle) {
  const SafetyPredictor f = [](double, double, double d, int k) { return d - k; };
  // Oracle: smallest k with 20 - k <= 4.
  int expected = -1;
  for (int k = 0; k <= 60 && expected < 0; ++k)
    if (20.0 - k <= 4.0) expected = k;
  ASSERT_EQ(expected, 16);
  for (bool bs : {true, false}) {
    const auto d = safety_hijack_decide(0.0, 0.0, 20.0, f, 60, 4.0, bs);
    EXPECT_TRUE(d.attack);
    EXPECT_EQ(d.K, expected);
  }
}

TEST(SafetyHijacker, NoAttackCases) {
  const SafetyPredictor constant = [](double, double, double, int) { return 100.0; };
  EXPECT_FALSE(safety_hijack_decide(0, 0, 20, constant, 60, 4.0).attack);
  const SafetyPredictor late = [](double, double, double, int k) { return k >= 65 ? 0.0 : 50.0; };
  EXPECT_FALSE(safety_hijack_decide(0, 0, 20, late, 60, 4.0).attack);
  EXPECT_FALSE(safety_hijack_decide(0, 0, 20, late, 60, 4.0, false).attack);
  // Goal already met: K = 0 is not an attack.
  const SafetyPredictor met = [](double, double, double, int) { return 1.0; };
  EXPECT_FALSE(safety_hijack_decide(0, 0, 20, met, 60, 4.0).attack);
  EXPECT_THROW(safety_hijack_decide(0, 0, 20, SafetyPredictor{}, 60, 4.0), RuntimeFailure);
}

TEST(SafetyHijacker, BinaryEqualsLinearOnMonotone) {
  std::mt19937_64 rng(3);
  std::uniform_real_distribution<double> u(0.0, 3.0), start(0.0, 80.0);
  for (int trial = 0; trial < 500; ++trial) {
    std::vector<double> table(61);
    table[0] = start(rng);
    for (int k = 1; k <= 60; ++k) table[k] = table[k - 1] - u(rng);
    const SafetyPredictor f = [&](double, double, double, int k) { return table[k]; };
    const auto a = safety_hijack_decide(0, 0, 0, f, 60, 4.0, true);
    const auto b = safety_hijack_decide(0, 0, 0, f, 60, 4.0, false);
    EXPECT_EQ(a.attack, b.attack);
    EXPECT_EQ(a.K, b.K);
  }
}

TEST(Budget, PaperArithmetic) {
  const auto b = PerturbationBudget::from_noise(sensing::characterized::kVehicleNoise);
  EXPECT_NEAR(b.hi() * 1.8, 0.8766, 1e-4);
  EXPECT_NEAR(b.lo() * 1.8, -0.7938, 1e-4);
}

TEST(MaxLateralShift, MatchesGridSearch) {
  std::mt19937_64 rng(5);
  std::uniform_real_distribution<double> w(0.4, 2.5), h(0.4, 5.0), off(-0.5, 0.5), maxs(0.0, 3.0);
  for (int trial = 0; trial < 200; ++trial) {
    const Bbox ref{off(rng), 30.0 + off(rng), w(rng), h(rng)};
    const Bbox box{ref.cx, ref.cy, ref.w * (1.0 + 0.1 * off(rng)), ref.h};
    const double dir = trial % 2 ? 1.0 : -1.0;
    const double m = maxs(rng);
    const double got = max_lateral_shift(box, ref, dir, m, 0.7);
    double oracle = 0.0;
    for (double s = 0.0; s <= m; s += 1e-4) {
      Bbox b = box;
      b.cx = ref.cx + dir * s;
      if (1.0 - perception::iou(b, ref) <= 0.7) oracle = s;
    }
    EXPECT_NEAR(got, oracle, 2e-4) << "trial " << trial;
    Bbox b = box;
    b.cx = ref.cx + dir * got;
    EXPECT_LE(1.0 - perception::iou(b, ref), 0.7 + 1e-9);
  }
}

TEST(Hijack, DisappearSuppresses) {
  AttackState s;
  s.active = true;
  s.vector = AttackVector::Disappear;
  EXPECT_FALSE(hijack_detection(det(0, 30), track(1, 0, 30), PerturbationBudget{}, s));
}

TEST(Hijack, ShiftRespectsBudgetAndGate) {
  AttackState s;
  s.active = true;
  s.vector = AttackVector::MoveOut;
  s.direction = 1.0;
  s.Omega = 3.0;
  const PerturbationBudget b{0.023, 0.464, 0.7};
  double omega = 0.0;
  const auto out = hijack_detection(det(0.0, 30.0), track(1, 0.0, 30.0), b, s, &omega);
  ASSERT_TRUE(out);
  EXPECT_NEAR(omega, 0.487 * 1.8, 1e-9);  // the budget binds before the gate
  EXPECT_EQ(s.phase, Phase::Shift);

  const PerturbationBudget wide{0.0, 2.0, 0.7};
  hijack_detection(det(0.0, 30.0), track(1, 0.0, 30.0), wide, s, &omega);
  Bbox moved = det(0.0, 30.0).bbox;
  moved.cx += omega;
  EXPECT_NEAR(1.0 - perception::iou(moved, track(1, 0.0, 30.0).bbox()), 0.7, 1e-9);  // the gate binds
}

TEST(AttackLoop, PassThroughWithoutTracks) {
  AttackerConfig cfg;
  Attacker a(cfg, {}, make_stream(1, Stream::Attack));
  const std::vector<Detection> dets{det(0, 30)};
  const auto r = attack_step(a, dets, TrackSet{}, ego_at(0), 0, 1.0 / 15.0);
  ASSERT_EQ(r.dets.size(), 1u);
  EXPECT_EQ(r.dets[0].bbox, dets[0].bbox);
  EXPECT_FALSE(a.state.active);
}

TEST(AttackLoop, HorizonOfTwentyFrames) {
  AttackerConfig cfg;
  PredictorRegistry reg;
  reg[{AttackVector::MoveOut, ObjectClass::Vehicle}] = [](double, double, double, int k) { return 24.0 - k; };
  Loop loop(cfg, reg);
  loop.run(40);

  int first = -1, perturbed = 0;
  for (std::size_t f = 0; f < loop.steps.size(); ++f) {
    if (loop.steps[f].log.vector) {
      if (first < 0) first = static_cast<int>(f);
      ++perturbed;
      EXPECT_EQ(loop.steps[f].log.K_remaining, 20 - (static_cast<int>(f) - first) - 1);
      EXPECT_LE(loop.steps[f].log.assoc_cost, 0.7 + 1e-9);
      const double wn = loop.steps[f].log.omega_applied / loop.steps[f].log.box_width;
      const auto& b = cfg.budget_vehicle;
      EXPECT_GE(wn, b.lo() - 1e-9);
      EXPECT_LE(wn, b.hi() + 1e-9);
    }
  }
  ASSERT_GE(first, 0);
  EXPECT_EQ(perturbed, 20);
  // The frame after the horizon is clean.
  ASSERT_LT(first + 20, static_cast<int>(loop.steps.size()));
  EXPECT_EQ(loop.steps[first + 20].dets[0].bbox, det(0.0, 30.0).bbox);
  EXPECT_EQ(loop.attacker.state.episodes, 1);
  EXPECT_FALSE(loop.attacker.state.active);
  EXPECT_LE(loop.attacker.state.K_prime_used, loop.attacker.state.K_total);
}

TEST(AttackLoop, MissingPredictorIsRuntimeFailure) {
  Loop loop(AttackerConfig{}, {});
  EXPECT_THROW(loop.run(10), RuntimeFailure);
}

TEST(AttackLoop, RandomModeHorizonAndReproducibility) {
  AttackerConfig cfg;
  cfg.mode = Mode::Random;
  cfg.random_start_max = 20;
  for (std::uint64_t seed = 1; seed <= 30; ++seed) {
    Loop a(cfg, {}, seed), b(cfg, {}, seed);
    a.run(130);
    b.run(130);
    EXPECT_EQ(a.attacker.launch_frame, b.attacker.launch_frame);
    EXPECT_EQ(a.attacker.state.K_total, b.attacker.state.K_total);
    if (a.attacker.state.episodes > 0 || a.attacker.state.active) {
      EXPECT_GE(a.attacker.state.K_total, 15);
      EXPECT_LE(a.attacker.state.K_total, 85);
    }
    for (std::size_t f = 0; f < a.steps.size(); ++f) ASSERT_EQ(a.steps[f].dets.size(), b.steps[f].dets.size());
  }
}

TEST(AttackLoop, RandomBaselineDrawsFromSceneObjects) {
  AttackerConfig cfg;
  cfg.mode = Mode::Random;
  cfg.random_start_max = 20;
  cfg.scene_objects = {7};  // not the detected object: the draw finds nothing in view
  Loop absent(cfg, {}, 3);
  absent.run(60);
  EXPECT_TRUE(absent.attacker.state.random_fired);
  EXPECT_EQ(absent.attacker.state.start_frame, -1);

  cfg.scene_objects = {1};
  Loop present(cfg, {}, 3);
  present.run(60);
  EXPECT_GE(present.attacker.state.start_frame, 0);
  EXPECT_EQ(present.attacker.state.target_truth_id, 1);
}

TEST(AttackLoop, DisappearFollowsTargetThroughShadowTrackLoss) {
  // Detections jump 0.5 m sideways each frame: the 0.6 m boxes stop
  // overlapping, so the attacker's own IoU tracker loses the target.
  AttackerConfig cfg;
  cfg.forced_vector = AttackVector::Disappear;
  PredictorRegistry reg;
  reg[{AttackVector::Disappear, ObjectClass::Pedestrian}] = [](double, double, double, int k) { return 20.0 - k; };
  Attacker a(cfg, reg, make_stream(1, Stream::Attack));
  TrackSet victim;
  const double dt = 1.0 / 15.0;
  int leaked = 0;
  for (int f = 0; f < 30; ++f) {
    const double lat = f < 5 ? 0.0 : 0.5 * (f - 4);
    auto r = attack_step(a, {det(lat, 30.0, 1, ObjectClass::Pedestrian)}, victim, ego_at(0.0), f, dt);
    victim = perception::mot_step(victim, r.dets, dt, cfg.tracker);
    if (a.state.active || r.log.vector) leaked += static_cast<int>(r.dets.size());
  }
  ASSERT_GE(a.state.start_frame, 0);
  EXPECT_EQ(leaked, 0);
}

TEST(ShConfig, MoveInUsesEmergencyBrakingGoal) {
  ShConfig sh;
  EXPECT_EQ(sh.gamma_for(AttackVector::MoveIn), 10.0);
  EXPECT_EQ(sh.gamma_for(AttackVector::Disappear), 4.0);
  EXPECT_EQ(sh.gamma_for(AttackVector::MoveOut), 4.0);
}

TEST(ParseMode, Aliases) {
  EXPECT_EQ(parse_mode("golden"), Mode::None);
  EXPECT_EQ(parse_mode("RoboTack"), Mode::RoboTack);
  EXPECT_EQ(parse_mode("no-sh"), Mode::NoSh);
  EXPECT_EQ(parse_mode("baseline"), Mode::Random);
  EXPECT_THROW(parse_mode("chaos"), ConfigError);
}

TEST(MatchTrack, PrefersTrackUpdatedLastFrame) {
  perception::TrackSet ts;
  perception::Track stale;
  stale.track_id = 3;
  stale.cls = ObjectClass::Pedestrian;
  stale.mean << 0.0, 10.0, 0.0, 0.0;
  stale.width = stale.length = 0.6;
  stale.consecutive_misses = 4;
  perception::Track fresh = stale;
  fresh.track_id = 8;
  fresh.mean(0) = 0.2;
  fresh.consecutive_misses = 0;
  ts.tracks = {stale, fresh};
  const Bbox box{0.0, 10.0, 0.6, 0.6};
  EXPECT_EQ(attack::match_track(ts, box, ObjectClass::Pedestrian), 8);
  ts.tracks[1].consecutive_misses = 1;
  EXPECT_EQ(attack::match_track(ts, box, ObjectClass::Pedestrian), 3);  // all coasting: best overlap
  EXPECT_EQ(attack::match_track(ts, box, ObjectClass::Vehicle), -1);
  EXPECT_EQ(attack::match_track(ts, Bbox{5.0, 10.0, 0.6, 0.6}, ObjectClass::Pedestrian), -1);
}
