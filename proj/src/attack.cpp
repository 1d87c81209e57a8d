#include "robotack/attack.hpp"

#include <algorithm>
#include <cctype>
#include <cmath>
#include <ostream>
#include <string>

#include "robotack/iou.hpp"
#include "robotack/safety.hpp"

namespace robotack::attack {

std::string_view to_string(Phase p) {
  switch (p) {
    case Phase::Monitor: return "monitor";
    case Phase::Shift: return "shift";
    case Phase::Maintain: return "maintain";
  }
  return "?";
}

std::string_view to_string(Mode m) {
  switch (m) {
    case Mode::None: return "none";
    case Mode::RoboTack: return "robotack";
    case Mode::NoSh: return "no_sh";
    case Mode::Random: return "random";
  }
  return "?";
}

Mode parse_mode(std::string_view s) {
  std::string k;
  for (char c : s)
    if (c != '_' && c != '-') k += static_cast<char>(std::tolower(static_cast<unsigned char>(c)));
  if (k == "none" || k == "golden") return Mode::None;
  if (k == "robotack" || k == "smart") return Mode::RoboTack;
  if (k == "nosh" || k == "rwosh") return Mode::NoSh;
  if (k == "random" || k == "baseline") return Mode::Random;
  throw ConfigError("unknown attack mode: " + std::string(s));
}

std::optional<TargetSelection> select_target(const perception::TrackSet& tracks, const world::KinematicState& ego,
                                             const ShConfig& cfg) {
  const auto ego_fp = world::ego_footprint();
  std::optional<TargetSelection> best;
  double best_gap = 0.0;
  for (const auto& t : tracks.tracks) {
    if (!t.confirmed || t.mean(1) <= ego.lon_pos) continue;
    const double gap = std::max(0.0, world::longitudinal_gap(ego, ego_fp, t.mean(1), t.length));
    if (!best || gap < best_gap || (gap == best_gap && t.track_id < best->track->track_id)) {
      best = TargetSelection{&t, 0.0};
      best_gap = gap;
    }
  }
  if (best) best->delta = best_gap - world::compute_stopping_distance(ego.speed, cfg.comfortable_decel);
  return best;
}

LateralMotion classify_lateral_motion(const perception::Track& track, double threshold) {
  const double lat = track.mean(0);
  const double vel = track.mean(2);
  if (std::abs(vel) <= threshold) return LateralMotion::Keep;
  // Near the lane center any lateral motion is outward.
  const double inward = std::abs(lat) < 0.1 ? -std::abs(vel) : (lat > 0.0 ? -vel : vel);
  return inward > 0.0 ? LateralMotion::MovingIn : LateralMotion::MovingOut;
}

std::optional<AttackVector> scenario_match(const perception::Track& track, const world::LaneGeometry& lanes,
                                           double lat_vel_threshold, std::optional<AttackVector> forced) {
  const bool in_lane = lanes.overlaps_ego_lane(track.mean(0), track.width);
  const auto motion = classify_lateral_motion(track, lat_vel_threshold);

  enum class Cell { None, OutOrDisappear, In };
  Cell cell = Cell::None;
  if (in_lane) {
    if (motion == LateralMotion::Keep) cell = Cell::OutOrDisappear;
    if (motion == LateralMotion::MovingOut) cell = Cell::In;
  } else {
    if (motion == LateralMotion::MovingIn) cell = Cell::OutOrDisappear;
    if (motion == LateralMotion::Keep) cell = Cell::In;
  }

  switch (cell) {
    case Cell::None: return std::nullopt;
    case Cell::In:
      if (forced && *forced != AttackVector::MoveIn) return std::nullopt;
      return AttackVector::MoveIn;
    case Cell::OutOrDisappear:
      if (forced) {
        if (*forced == AttackVector::MoveIn) return std::nullopt;
        return *forced;
      }
      return track.cls == ObjectClass::Pedestrian ? AttackVector::Disappear : AttackVector::MoveOut;
  }
  return std::nullopt;
}

ShDecision safety_hijack_decide(double v_rel, double a_rel, double delta_t, const SafetyPredictor& f, int k_max,
                                double gamma, bool binary_search) {
  if (!f) throw RuntimeFailure("safety hijacker: no trained predictor for this attack vector");
  const auto hit = [&](int k) { return f(v_rel, a_rel, delta_t, k) <= gamma; };
  int K = -1;
  if (binary_search) {
    if (!hit(k_max)) return {};
    int lo = 0, hi = k_max;
    while (lo < hi) {
      const int mid = lo + (hi - lo) / 2;
      if (hit(mid))
        hi = mid;
      else
        lo = mid + 1;
    }
    K = lo;
  } else {
    for (int k = 0; k <= k_max; ++k) {
      if (hit(k)) {
        K = k;
        break;
      }
    }
  }
  if (K <= 0) return {};
  return {true, K};
}

double max_lateral_shift(const Bbox& box, const Bbox& ref, double direction, double max_shift, double lambda) {
  const auto cost = [&](double s) {
    Bbox b = box;
    b.cx = ref.cx + direction * s;
    return 1.0 - perception::iou(b, ref);
  };
  if (max_shift <= 0.0 || cost(0.0) > lambda) return 0.0;
  if (cost(max_shift) <= lambda) return max_shift;
  double lo = 0.0, hi = max_shift;
  for (int i = 0; i < 60; ++i) {
    const double mid = 0.5 * (lo + hi);
    (cost(mid) <= lambda ? lo : hi) = mid;
  }
  return lo;
}

double omega_target(const world::LaneGeometry& lanes, double target_width, double margin) {
  return 0.5 * lanes.lane_width + 0.5 * target_width + margin;
}

std::optional<sensing::Detection> hijack_detection(const sensing::Detection& det,
                                                   const perception::Track& predicted_track,
                                                   const PerturbationBudget& budget, AttackState& state,
                                                   double* omega_applied) {
  if (omega_applied) *omega_applied = 0.0;
  if (state.vector == AttackVector::Disappear) {
    state.phase = Phase::Shift;
    return std::nullopt;
  }
  if (det.cls != predicted_track.cls) throw RuntimeFailure("hijack_detection: detection/track class mismatch");

  const Bbox ref = predicted_track.bbox();
  const double w = det.bbox.w;
  const double progress = state.direction * (ref.cx - det.bbox.cx);
  if (state.phase != Phase::Maintain && progress >= state.Omega) state.phase = Phase::Maintain;

  double omega = 0.0;
  if (state.phase != Phase::Maintain) {
    state.phase = Phase::Shift;
    ++state.K_prime_used;
    state.omega_progress = std::clamp(progress, 0.0, state.Omega);
    const double bound = state.direction > 0 ? budget.hi() * w : -budget.lo() * w;
    omega = state.direction * max_lateral_shift(det.bbox, ref, state.direction, bound, budget.lambda_assoc);
  } else {
    state.omega_progress = state.Omega;
    const double desired = det.bbox.cx + state.direction * state.Omega;
    omega = std::clamp(desired - ref.cx, budget.lo() * w, budget.hi() * w);
    const double sign = omega >= 0.0 ? 1.0 : -1.0;
    omega = sign * max_lateral_shift(det.bbox, ref, sign, std::abs(omega), budget.lambda_assoc);
  }

  sensing::Detection out = det;
  out.bbox.cx = ref.cx + omega;
  state.faked_track_pose = out.bbox;
  if (omega_applied) *omega_applied = omega;
  return out;
}

Attacker::Attacker(AttackerConfig c, PredictorRegistry p, Rng r)
    : cfg(std::move(c)), predictors(std::move(p)), rng(std::move(r)) {
  if (cfg.mode == Mode::NoSh || cfg.mode == Mode::Random) {
    std::uniform_int_distribution<std::int64_t> start(cfg.random_start_min,
                                                      std::max(cfg.random_start_min, cfg.random_start_max));
    launch_frame = start(rng);
  }
}

int match_track(const perception::TrackSet& tracks, const Bbox& box, ObjectClass cls) {
  for (bool fresh_only : {true, false}) {
    int best = -1;
    double best_iou = 0.0;
    for (const auto& t : tracks.tracks) {
      if (t.cls != cls || (fresh_only && t.consecutive_misses > 0)) continue;
      const double v = perception::iou(t.bbox(), box);
      if (v > best_iou) {
        best_iou = v;
        best = t.track_id;
      }
    }
    if (best >= 0) return best;
  }
  return -1;
}

namespace {

// Index of the detection that best overlaps `box` with the same class.
int match_detection(const std::vector<sensing::Detection>& dets, const Bbox& box, ObjectClass cls) {
  int best = -1;
  double best_iou = 0.0;
  for (std::size_t j = 0; j < dets.size(); ++j) {
    if (dets[j].cls != cls) continue;
    const double v = perception::iou(dets[j].bbox, box);
    if (v > best_iou) {
      best_iou = v;
      best = static_cast<int>(j);
    }
  }
  return best;
}

// Arms an episode against `target`. Returns false when nothing can be hijacked.
bool launch(Attacker& a, const perception::Track& target, AttackVector vector, int K,
            const std::vector<sensing::Detection>& dets, const perception::TrackSet& victim_tracks,
            std::int64_t frame) {
  const int j = match_detection(dets, target.bbox(), target.cls);
  if (j < 0) return false;
  const int victim = match_track(victim_tracks, dets[j].bbox, target.cls);
  if (victim < 0 && vector != AttackVector::Disappear) return false;

  auto& s = a.state;
  const int episodes = s.episodes;
  const bool fired = s.random_fired;
  s = AttackState{};
  s.episodes = episodes;
  s.random_fired = fired;
  s.active = true;
  s.vector = vector;
  s.target_class = target.cls;
  s.target_truth_id = dets[j].object_truth_id;
  s.shadow_track_id = target.track_id;
  s.victim_track_id = victim;
  s.K = s.K_total = K;
  s.Omega = omega_target(a.cfg.lanes, target.width, a.cfg.omega_margin);
  const double lat = target.mean(0);
  if (vector == AttackVector::MoveOut)
    s.direction = lat >= 0.0 ? 1.0 : -1.0;
  else
    s.direction = lat > 0.0 ? -1.0 : 1.0;
  s.phase = Phase::Shift;
  s.start_frame = frame;
  s.last_target_box = dets[j].bbox;
  return true;
}

// Nearest detection of the class whose center lies within the gate.
int nearest_detection(const std::vector<sensing::Detection>& dets, const Bbox& box, ObjectClass cls) {
  const double gate = 1.0 + 0.5 * std::max(box.w, box.h);
  int best = -1;
  double best_d = gate;
  for (std::size_t j = 0; j < dets.size(); ++j) {
    if (dets[j].cls != cls) continue;
    const double d = std::hypot(dets[j].bbox.cx - box.cx, dets[j].bbox.cy - box.cy);
    if (d <= best_d) {
      best_d = d;
      best = static_cast<int>(j);
    }
  }
  return best;
}

// Perturbs this frame's detections for the active episode and counts K down.
void hijack_frame(Attacker& a, std::vector<sensing::Detection>& dets, const perception::TrackSet& victim_tracks,
                  double dt, AttackLogRow& log) {
  auto& s = a.state;
  const auto* shadow = a.shadow.find(s.shadow_track_id);
  int j = shadow ? match_detection(dets, shadow->bbox(), s.target_class) : -1;
  if (j < 0) {
    // The attacker's own tracker can drop a maneuvering target (a pedestrian
    // starting to walk); reacquire it around its last known position.
    j = nearest_detection(dets, s.last_target_box, s.target_class);
    if (j >= 0) {
      const int id = match_track(a.shadow, dets[j].bbox, s.target_class);
      if (id >= 0) s.shadow_track_id = id;
    }
  }
  if (j >= 0) {
    s.last_target_box = dets[j].bbox;
    const auto* victim = victim_tracks.find(s.victim_track_id);
    if ((!victim || victim->consecutive_misses > 0) && s.vector != AttackVector::Disappear) {
      const int id = match_track(victim_tracks, dets[j].bbox, s.target_class);
      if (id >= 0) {
        s.victim_track_id = id;
        victim = victim_tracks.find(id);
      }
    }
    if (s.vector == AttackVector::Disappear) {
      dets.erase(dets.begin() + j);
      s.phase = Phase::Shift;
    } else if (victim) {
      const auto predicted = perception::kf_predict(*victim, dt, a.cfg.tracker.kf);
      double omega = 0.0;
      const auto out = hijack_detection(dets[j], predicted, a.cfg.budget(s.target_class), s, &omega);
      dets[j] = *out;
      log.omega_applied = omega;
      log.box_width = out->bbox.w;
      log.assoc_cost = 1.0 - perception::iou(out->bbox, predicted.bbox());
    }
  }
  log.phase = s.phase;
  log.vector = s.vector;
  log.target_id = s.target_truth_id;
  if (--s.K <= 0) {
    s.active = false;
    s.phase = Phase::Monitor;
    ++s.episodes;
  }
  log.K_remaining = s.K;
}

}  // namespace

AttackStepResult attack_step(Attacker& a, const std::vector<sensing::Detection>& camera_dets,
                             const perception::TrackSet& victim_tracks, const world::KinematicState& ego,
                             std::int64_t frame, double dt) {
  if (a.cfg.mode == Mode::NoSh || a.cfg.mode == Mode::Random)
    return random_attack_step(a, camera_dets, victim_tracks, ego, frame, dt);

  AttackStepResult r{camera_dets, {}};
  r.log.frame = frame;
  if (a.cfg.mode == Mode::None) return r;

  a.shadow = perception::mot_step(a.shadow, camera_dets, dt, a.cfg.tracker);
  const auto target = select_target(a.shadow, ego, a.cfg.sh);
  if (target) r.log.delta_perceived = target->delta;

  if (!a.state.active && a.state.episodes < a.cfg.max_episodes && target) {
    const auto& t = *target->track;
    const auto vector = scenario_match(t, a.cfg.lanes, a.cfg.sh.lat_vel_threshold, a.cfg.forced_vector);
    const auto traj = perception::estimate_trajectory(t, dt);
    const double v_rel = traj.vel_lon - ego.speed;
    const double a_rel = traj.accel_lon - ego.accel;
    if (vector && a.cfg.injection) {
      if (target->delta <= a.cfg.injection->delta_inject) {
        const int k = a.cfg.injection->k;
        if (k > 0) {
          launch(a, t, *vector, k, camera_dets, victim_tracks, frame);
        } else {
          const int j = match_detection(camera_dets, t.bbox(), t.cls);
          a.state.target_truth_id = j >= 0 ? camera_dets[j].object_truth_id : -1;
          a.state.target_class = t.cls;
          a.state.vector = *vector;
          a.state.start_frame = frame;
          ++a.state.episodes;
        }
        if (a.state.start_frame == frame) {
          a.state.trigger_delta = target->delta;
          a.state.trigger_v_rel = v_rel;
          a.state.trigger_a_rel = a_rel;
        }
      }
    } else if (vector) {
      const auto it = a.predictors.find({*vector, t.cls});
      if (it == a.predictors.end())
        throw RuntimeFailure("safety hijacker: no trained predictor for " + std::string(to_string(*vector)) + "/" +
                             std::string(to_string(t.cls)));
      const auto d = safety_hijack_decide(v_rel, a_rel, target->delta, it->second, a.cfg.sh.k_max(t.cls),
                                          a.cfg.sh.gamma_for(*vector), a.cfg.sh.binary_search);
      if (d.attack && launch(a, t, *vector, d.K, camera_dets, victim_tracks, frame)) {
        a.state.trigger_delta = target->delta;
        a.state.trigger_v_rel = v_rel;
        a.state.trigger_a_rel = a_rel;
      }
    }
  }
  if (a.state.active) hijack_frame(a, r.dets, victim_tracks, dt, r.log);
  return r;
}

AttackStepResult random_attack_step(Attacker& a, const std::vector<sensing::Detection>& camera_dets,
                                    const perception::TrackSet& victim_tracks, const world::KinematicState& ego,
                                    std::int64_t frame, double dt) {
  AttackStepResult r{camera_dets, {}};
  r.log.frame = frame;
  a.shadow = perception::mot_step(a.shadow, camera_dets, dt, a.cfg.tracker);
  const auto target = select_target(a.shadow, ego, a.cfg.sh);
  if (target) r.log.delta_perceived = target->delta;

  if (!a.state.active && !a.state.random_fired && a.state.episodes < a.cfg.max_episodes &&
      frame >= a.launch_frame) {
    a.state.random_fired = true;
    std::uniform_int_distribution<int> kdist(a.cfg.random_k_min, a.cfg.random_k_max);
    const int K = kdist(a.rng);
    if (a.cfg.mode == Mode::NoSh && target) {
      const auto& t = *target->track;
      auto vector = scenario_match(t, a.cfg.lanes, a.cfg.sh.lat_vel_threshold, a.cfg.forced_vector);
      if (!vector) vector = a.cfg.forced_vector;
      if (vector) launch(a, t, *vector, K, camera_dets, victim_tracks, frame);
    } else if (a.cfg.mode == Mode::Random) {
      std::vector<const perception::Track*> candidates;
      if (!a.cfg.scene_objects.empty()) {
        std::uniform_int_distribution<std::size_t> opick(0, a.cfg.scene_objects.size() - 1);
        const int id = a.cfg.scene_objects[opick(a.rng)];
        for (const auto& t : a.shadow.tracks) {
          if (!t.confirmed) continue;
          const int j = match_detection(camera_dets, t.bbox(), t.cls);
          if (j >= 0 && camera_dets[j].object_truth_id == id) candidates.push_back(&t);
        }
      } else {
        for (const auto& t : a.shadow.tracks)
          if (t.confirmed) candidates.push_back(&t);
      }
      if (!candidates.empty()) {
        std::uniform_int_distribution<std::size_t> pick(0, candidates.size() - 1);
        std::uniform_int_distribution<int> vpick(0, 2);
        const auto& t = *candidates[pick(a.rng)];
        const auto vector = a.cfg.forced_vector.value_or(static_cast<AttackVector>(vpick(a.rng)));
        launch(a, t, vector, K, camera_dets, victim_tracks, frame);
      }
    }
  }
  if (a.state.active) hijack_frame(a, r.dets, victim_tracks, dt, r.log);
  return r;
}

void write_attack_log_header(std::ostream& out) {
  out << "frame,phase,vector,target_id,omega_applied,K_remaining,delta_perceived,delta_truth\n";
}

void append_attack_log(std::ostream& out, const AttackLogRow& row) {
  out << row.frame << ',' << to_string(row.phase) << ',' << (row.vector ? to_string(*row.vector) : "") << ','
      << row.target_id << ',' << row.omega_applied << ',' << row.K_remaining << ',' << row.delta_perceived << ','
      << row.delta_truth << '\n';
}

}  // namespace robotack::attack
