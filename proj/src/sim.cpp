#include "robotack/sim.hpp"

#include <cmath>
#include <ostream>

#include "robotack/detection_log.hpp"
#include "robotack/safety.hpp"

namespace robotack::sim {

double target_delta_truth(const world::WorldState& w, int actor_id, double comfortable_decel) {
  const auto* a = w.find_actor(actor_id);
  const double d_stop = world::compute_stopping_distance(w.ego.state.speed, comfortable_decel);
  if (!a) return world::kEnvelopeHorizon - d_stop;
  const double gap = world::longitudinal_gap(w.ego.state, w.ego.footprint, a->state.lon_pos, a->footprint.length);
  return std::min(gap, world::kEnvelopeHorizon) - d_stop;
}

namespace {

bool finite_state(const world::WorldState& w) {
  const auto ok = [](const world::KinematicState& s) {
    return std::isfinite(s.lon_pos) && std::isfinite(s.lat_pos) && std::isfinite(s.speed) && std::isfinite(s.accel);
  };
  if (!ok(w.ego.state)) return false;
  for (const auto& a : w.actors)
    if (!ok(a.state)) return false;
  return true;
}

}  // namespace

SimResult run_simulation(const SimConfig& cfg, const attack::PredictorRegistry& predictors, std::uint64_t run_seed,
                         const SimLogs* logs) {
  world::ScenarioConfig scenario = cfg.scenario;
  scenario.rng_seed = run_seed;
  world::WorldState w = world::build_scenario(scenario);
  const double dt = scenario.dt();
  const std::int64_t frames = scenario.frames();

  Rng cam_rng = make_stream(run_seed, Stream::Camera);
  Rng range_rng = make_stream(run_seed, Stream::Range);
  sensing::SensorState cam_state, range_state;

  attack::AttackerConfig acfg = cfg.attacker;
  acfg.tracker = cfg.tracker;
  acfg.lanes = w.lanes;
  acfg.scene_objects.clear();
  for (const auto& actor : w.actors) acfg.scene_objects.push_back(actor.id);
  acfg.sh.comfortable_decel = cfg.planner.comfortable_decel;
  attack::Attacker attacker(acfg, predictors, make_stream(run_seed, Stream::Attack));

  // Truth rows for the detection log: the camera's field of view without
  // noise or misses, so the log pairs for characterization.
  sensing::SensorChannelConfig truth_cam = cfg.camera;
  for (auto cls : {ObjectClass::Vehicle, ObjectClass::Pedestrian}) {
    auto& p = truth_cam.params(cls);
    p.noise = {};
    p.misdetection.reset();
    p.miss_rate = 0.0;
  }
  Rng truth_rng = make_stream(run_seed, Stream::Camera);
  sensing::SensorState truth_state;

  perception::FusionPolicy fusion = cfg.fusion;
  fusion.dt = dt;
  fusion.lanes = w.lanes;
  world::PlannerConfig planner = cfg.planner;
  planner.dt = dt;

  if (logs && logs->world) write_world_log_header(*logs->world);
  if (logs && logs->tracks) perception::write_track_log_header(*logs->tracks);
  if (logs && logs->attack) attack::write_attack_log_header(*logs->attack);

  SimResult res;
  std::vector<sensing::Detection> det_log;
  perception::TrackSet tracks;
  world::ActuationCommand prev_cmd;
  bool eb_latched = false;
  std::int64_t label_frame = -1;
  double perceived_min = world::kEnvelopeHorizon;

  for (std::int64_t f = 0; f < frames; ++f) {
    w.frame = f;
    const auto cam = sensing::render_detections(w, cfg.camera, cam_rng, cam_state);
    const auto rng_dets = sensing::render_detections(w, cfg.range, range_rng, range_state);

    auto step = attack::attack_step(attacker, cam, tracks, w.ego.state, f, dt);
    tracks = perception::mot_step(tracks, step.dets, dt, cfg.tracker);
    tracks.frame = f;
    const auto perceived = perception::fuse(tracks, rng_dets, w.ego.state, fusion);

    world::PlanDiagnostics diag;
    const auto raw = world::ego_planner(perceived, w.ego.state, planner, eb_latched, &diag);
    const auto cmd = world::pid_smooth(prev_cmd, raw, planner);
    eb_latched = cmd.emergency_brake;

    FrameRecord rec;
    rec.frame = f;
    rec.time = w.time;
    rec.ego_lon = w.ego.state.lon_pos;
    rec.ego_speed = w.ego.state.speed;
    rec.accel_cmd = cmd.accel_cmd;
    rec.emergency_brake = cmd.emergency_brake;
    rec.d_safe = world::compute_safety_envelope(w);
    rec.d_stop = world::compute_stopping_distance(w.ego.state.speed, planner.comfortable_decel);
    rec.delta_truth = rec.d_safe - rec.d_stop;
    rec.delta_perceived = diag.delta;
    res.eb_occurred = res.eb_occurred || cmd.emergency_brake;
    res.min_delta = std::min(res.min_delta, rec.delta_truth);

    const auto& st = attacker.state;
    if (cfg.attacker.injection && st.start_frame >= 0 && label_frame < 0)
      label_frame = st.start_frame + cfg.attacker.injection->k;
    if (st.start_frame >= 0) perceived_min = std::min(perceived_min, rec.delta_perceived);
    if (label_frame == f && !res.label) {
      // MoveIn only moves the perceived object: its label is the lowest
      // potential the planner saw during the attack, capped at the trigger delta.
      res.label = st.vector == AttackVector::MoveIn
                      ? std::min(st.trigger_delta, perceived_min)
                      : target_delta_truth(w, st.target_truth_id, planner.comfortable_decel);
    }

    if (step.log.vector) {
      step.log.delta_truth = st.target_truth_id >= 0
                                 ? target_delta_truth(w, st.target_truth_id, planner.comfortable_decel)
                                 : rec.delta_truth;
      res.attack_log.push_back(step.log);
    }
    if (logs && logs->world) append_world_log(*logs->world, rec);
    if (logs && logs->tracks) perception::append_track_log(*logs->tracks, tracks);
    if (logs && logs->attack && step.log.vector) attack::append_attack_log(*logs->attack, step.log);
    if (logs && logs->detections) {
      for (const auto& d : step.dets) {
        det_log.push_back(d);
        det_log.back().frame = f;
      }
      for (auto d : sensing::render_detections(w, truth_cam, truth_rng, truth_state)) {
        d.channel = Channel::Truth;
        d.frame = f;
        det_log.push_back(d);
      }
    }
    res.frame_log.push_back(rec);
    res.frames = f + 1;

    if (res.min_delta < world::kSafeDeltaMin && cfg.halt_on_crash) break;
    if (cfg.stop_after_label >= 0 && res.label && f >= label_frame + cfg.stop_after_label) break;

    w = world::step_world(w, cmd, dt);
    prev_cmd = cmd;
    if (!finite_state(w)) {
      res.valid = false;
      res.invalid_reason = "non-finite world state at frame " + std::to_string(f);
      break;
    }
  }
  res.crash_occurred = res.min_delta < world::kSafeDeltaMin;
  if (logs && logs->detections) sensing::write_detection_log(*logs->detections, det_log);
  res.attack = attacker.state;
  return res;
}

void write_world_log_header(std::ostream& out) {
  out << "frame,time,ego_lon,ego_speed,accel_cmd,emergency_brake,d_safe,d_stop,delta_truth,delta_perceived\n";
}

void append_world_log(std::ostream& out, const FrameRecord& r) {
  out << r.frame << ',' << r.time << ',' << r.ego_lon << ',' << r.ego_speed << ',' << r.accel_cmd << ','
      << (r.emergency_brake ? 1 : 0) << ',' << r.d_safe << ',' << r.d_stop << ',' << r.delta_truth << ','
      << r.delta_perceived << '\n';
}

}  // namespace robotack::sim
