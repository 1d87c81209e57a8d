#pragma once

#include <cstdint>
#include <functional>
#include <iosfwd>
#include <map>
#include <optional>
#include <string>
#include <utility>
#include <vector>

#include "robotack/rng.hpp"
#include "robotack/sensing.hpp"
#include "robotack/tracker.hpp"
#include "robotack/world.hpp"

namespace robotack::attack {

enum class Phase : std::uint8_t { Monitor, Shift, Maintain };
std::string_view to_string(Phase p);

enum class Mode : std::uint8_t { None, RoboTack, NoSh, Random };
std::string_view to_string(Mode m);
Mode parse_mode(std::string_view s);

// delta_{t+k} predicted from (v_rel, a_rel, delta_t, k).
using SafetyPredictor = std::function<double(double v_rel, double a_rel, double delta_t, int k)>;
using PredictorKey = std::pair<AttackVector, ObjectClass>;
using PredictorRegistry = std::map<PredictorKey, SafetyPredictor>;

struct ShConfig {
  double gamma = 4.0;  // m; crash goal for MoveOut/Disappear (10.0 presets the EB goal)
  // MoveIn cannot lower the true potential, only the perceived one, so its
  // goal is the planner's emergency-braking threshold.
  double gamma_move_in = 10.0;
  int k_max_pedestrian = 31;
  int k_max_vehicle = 59;
  bool binary_search = true;
  double comfortable_decel = 5.0;  // for the attacker's own d_stop
  double lat_vel_threshold = 0.3;  // m/s, Keep vs Moving In/Out

  int k_max(ObjectClass c) const { return c == ObjectClass::Vehicle ? k_max_vehicle : k_max_pedestrian; }
  double gamma_for(AttackVector v) const { return v == AttackVector::MoveIn ? gamma_move_in : gamma; }
};

// Per-frame lateral shift budget, normalized by box width, and the
// association-cost ceiling that keeps the victim track attached.
struct PerturbationBudget {
  double mu = 0.0;
  double sigma = 1.0;
  double lambda_assoc = 0.7;

  static PerturbationBudget from_noise(const sensing::GaussianNoiseModel& n, double lambda_assoc = 0.7) {
    return {n.mu_x, n.sigma_x, lambda_assoc};
  }
  double lo() const { return mu - sigma; }
  double hi() const { return mu + sigma; }
};

struct AttackState {
  bool active = false;
  AttackVector vector = AttackVector::MoveOut;
  ObjectClass target_class = ObjectClass::Vehicle;
  int target_truth_id = -1;  // evaluation only
  int shadow_track_id = -1;  // the attacker's own track of the target
  int victim_track_id = -1;  // the ADS track being hijacked
  int K = 0;                 // frames remaining
  int K_total = 0;
  int K_prime_used = 0;  // frames spent shifting
  double omega_progress = 0.0;
  double Omega = 0.0;
  double direction = 1.0;  // +1 left, -1 right
  Bbox faked_track_pose;
  Bbox last_target_box;  // clean detection of the target, last seen
  Phase phase = Phase::Monitor;
  int episodes = 0;
  std::int64_t start_frame = -1;
  bool random_fired = false;  // the random modes get one launch opportunity
  // Features seen by the launch decision (perceived delta, v_rel, a_rel).
  double trigger_delta = 0.0;
  double trigger_v_rel = 0.0;
  double trigger_a_rel = 0.0;
};

// Training-data collection: launch a fixed-length episode as soon as the
// perceived delta first reaches delta_inject and the scenario cell allows it.
struct Injection {
  double delta_inject = 0.0;
  int k = 0;  // 0 records the trigger without perturbing anything
};

struct AttackerConfig {
  Mode mode = Mode::RoboTack;
  std::optional<AttackVector> forced_vector;  // campaign-imposed vector
  ShConfig sh;
  PerturbationBudget budget_vehicle = PerturbationBudget::from_noise(
      sensing::SensorChannelConfig::camera_default().vehicle.noise);
  PerturbationBudget budget_pedestrian = PerturbationBudget::from_noise(
      sensing::SensorChannelConfig::camera_default().pedestrian.noise);
  double omega_margin = 0.2;  // m beyond the lane edge
  int max_episodes = 1;
  int random_k_min = 15;
  int random_k_max = 85;
  std::int64_t random_start_min = 0;  // frame window for random launches
  std::int64_t random_start_max = 450;
  std::optional<Injection> injection;  // replaces the safety hijacker when set
  perception::TrackerParams tracker;  // the attacker's shadow tracker and KF model
  world::LaneGeometry lanes;
  // Object ids in the scene; the random baseline draws its target from these
  // and does nothing if that object is not in view. Empty: draw among tracks.
  std::vector<int> scene_objects;

  const PerturbationBudget& budget(ObjectClass c) const {
    return c == ObjectClass::Vehicle ? budget_vehicle : budget_pedestrian;
  }
};

struct TargetSelection {
  const perception::Track* track = nullptr;
  double delta = 0.0;  // perceived safety potential against the target
};

// Closest confirmed track ahead of the ego by bumper gap; ties go to the
// lower track id. delta is measured against that track regardless of lane.
std::optional<TargetSelection> select_target(const perception::TrackSet& tracks, const world::KinematicState& ego,
                                             const ShConfig& cfg);

enum class LateralMotion : std::uint8_t { MovingIn, Keep, MovingOut };
LateralMotion classify_lateral_motion(const perception::Track& track, double threshold);

// The matching table. Vehicles get MoveOut and pedestrians Disappear where
// either fits. With `forced`, returns it only when the cell allows it.
std::optional<AttackVector> scenario_match(const perception::Track& track, const world::LaneGeometry& lanes,
                                           double lat_vel_threshold,
                                           std::optional<AttackVector> forced = std::nullopt);

struct ShDecision {
  bool attack = false;
  int K = 0;
};

// Smallest k in [0, k_max] with f(k) <= gamma, by binary search (assumes f
// non-increasing in k) or linear scan. K = 0 means the goal already holds,
// which is not an attack.
ShDecision safety_hijack_decide(double v_rel, double a_rel, double delta_t, const SafetyPredictor& f, int k_max,
                                double gamma, bool binary_search = true);

// Largest |shift| <= max_shift keeping 1 - IoU(box shifted laterally, ref) <= lambda.
double max_lateral_shift(const Bbox& box, const Bbox& ref, double direction, double max_shift, double lambda);

// One perturbed detection for the active episode, or nothing for Disappear.
// `predicted_track` is the victim's track advanced to this frame. Updates
// the shift bookkeeping in `state`; `omega_applied` receives the lateral
// offset from the predicted track center (m).
std::optional<sensing::Detection> hijack_detection(const sensing::Detection& det,
                                                   const perception::Track& predicted_track,
                                                   const PerturbationBudget& budget, AttackState& state,
                                                   double* omega_applied = nullptr);

double omega_target(const world::LaneGeometry& lanes, double target_width, double margin);

// Id of the same-class track best overlapping `box`, preferring tracks
// updated on their last frame: a coasting duplicate can overlap the object
// while the tracker feeds another track. -1 when nothing overlaps.
int match_track(const perception::TrackSet& tracks, const Bbox& box, ObjectClass cls);

struct AttackLogRow {
  std::int64_t frame = 0;
  Phase phase = Phase::Monitor;
  std::optional<AttackVector> vector;
  int target_id = -1;
  double omega_applied = 0.0;
  int K_remaining = 0;
  double delta_perceived = 0.0;
  double delta_truth = 0.0;  // filled by the simulator
  // Not written to the CSV; kept for invariant checks.
  double assoc_cost = 0.0;  // 1 - IoU(perturbed det, predicted victim track)
  double box_width = 0.0;
};

struct Attacker {
  AttackerConfig cfg;
  AttackState state;
  perception::TrackSet shadow;
  PredictorRegistry predictors;
  Rng rng;
  std::int64_t launch_frame = -1;  // drawn for the random modes

  Attacker(AttackerConfig c, PredictorRegistry p, Rng r);
};

struct AttackStepResult {
  std::vector<sensing::Detection> dets;
  AttackLogRow log;
};

// One camera frame of the attack loop. `victim_tracks` is the ADS tracker
// state from the previous frame. Dispatches on cfg.mode.
AttackStepResult attack_step(Attacker& attacker, const std::vector<sensing::Detection>& camera_dets,
                             const perception::TrackSet& victim_tracks, const world::KinematicState& ego,
                             std::int64_t frame, double dt);

// Baseline and ablation launches: one attempt at launch_frame, K ~ U{k_min..k_max}.
// NoSh uses the matched (or forced) vector on the selected target; Random a
// random confirmed track and a random vector. No target then means no attack.
AttackStepResult random_attack_step(Attacker& attacker, const std::vector<sensing::Detection>& camera_dets,
                                    const perception::TrackSet& victim_tracks, const world::KinematicState& ego,
                                    std::int64_t frame, double dt);

void write_attack_log_header(std::ostream& out);
void append_attack_log(std::ostream& out, const AttackLogRow& row);

}  // namespace robotack::attack
