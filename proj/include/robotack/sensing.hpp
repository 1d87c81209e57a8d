#pragma once

#include <cstdint>
#include <map>
#include <optional>
#include <vector>

#include "robotack/rng.hpp"
#include "robotack/types.hpp"
#include "robotack/world.hpp"

namespace robotack::sensing {

struct Detection {
  std::int64_t frame = 0;
  Channel channel = Channel::Camera;
  int object_truth_id = -1;  // evaluation only; perception must not read it
  ObjectClass cls = ObjectClass::Vehicle;
  Bbox bbox;

  friend bool operator==(const Detection&, const Detection&) = default;
};

// Center error normalized by box size: x along the box width (lateral),
// y along the box height (longitudinal).
struct GaussianNoiseModel {
  double mu_x = 0.0;
  double sigma_x = 1e-9;
  double mu_y = 0.0;
  double sigma_y = 1e-9;

  GaussianNoiseModel scaled(double factor) const {
    return {mu_x * factor, sigma_x * factor, mu_y * factor, sigma_y * factor};
  }
};

// Continuous-misdetection run length in frames: loc + Exp(rate_lambda),
// rounded to whole frames.
struct MisdetectionModel {
  double loc = 1.0;
  double rate_lambda = 1.0;
  double p99 = 1.0;  // loc + ln(100) / rate_lambda

  static MisdetectionModel from_rate(double loc, double rate_lambda);
  // Mean run length of the rounded model (integer loc).
  double expected_run_length() const;
};

// Detector characterization measured on the reference stack.
namespace characterized {
inline constexpr GaussianNoiseModel kVehicleNoise{0.023, 0.464, 0.094, 0.586};
inline constexpr GaussianNoiseModel kPedestrianNoise{0.254, 2.010, 0.186, 0.409};
MisdetectionModel vehicle_misdetection();     // loc 1, lambda 0.327
MisdetectionModel pedestrian_misdetection();  // loc 1, lambda 0.717
// Observed 99th percentiles of continuous misdetection runs (frames). These
// seed the attacker's stealth ceilings.
inline constexpr double kVehicleRunP99 = 59.4;
inline constexpr double kPedestrianRunP99 = 31.0;
}  // namespace characterized

// The simulated camera is a better detector than the characterized one: the
// characterized normalized errors exceed what IoU association tolerates in
// a metric top-down plane, so camera noise defaults to a fraction of it.
// Pedestrian boxes are small enough that they need the smaller fraction.
inline constexpr double kSimVehicleNoiseScale = 0.15;
inline constexpr double kSimPedestrianNoiseScale = 0.08;

struct ClassParams {
  double effective_range = 100.0;  // m
  GaussianNoiseModel noise;
  std::optional<MisdetectionModel> misdetection;  // camera only
  double miss_rate = 0.0;                         // marginal fraction of missed frames
};

struct SensorChannelConfig {
  Channel channel = Channel::Camera;
  double frame_rate = 15.0;
  double fov_half_angle = 0.9;  // rad
  ClassParams vehicle;
  ClassParams pedestrian;

  const ClassParams& params(ObjectClass c) const { return c == ObjectClass::Vehicle ? vehicle : pedestrian; }
  ClassParams& params(ObjectClass c) { return c == ObjectClass::Vehicle ? vehicle : pedestrian; }

  static SensorChannelConfig camera_default();
  static SensorChannelConfig range_default();
};

// Per-object misdetection bookkeeping carried between frames.
struct SensorState {
  std::map<int, std::int64_t> frames_left_in_run;
};

// Per-frame probability of a run starting, chosen so that the long-run
// fraction of missed frames equals `miss_rate`. The frame right after a run
// is always emitted and takes no draw.
double run_onset_probability(const MisdetectionModel& model, double miss_rate);

std::int64_t sample_misdetection_run(const MisdetectionModel& model, Rng& rng);

// One detection per visible actor, ordered by actor id. Visible means ahead
// of the ego within the field of view (any direction for the range channel)
// and the per-class effective range, and not inside a misdetection run.
std::vector<Detection> render_detections(const world::WorldState& world, const SensorChannelConfig& cfg,
                                         Rng& rng, SensorState& state);

// The noiseless box of an actor, as a Truth-channel detection.
Detection truth_detection(const world::Actor& actor, std::int64_t frame);

}  // namespace robotack::sensing
