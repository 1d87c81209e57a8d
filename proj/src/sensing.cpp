#include "robotack/sensing.hpp"

#include <cmath>
#include <numbers>

namespace robotack::sensing {

MisdetectionModel MisdetectionModel::from_rate(double loc, double rate_lambda) {
  if (!(rate_lambda > 0.0)) throw ConfigError("misdetection rate must be positive");
  if (!(loc >= 1.0)) throw ConfigError("misdetection loc must be >= 1");
  return {loc, rate_lambda, loc + std::log(100.0) / rate_lambda};
}

double MisdetectionModel::expected_run_length() const {
  // P(round(X) >= n) = exp(-lambda (n - 1/2)) for n >= 1.
  const double l = rate_lambda;
  return loc + std::exp(-0.5 * l) / (1.0 - std::exp(-l));
}

namespace characterized {
MisdetectionModel vehicle_misdetection() { return MisdetectionModel::from_rate(1.0, 0.327); }
MisdetectionModel pedestrian_misdetection() { return MisdetectionModel::from_rate(1.0, 0.717); }
}  // namespace characterized

SensorChannelConfig SensorChannelConfig::camera_default() {
  SensorChannelConfig c;
  c.channel = Channel::Camera;
  c.fov_half_angle = 0.9;
  c.vehicle = {100.0, characterized::kVehicleNoise.scaled(kSimVehicleNoiseScale),
               characterized::vehicle_misdetection(), 0.005};
  c.pedestrian = {60.0, characterized::kPedestrianNoise.scaled(kSimPedestrianNoiseScale),
                  characterized::pedestrian_misdetection(), 0.01};
  return c;
}

SensorChannelConfig SensorChannelConfig::range_default() {
  SensorChannelConfig c;
  c.channel = Channel::Range;
  c.fov_half_angle = std::numbers::pi;
  const GaussianNoiseModel lidar{0.0, 0.02, 0.0, 0.02};
  c.vehicle = {80.0, lidar, std::nullopt, 0.0};
  c.pedestrian = {35.0, lidar, std::nullopt, 0.0};
  return c;
}

double run_onset_probability(const MisdetectionModel& model, double miss_rate) {
  if (miss_rate <= 0.0) return 0.0;
  if (miss_rate >= 1.0) return 1.0;
  // Runs per visible frame r = m / ((1 - m) E[L]); the frame after each run
  // takes no onset draw, so per-draw probability is r / (1 - r).
  const double r = miss_rate / ((1.0 - miss_rate) * model.expected_run_length());
  return r >= 1.0 ? 1.0 : r / (1.0 - r);
}

std::int64_t sample_misdetection_run(const MisdetectionModel& model, Rng& rng) {
  std::exponential_distribution<double> expo(model.rate_lambda);
  const auto n = std::llround(model.loc + expo(rng));
  return std::max<std::int64_t>(1, n);
}

Detection truth_detection(const world::Actor& actor, std::int64_t frame) {
  return {frame, Channel::Truth, actor.id, actor.cls, actor.box()};
}

std::vector<Detection> render_detections(const world::WorldState& world, const SensorChannelConfig& cfg,
                                         Rng& rng, SensorState& state) {
  std::vector<Detection> out;
  std::normal_distribution<double> gauss(0.0, 1.0);
  std::uniform_real_distribution<double> u01(0.0, 1.0);
  const auto& ego = world.ego.state;

  for (const auto& actor : world.actors) {
    const auto& p = cfg.params(actor.cls);
    const double rel_lon = actor.state.lon_pos - ego.lon_pos;
    const double rel_lat = actor.state.lat_pos - ego.lat_pos;
    const bool ahead = cfg.channel == Channel::Range || rel_lon > 0.0;
    const double bearing = std::atan2(std::abs(rel_lat), rel_lon);
    const double range = std::hypot(rel_lon, rel_lat);
    if (!ahead || bearing > cfg.fov_half_angle || range > p.effective_range) continue;

    if (p.misdetection) {
      // left > 0: frames still to miss; -1: run just ended, emit this frame.
      auto& left = state.frames_left_in_run[actor.id];
      if (left > 0) {
        if (--left == 0) left = -1;
        continue;
      }
      if (left < 0) {
        left = 0;
      } else if (u01(rng) < run_onset_probability(*p.misdetection, p.miss_rate)) {
        const auto n = sample_misdetection_run(*p.misdetection, rng);
        left = n > 1 ? n - 1 : -1;
        continue;
      }
    }

    const double zx = gauss(rng);
    const double zy = gauss(rng);
    Bbox box = actor.box();
    box.cx += (p.noise.mu_x + p.noise.sigma_x * zx) * box.w;
    box.cy += (p.noise.mu_y + p.noise.sigma_y * zy) * box.h;
    out.push_back({world.frame, cfg.channel, actor.id, actor.cls, box});
  }
  return out;
}

}  // namespace robotack::sensing
