#include <gtest/gtest.h>

#include <algorithm>
#include <cmath>
#include <string>
#include <sstream>

#include "robotack/detection_log.hpp"
#include "robotack/noise_fit.hpp"
#include "robotack/sensing.hpp"
#include "robotack/stats.hpp"

using namespace robotack;
using namespace robotack::sensing;

namespace {

world::WorldState world_with(ObjectClass cls, double lon, double lat = 0.0) {
  world::WorldState w;
  world::Actor a;
  a.id = 1;
  a.cls = cls;
  a.footprint = world::default_footprint(cls);
  a.state.lon_pos = lon;
  a.state.lat_pos = lat;
  w.actors.push_back(a);
  return w;
}

SensorChannelConfig noiseless_camera() {
  auto c = SensorChannelConfig::camera_default();
  c.vehicle.noise = c.pedestrian.noise = GaussianNoiseModel{};
  c.vehicle.miss_rate = c.pedestrian.miss_rate = 0.0;
  return c;
}

}  // namespace

TEST(Render, RangeChannelPedestrianGate) {
  auto cfg = SensorChannelConfig::range_default();
  Rng rng(1);
  SensorState st;
  EXPECT_TRUE(render_detections(world_with(ObjectClass::Pedestrian, 50.0), cfg, rng, st).empty());
  EXPECT_EQ(render_detections(world_with(ObjectClass::Pedestrian, 30.0), cfg, rng, st).size(), 1u);
  EXPECT_EQ(render_detections(world_with(ObjectClass::Vehicle, 50.0), cfg, rng, st).size(), 1u);
}

TEST(Render, OutOfFovAndBehindCameraAreDropped) {
  auto cfg = noiseless_camera();
  Rng rng(1);
  SensorState st;
  EXPECT_TRUE(render_detections(world_with(ObjectClass::Vehicle, -10.0), cfg, rng, st).empty());
  EXPECT_TRUE(render_detections(world_with(ObjectClass::Vehicle, 2.0, 6.0), cfg, rng, st).empty());
  EXPECT_TRUE(render_detections(world_with(ObjectClass::Vehicle, 150.0), cfg, rng, st).empty());
}

TEST(Render, NoiselessLimit) {
  auto cfg = noiseless_camera();
  Rng rng(3);
  SensorState st;
  const auto w = world_with(ObjectClass::Vehicle, 40.0, 1.0);
  const auto d = render_detections(w, cfg, rng, st);
  ASSERT_EQ(d.size(), 1u);
  EXPECT_NEAR(d[0].bbox.cx, 1.0, 1e-6);
  EXPECT_NEAR(d[0].bbox.cy, 40.0, 1e-6);
}

TEST(Render, VehicleLateralNoiseMatchesModel) {
  auto cfg = noiseless_camera();
  cfg.vehicle.noise = characterized::kVehicleNoise;
  Rng rng(11);
  SensorState st;
  const auto w = world_with(ObjectClass::Vehicle, 40.0);
  const double width = w.actors[0].footprint.width;
  std::vector<double> errs;
  for (int i = 0; i < 10000; ++i) errs.push_back(render_detections(w, cfg, rng, st).at(0).bbox.cx / width);
  const auto ks = stats::ks_test(errs, [](double x) { return stats::normal_cdf(x, 0.023, 0.464); });
  EXPECT_GT(ks.p_value, 0.01) << "D = " << ks.statistic;
}

TEST(Render, Reproducible) {
  const auto cfg = SensorChannelConfig::camera_default();
  const auto w = world_with(ObjectClass::Pedestrian, 20.0);
  Rng a(5), b(5);
  SensorState sa, sb;
  for (int i = 0; i < 500; ++i) ASSERT_EQ(render_detections(w, cfg, a, sa), render_detections(w, cfg, b, sb));
}

TEST(Render, MisdetectionRunsAreContiguous) {
  // With onset certain on every draw, the object alternates between a whole
  // run of misses and exactly one reappearance frame.
  auto cfg = noiseless_camera();
  cfg.vehicle.miss_rate = 0.999999;
  auto w = world_with(ObjectClass::Vehicle, 30.0);
  Rng rng(8);
  SensorState st;
  std::string seen;
  for (int f = 0; f < 5000; ++f) seen += render_detections(w, cfg, rng, st).empty() ? '0' : '1';
  EXPECT_EQ(seen.find("11"), std::string::npos);
  EXPECT_GT(std::count(seen.begin(), seen.end(), '1'), 500);
}

TEST(Render, RunLengthsMatchSampler) {
  auto cfg = noiseless_camera();
  cfg.vehicle.miss_rate = 0.3;
  const auto model = *cfg.vehicle.misdetection;
  auto w = world_with(ObjectClass::Vehicle, 30.0);
  Rng rng(9);
  SensorState st;
  std::vector<double> lengths;
  int run = 0;
  for (int f = 0; f < 200000; ++f) {
    if (render_detections(w, cfg, rng, st).empty()) {
      ++run;
    } else if (run > 0) {
      lengths.push_back(run);
      run = 0;
    }
  }
  EXPECT_NEAR(stats::mean(lengths), model.expected_run_length(), 0.05 * model.expected_run_length());
}

TEST(Render, MarginalMissRateMatchesOnsetModel) {
  auto cfg = noiseless_camera();
  cfg.pedestrian.miss_rate = 0.05;
  auto w = world_with(ObjectClass::Pedestrian, 10.0);
  Rng rng(10);
  SensorState st;
  int missed = 0;
  const int n = 200000;
  for (int f = 0; f < n; ++f) missed += render_detections(w, cfg, rng, st).empty();
  EXPECT_NEAR(static_cast<double>(missed) / n, 0.05, 0.005);
}

TEST(Misdetection, ModelP99Consistent) {
  for (double lam : {0.717, 0.327, 1.5}) {
    const auto m = MisdetectionModel::from_rate(1.0, lam);
    EXPECT_NEAR(m.p99, 1.0 + std::log(100.0) / lam, 1e-12);
  }
  EXPECT_THROW(MisdetectionModel::from_rate(1.0, 0.0), ConfigError);
  EXPECT_THROW(MisdetectionModel::from_rate(0.5, 1.0), ConfigError);
}

TEST(Misdetection, SamplerQuantilesAgreeWithModel) {
  // Oracle: the 99th percentile of round(1 + Exp(l)) is round(1 + ln(100)/l)
  // up to one frame of rounding.
  for (const auto& m : {characterized::pedestrian_misdetection(), characterized::vehicle_misdetection()}) {
    Rng rng(21);
    std::vector<double> xs;
    for (int i = 0; i < 100000; ++i) xs.push_back(static_cast<double>(sample_misdetection_run(m, rng)));
    EXPECT_NEAR(stats::percentile(xs, 99.0), m.p99, 1.0);
    EXPECT_GE(*std::min_element(xs.begin(), xs.end()), 1.0);
  }
}

TEST(Misdetection, SamplerDeterministic) {
  const auto m = characterized::vehicle_misdetection();
  Rng a(4), b(4);
  for (int i = 0; i < 100; ++i) EXPECT_EQ(sample_misdetection_run(m, a), sample_misdetection_run(m, b));
}

TEST(NoiseFit, RecoversInjectedGaussian) {
  SyntheticLogSpec spec;
  spec.vehicle_noise = characterized::kVehicleNoise;
  spec.pedestrian_noise = characterized::kPedestrianNoise;
  spec.objects_per_class = 10;
  spec.frames = 1000;
  spec.seed = 3;
  const auto fit = fit_noise_models(synthesize_detector_log(spec));
  const auto& v = fit.classes.at(ObjectClass::Vehicle).noise;
  const auto& p = fit.classes.at(ObjectClass::Pedestrian).noise;
  EXPECT_NEAR(v.mu_y, 0.094, 0.1 * 0.094);
  EXPECT_NEAR(v.sigma_y, 0.586, 0.1 * 0.586);
  EXPECT_NEAR(p.sigma_x, 2.010, 0.1 * 2.010);
}

TEST(NoiseFit, ZeroNoiseGivesTinySigma) {
  SyntheticLogSpec spec;
  spec.objects_per_class = 2;
  spec.frames = 600;
  const auto fit = fit_noise_models(synthesize_detector_log(spec));
  for (const auto& [cls, f] : fit.classes) {
    EXPECT_LT(f.noise.sigma_x, 0.01);
    EXPECT_LT(f.noise.sigma_y, 0.01);
    EXPECT_EQ(f.runs, 0u);
  }
}

TEST(NoiseFit, RecoversInjectedRunRate) {
  SyntheticLogSpec spec;
  spec.vehicle_misdetection = characterized::vehicle_misdetection();
  spec.miss_rate = 0.5;
  spec.objects_per_class = 40;
  spec.frames = 2000;
  spec.seed = 5;
  const auto fit = fit_noise_models(synthesize_detector_log(spec));
  const auto& f = fit.classes.at(ObjectClass::Vehicle);
  ASSERT_TRUE(f.misdetection);
  EXPECT_NEAR(f.misdetection->rate_lambda, 0.327, 0.1 * 0.327);
}

TEST(NoiseFit, RunRateOracle) {
  // Runs all of length 1 -> rounding mean 0 -> lambda at the cap.
  EXPECT_GE(fit_run_rate({1, 1, 1}, 1.0), 20.0);
  // Hand-computed: mean excess 1 solves exp(-l/2) = 1 - exp(-l) -> l = 2 ln(golden ratio).
  EXPECT_NEAR(fit_run_rate({1, 2, 3}, 1.0), 2.0 * std::log((1.0 + std::sqrt(5.0)) / 2.0), 1e-9);
}

TEST(NoiseFit, InsufficientSamplesThrows) {
  SyntheticLogSpec spec;
  spec.objects_per_class = 1;
  spec.frames = 100;
  EXPECT_THROW(fit_noise_models(synthesize_detector_log(spec)), RuntimeFailure);
  EXPECT_THROW(fit_noise_models({}), RuntimeFailure);
}

TEST(NoiseFit, ReportHasParameters) {
  SyntheticLogSpec spec;
  spec.pedestrian_misdetection = characterized::pedestrian_misdetection();
  spec.miss_rate = 0.3;
  spec.objects_per_class = 2;
  spec.frames = 1000;
  const auto json = characterization_report_json(fit_noise_models(synthesize_detector_log(spec)));
  EXPECT_NE(json.find("rate_lambda"), std::string::npos);
  EXPECT_NE(json.find("p99_empirical"), std::string::npos);
  EXPECT_NE(json.find("sigma_x"), std::string::npos);
}

TEST(DetectionLog, CsvRoundTripIsExact) {
  SyntheticLogSpec spec;
  spec.vehicle_noise = characterized::kVehicleNoise;
  spec.objects_per_class = 2;
  spec.frames = 20;
  const auto log = synthesize_detector_log(spec);
  std::stringstream ss;
  write_detection_log(ss, log);
  EXPECT_EQ(read_detection_log(ss), log);
}

TEST(DetectionLog, RejectsMalformed) {
  std::stringstream bad("nope\n");
  EXPECT_THROW(read_detection_log(bad), ConfigError);
  std::stringstream cols("frame,channel,truth_id,class,cx,cy,w,h\n1,Camera,2\n");
  EXPECT_THROW(read_detection_log(cols), ConfigError);
}
