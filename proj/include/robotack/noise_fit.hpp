#pragma once

#include <cstdint>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include "robotack/sensing.hpp"

namespace robotack::sensing {

struct NoiseFitConfig {
  Channel channel = Channel::Camera;
  double miss_iou_threshold = 0.6;  // a detection below this IoU counts as missed
  std::size_t min_samples = 1000;   // paired detections per class
  double run_loc = 1.0;
};

struct ClassFit {
  ObjectClass cls = ObjectClass::Vehicle;
  std::size_t paired = 0;
  GaussianNoiseModel noise;
  double abs_err_p99_x = 0.0;
  double abs_err_p99_y = 0.0;
  std::size_t runs = 0;  // uncensored misdetection runs
  std::optional<MisdetectionModel> misdetection;
  std::optional<double> run_p99;  // empirical
};

struct NoiseFitResult {
  std::map<ObjectClass, ClassFit> classes;
};

// Pairs `channel` detections with Truth rows by (frame, truth id). The
// Gaussian fit uses every paired detection. Misdetection runs are maximal
// stretches of consecutive truth frames with no detection at IoU >= the
// threshold; stretches touching either end of an object's track are
// censored and dropped. The run-length rate is the maximum-likelihood
// estimate for rounded loc + Exp(lambda) data.
// Throws RuntimeFailure when a class present in the log has fewer than
// min_samples pairs, or when nothing could be paired at all.
NoiseFitResult fit_noise_models(const std::vector<Detection>& log, const NoiseFitConfig& cfg = {});

// MLE of lambda given run lengths under round(loc + Exp(lambda)).
double fit_run_rate(const std::vector<std::int64_t>& runs, double loc);

std::string characterization_report_json(const NoiseFitResult& fit);

// Synthetic detector log: stationary objects observed for `frames` frames by
// a camera with the given per-class models. Truth rows are included.
struct SyntheticLogSpec {
  GaussianNoiseModel vehicle_noise;
  GaussianNoiseModel pedestrian_noise;
  std::optional<MisdetectionModel> vehicle_misdetection;
  std::optional<MisdetectionModel> pedestrian_misdetection;
  double miss_rate = 0.0;
  int objects_per_class = 10;
  std::int64_t frames = 1000;
  std::uint64_t seed = 0;
};
std::vector<Detection> synthesize_detector_log(const SyntheticLogSpec& spec);

}  // namespace robotack::sensing
