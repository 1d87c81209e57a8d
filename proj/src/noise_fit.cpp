#include "robotack/noise_fit.hpp"

#include <cmath>
#include <numbers>
#include <tuple>

#include "json.hpp"
#include "robotack/iou.hpp"
#include "robotack/stats.hpp"

namespace robotack::sensing {

double fit_run_rate(const std::vector<std::int64_t>& runs, double loc) {
  if (runs.empty()) throw RuntimeFailure("no misdetection runs to fit");
  double excess = 0.0;
  for (auto r : runs) excess += static_cast<double>(r) - loc;
  excess /= static_cast<double>(runs.size());
  // E[round(X)] = exp(-l/2) / (1 - exp(-l)) is strictly decreasing in l.
  const auto m = [](double l) { return std::exp(-0.5 * l) / (-std::expm1(-l)); };
  if (excess <= m(50.0)) return 50.0;
  double lo = 1e-6, hi = 50.0;
  for (int i = 0; i < 200; ++i) {
    const double mid = 0.5 * (lo + hi);
    (m(mid) > excess ? lo : hi) = mid;
  }
  return 0.5 * (lo + hi);
}

NoiseFitResult fit_noise_models(const std::vector<Detection>& log, const NoiseFitConfig& cfg) {
  // (truth id) -> frame -> truth box / detection box
  struct Track {
    ObjectClass cls;
    std::map<std::int64_t, Bbox> truth;
    std::map<std::int64_t, Bbox> det;
  };
  std::map<int, Track> tracks;
  for (const auto& d : log) {
    if (d.channel == Channel::Truth) {
      auto& t = tracks.try_emplace(d.object_truth_id, Track{d.cls, {}, {}}).first->second;
      t.truth[d.frame] = d.bbox;
    }
  }
  for (const auto& d : log) {
    if (d.channel != cfg.channel) continue;
    auto it = tracks.find(d.object_truth_id);
    if (it != tracks.end()) it->second.det[d.frame] = d.bbox;
  }

  struct Acc {
    std::vector<double> ex, ey;
    std::vector<std::int64_t> runs;
  };
  std::map<ObjectClass, Acc> acc;
  for (const auto& [id, t] : tracks) {
    auto& a = acc[t.cls];
    std::int64_t run = 0;
    bool left_censored = true;
    std::int64_t prev_frame = 0;
    bool first = true;
    for (const auto& [frame, gt] : t.truth) {
      if (!first && frame != prev_frame + 1) {  // gap in truth: restart
        run = 0;
        left_censored = true;
      }
      first = false;
      prev_frame = frame;
      const auto dit = t.det.find(frame);
      bool hit = false;
      if (dit != t.det.end()) {
        a.ex.push_back((dit->second.cx - gt.cx) / gt.w);
        a.ey.push_back((dit->second.cy - gt.cy) / gt.h);
        hit = perception::iou(dit->second, gt) >= cfg.miss_iou_threshold;
      }
      if (hit) {
        if (run > 0 && !left_censored) a.runs.push_back(run);
        run = 0;
        left_censored = false;
      } else {
        ++run;
      }
    }
  }

  NoiseFitResult out;
  for (auto& [cls, a] : acc) {
    if (a.ex.size() < cfg.min_samples)
      throw RuntimeFailure("insufficient paired samples for " + std::string(to_string(cls)) + ": " +
                           std::to_string(a.ex.size()) + " < " + std::to_string(cfg.min_samples));
    ClassFit f;
    f.cls = cls;
    f.paired = a.ex.size();
    f.noise = {stats::mean(a.ex), stats::stddev_mle(a.ex), stats::mean(a.ey), stats::stddev_mle(a.ey)};
    std::vector<double> ax, ay;
    for (double e : a.ex) ax.push_back(std::abs(e));
    for (double e : a.ey) ay.push_back(std::abs(e));
    f.abs_err_p99_x = stats::percentile(ax, 99.0);
    f.abs_err_p99_y = stats::percentile(ay, 99.0);
    f.runs = a.runs.size();
    if (!a.runs.empty()) {
      f.misdetection = MisdetectionModel::from_rate(cfg.run_loc, fit_run_rate(a.runs, cfg.run_loc));
      f.run_p99 = stats::percentile(std::vector<double>(a.runs.begin(), a.runs.end()), 99.0);
    }
    out.classes[cls] = f;
  }
  if (out.classes.empty()) throw RuntimeFailure("insufficient samples: no paired detections in log");
  return out;
}

std::string characterization_report_json(const NoiseFitResult& fit) {
  nlohmann::json j;
  j["schema"] = 1;
  for (const auto& [cls, f] : fit.classes) {
    nlohmann::json c;
    c["paired_samples"] = f.paired;
    c["center_error"] = {{"mu_x", f.noise.mu_x},
                         {"sigma_x", f.noise.sigma_x},
                         {"mu_y", f.noise.mu_y},
                         {"sigma_y", f.noise.sigma_y},
                         {"abs_p99_x", f.abs_err_p99_x},
                         {"abs_p99_y", f.abs_err_p99_y}};
    nlohmann::json m;
    m["runs"] = f.runs;
    if (f.misdetection) {
      m["loc"] = f.misdetection->loc;
      m["rate_lambda"] = f.misdetection->rate_lambda;
      m["p99_model"] = f.misdetection->p99;
    }
    if (f.run_p99) m["p99_empirical"] = *f.run_p99;
    c["misdetection"] = m;
    j["classes"][std::string(to_string(cls))] = c;
  }
  return j.dump(2);
}

std::vector<Detection> synthesize_detector_log(const SyntheticLogSpec& spec) {
  SensorChannelConfig cam;
  cam.channel = Channel::Camera;
  cam.fov_half_angle = std::numbers::pi;
  cam.vehicle = {1e9, spec.vehicle_noise, spec.vehicle_misdetection, spec.miss_rate};
  cam.pedestrian = {1e9, spec.pedestrian_noise, spec.pedestrian_misdetection, spec.miss_rate};

  world::WorldState w;
  w.ego.id = 0;
  int id = 1;
  for (auto cls : {ObjectClass::Vehicle, ObjectClass::Pedestrian}) {
    for (int i = 0; i < spec.objects_per_class; ++i) {
      world::Actor a;
      a.id = id++;
      a.cls = cls;
      a.footprint = world::default_footprint(cls);
      a.state.lon_pos = 10.0 + 8.0 * i;
      a.state.lat_pos = cls == ObjectClass::Vehicle ? 3.5 : -3.0;
      w.actors.push_back(a);
    }
  }

  Rng rng = make_stream(spec.seed, Stream::Camera);
  SensorState state;
  std::vector<Detection> log;
  for (std::int64_t f = 0; f < spec.frames; ++f) {
    w.frame = f;
    for (const auto& a : w.actors) log.push_back(truth_detection(a, f));
    for (auto& d : render_detections(w, cam, rng, state)) log.push_back(d);
  }
  return log;
}

}  // namespace robotack::sensing
