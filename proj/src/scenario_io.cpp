#include "robotack/scenario_io.hpp"

#include <fstream>
#include <sstream>

#include "json.hpp"

namespace robotack::world {

using nlohmann::json;

ScenarioConfig scenario_config_from_json(const std::string& text) {
  json j;
  try {
    j = json::parse(text);
  } catch (const json::parse_error& e) {
    throw ConfigError(std::string("scenario config: ") + e.what());
  }
  if (!j.is_object() || !j.contains("schema")) throw ConfigError("scenario config: missing schema field");
  if (j.at("schema").get<int>() != kScenarioSchema)
    throw ConfigError("scenario config: unsupported schema " + j.at("schema").dump());

  try {
    ScenarioConfig c;
    c.scenario_id = parse_scenario_id(j.at("scenario").get<std::string>());
    c.duration = j.value("duration", c.duration);
    c.frame_rate = j.value("frame_rate", c.frame_rate);
    c.ego_cruise_kph = j.value("ego_cruise_kph", c.ego_cruise_kph);
    if (j.contains("ego_initial_kph")) c.ego_initial_kph = j.at("ego_initial_kph").get<double>();
    c.rng_seed = j.value("rng_seed", std::uint64_t{0});
    for (const auto& ja : j.value("actors", json::array())) {
      ActorSpec s;
      s.cls = parse_object_class(ja.at("class").get<std::string>());
      s.lon_pos = ja.at("lon").get<double>();
      s.lat_pos = ja.at("lat").get<double>();
      s.speed = ja.value("speed", 0.0);
      s.start_delay = ja.value("start_delay", 0.0);
      if (ja.contains("footprint"))
        s.footprint = Footprint{ja.at("footprint").at(0).get<double>(), ja.at("footprint").at(1).get<double>()};
      for (const auto& wp : ja.value("waypoints", json::array()))
        s.waypoints.push_back({wp.at(0).get<double>(), wp.at(1).get<double>(), wp.at(2).get<double>()});
      c.actors.push_back(std::move(s));
    }
    if (!(c.frame_rate > 0.0)) throw ConfigError("scenario config: frame_rate must be positive");
    if (!(c.duration > 0.0)) throw ConfigError("scenario config: duration must be positive");
    return c;
  } catch (const json::exception& e) {
    throw ConfigError(std::string("scenario config: ") + e.what());
  }
}

std::string scenario_config_to_json(const ScenarioConfig& c) {
  json j;
  j["schema"] = kScenarioSchema;
  j["scenario"] = std::string(to_string(c.scenario_id));
  j["duration"] = c.duration;
  j["frame_rate"] = c.frame_rate;
  j["ego_cruise_kph"] = c.ego_cruise_kph;
  if (c.ego_initial_kph) j["ego_initial_kph"] = *c.ego_initial_kph;
  j["rng_seed"] = c.rng_seed;
  json actors = json::array();
  for (const auto& s : c.actors) {
    json ja;
    ja["class"] = std::string(to_string(s.cls));
    ja["lon"] = s.lon_pos;
    ja["lat"] = s.lat_pos;
    ja["speed"] = s.speed;
    ja["start_delay"] = s.start_delay;
    if (s.footprint) ja["footprint"] = {s.footprint->length, s.footprint->width};
    json wps = json::array();
    for (const auto& wp : s.waypoints) wps.push_back({wp.lon_pos, wp.lat_pos, wp.speed});
    ja["waypoints"] = wps;
    actors.push_back(ja);
  }
  j["actors"] = actors;
  return j.dump(2);
}

ScenarioConfig load_scenario_config(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot open scenario config: " + path.string());
  std::stringstream ss;
  ss << in.rdbuf();
  return scenario_config_from_json(ss.str());
}

}  // namespace robotack::world
