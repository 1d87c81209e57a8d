#pragma once

#include <filesystem>
#include <string>

#include "robotack/world.hpp"

namespace robotack::world {

// Scenario files are JSON with a mandatory "schema": 1 field, e.g.
//
//   {"schema": 1, "scenario": "DS1", "duration": 45, "frame_rate": 15,
//    "ego_cruise_kph": 45, "rng_seed": 7,
//    "actors": [{"class": "Vehicle", "lon": 60, "lat": 0, "speed": 6.94,
//                "waypoints": [[1000, 0, 6.94]]}]}
//
// "actors", "ego_initial_kph", "duration", "frame_rate" and "ego_cruise_kph"
// are optional.
constexpr int kScenarioSchema = 1;

ScenarioConfig scenario_config_from_json(const std::string& text);
std::string scenario_config_to_json(const ScenarioConfig& config);
ScenarioConfig load_scenario_config(const std::filesystem::path& path);

}  // namespace robotack::world
