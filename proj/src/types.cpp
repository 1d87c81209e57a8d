#include "robotack/types.hpp"

#include <algorithm>
#include <cctype>

namespace robotack {

namespace {

std::string lower(std::string_view s) {
  std::string out(s);
  std::transform(out.begin(), out.end(), out.begin(),
                 [](unsigned char c) { return static_cast<char>(std::tolower(c)); });
  out.erase(std::remove(out.begin(), out.end(), '_'), out.end());
  out.erase(std::remove(out.begin(), out.end(), '-'), out.end());
  return out;
}

}  // namespace

std::string_view to_string(ObjectClass c) {
  return c == ObjectClass::Vehicle ? "Vehicle" : "Pedestrian";
}

std::string_view to_string(Channel c) {
  switch (c) {
    case Channel::Camera: return "Camera";
    case Channel::Range: return "Range";
    case Channel::Truth: return "Truth";
  }
  return "Camera";
}

std::string_view to_string(AttackVector v) {
  switch (v) {
    case AttackVector::MoveOut: return "MoveOut";
    case AttackVector::MoveIn: return "MoveIn";
    case AttackVector::Disappear: return "Disappear";
  }
  return "MoveOut";
}

std::string_view to_string(ScenarioId s) {
  switch (s) {
    case ScenarioId::DS1: return "DS1";
    case ScenarioId::DS2: return "DS2";
    case ScenarioId::DS3: return "DS3";
    case ScenarioId::DS4: return "DS4";
    case ScenarioId::DS5: return "DS5";
  }
  return "DS1";
}

ObjectClass parse_object_class(std::string_view s) {
  const auto k = lower(s);
  if (k == "vehicle") return ObjectClass::Vehicle;
  if (k == "pedestrian") return ObjectClass::Pedestrian;
  throw ConfigError("unknown object class: " + std::string(s));
}

Channel parse_channel(std::string_view s) {
  const auto k = lower(s);
  if (k == "camera") return Channel::Camera;
  if (k == "range") return Channel::Range;
  if (k == "truth") return Channel::Truth;
  throw ConfigError("unknown channel: " + std::string(s));
}

AttackVector parse_attack_vector(std::string_view s) {
  const auto k = lower(s);
  if (k == "moveout") return AttackVector::MoveOut;
  if (k == "movein") return AttackVector::MoveIn;
  if (k == "disappear") return AttackVector::Disappear;
  throw ConfigError("unknown attack vector: " + std::string(s));
}

ScenarioId parse_scenario_id(std::string_view s) {
  const auto k = lower(s);
  if (k == "ds1") return ScenarioId::DS1;
  if (k == "ds2") return ScenarioId::DS2;
  if (k == "ds3") return ScenarioId::DS3;
  if (k == "ds4") return ScenarioId::DS4;
  if (k == "ds5") return ScenarioId::DS5;
  throw ConfigError("unknown scenario id: " + std::string(s));
}

}  // namespace robotack
