#pragma once

#include <cstdint>
#include <stdexcept>
#include <string>
#include <string_view>

namespace robotack {

// Thrown for invalid user input: configs, files, CLI arguments.
class ConfigError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// Thrown when a computation cannot proceed (numerical fault, bad data).
class RuntimeFailure : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

enum class ObjectClass : std::uint8_t { Vehicle, Pedestrian };
enum class Channel : std::uint8_t { Camera, Range, Truth };
enum class AttackVector : std::uint8_t { MoveOut, MoveIn, Disappear };
enum class ScenarioId : std::uint8_t { DS1, DS2, DS3, DS4, DS5 };

std::string_view to_string(ObjectClass c);
std::string_view to_string(Channel c);
std::string_view to_string(AttackVector v);
std::string_view to_string(ScenarioId s);

ObjectClass parse_object_class(std::string_view s);
Channel parse_channel(std::string_view s);
AttackVector parse_attack_vector(std::string_view s);
ScenarioId parse_scenario_id(std::string_view s);

// Axis-aligned box in the road-aligned sensor plane.
// cx is lateral (positive = left), cy is longitudinal; w is the lateral
// extent and h the longitudinal extent. All in meters.
struct Bbox {
  double cx = 0.0;
  double cy = 0.0;
  double w = 1.0;
  double h = 1.0;

  double left() const { return cx - 0.5 * w; }
  double right() const { return cx + 0.5 * w; }
  double rear() const { return cy - 0.5 * h; }
  double front() const { return cy + 0.5 * h; }
  double area() const { return w * h; }

  friend bool operator==(const Bbox&, const Bbox&) = default;
};

}  // namespace robotack
