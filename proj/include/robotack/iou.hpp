#pragma once

#include "robotack/types.hpp"

namespace robotack::perception {

// Intersection over union of two axis-aligned boxes. Throws
// std::invalid_argument on non-positive width or height.
double iou(const Bbox& a, const Bbox& b);

}  // namespace robotack::perception
