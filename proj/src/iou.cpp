#include "robotack/iou.hpp"

#include <algorithm>
#include <stdexcept>

namespace robotack::perception {

double iou(const Bbox& a, const Bbox& b) {
  if (!(a.w > 0.0 && a.h > 0.0 && b.w > 0.0 && b.h > 0.0)) throw std::invalid_argument("iou: degenerate box");
  const double ix = std::max(0.0, std::min(a.right(), b.right()) - std::max(a.left(), b.left()));
  const double iy = std::max(0.0, std::min(a.front(), b.front()) - std::max(a.rear(), b.rear()));
  const double inter = ix * iy;
  if (inter <= 0.0) return 0.0;
  if (a == b) return 1.0;
  return std::clamp(inter / (a.area() + b.area() - inter), 0.0, 1.0);
}

}  // namespace robotack::perception
