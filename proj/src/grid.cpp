#include "saa/grid.hpp"

#include <cmath>
#include <stdexcept>

namespace saa {

DesignGrid::DesignGrid(std::vector<double> points) : points_(std::move(points)) {
  if (points_.size() < 2) {
    throw std::invalid_argument("design grid needs at least two points");
  }
  for (std::size_t i = 0; i < points_.size(); ++i) {
    if (!std::isfinite(points_[i])) {
      throw std::invalid_argument("design grid point is not finite");
    }
    if (i > 0 && !(points_[i] > points_[i - 1])) {
      throw std::invalid_argument("design grid points must be strictly increasing");
    }
  }
}

DesignGrid DesignGrid::equispaced(double lo, double hi, std::size_t count) {
  if (count < 2 || !(hi > lo)) {
    throw std::invalid_argument("equispaced grid needs count >= 2 and hi > lo");
  }
  std::vector<double> pts(count);
  const double h = (hi - lo) / static_cast<double>(count - 1);
  for (std::size_t i = 0; i < count; ++i) {
    pts[i] = lo + h * static_cast<double>(i);
  }
  pts.back() = hi;
  return DesignGrid(std::move(pts));
}

}  // namespace saa
