#pragma once

#include <cstddef>
#include <span>
#include <vector>

namespace saa {

/// Ordered finite set of design points. At least two points, strictly
/// increasing.
class DesignGrid {
 public:
  explicit DesignGrid(std::vector<double> points);

  /// `count` equispaced points covering [lo, hi] inclusive.
  static DesignGrid equispaced(double lo, double hi, std::size_t count);

  std::size_t size() const { return points_.size(); }
  double operator[](std::size_t i) const { return points_[i]; }
  std::span<const double> points() const { return points_; }

 private:
  std::vector<double> points_;
};

}  // namespace saa
