#pragma once

#include <cstddef>
#include <string>
#include <vector>

#include "flyer/errors.hpp"
#include "flyer/quaternion.hpp"

namespace flyer {

/// Axis-aligned box with min < max on every axis.
class Aabb {
 public:
  /// Throws std::invalid_argument unless min < max componentwise and finite.
  Aabb(const Vec3& min_corner, const Vec3& max_corner);

  const Vec3& min_corner() const { return min_; }
  const Vec3& max_corner() const { return max_; }
  Vec3 center() const { return 0.5 * (min_ + max_); }

  bool contains(const Vec3& p) const;
  /// Minimum signed distance from p to the six faces; positive inside.
  double margin(const Vec3& p) const;
  bool overlaps_open(const Aabb& other) const;
  /// Intersection box; only valid when overlaps_open(other).
  Aabb intersection(const Aabb& other) const;
  /// Box shrunk by `amount` on every face; throws if it would collapse.
  Aabb shrunk(double amount) const;

 private:
  Vec3 min_;
  Vec3 max_;
};

/// Which endpoint of a box-sequence query fell outside every box.
enum class Endpoint { Start, Goal };

class OutsideCorridorError : public Error {
 public:
  OutsideCorridorError(Endpoint which, const Vec3& point);
  Endpoint endpoint() const { return which_; }

 private:
  Endpoint which_;
};

/// Ordered chain of safe boxes. Box i overlaps box i+1 (open intersection);
/// non-adjacent boxes may not overlap.
class Corridor {
 public:
  /// Throws std::invalid_argument when the chain conditions do not hold.
  explicit Corridor(std::vector<Aabb> boxes);

  const std::vector<Aabb>& boxes() const { return boxes_; }
  std::size_t size() const { return boxes_.size(); }
  const Aabb& box(std::size_t i) const { return boxes_.at(i); }

  /// Every box shrunk by a wall clearance (used for planning a body center).
  Corridor shrunk(double clearance) const;

 private:
  std::vector<Aabb> boxes_;
};

/// Violations of the chain rules, empty when `boxes` forms a valid corridor.
/// Box validity itself (min < max) is assumed.
std::vector<std::string> corridor_chain_violations(const std::vector<Aabb>& boxes);

bool contains_point(const Corridor& c, const Vec3& p);

/// Largest per-box face margin at p. Positive iff p is strictly inside some box.
double safety_margin(const Corridor& c, const Vec3& p);

/// Conservative: the sphere must fit entirely inside a single box.
bool sphere_is_safe(const Corridor& c, const Vec3& center, double radius);

/// Box indices a path from start to goal traverses along the chain.
/// Throws OutsideCorridorError naming the endpoint that lies outside.
std::vector<std::size_t> box_sequence_for(const Corridor& c, const Vec3& start, const Vec3& goal);

}  // namespace flyer
