#include "flyer/corridor.hpp"

#include <algorithm>
#include <cmath>
#include <cstdlib>
#include <limits>
#include <sstream>
#include <stdexcept>

namespace flyer {

Aabb::Aabb(const Vec3& min_corner, const Vec3& max_corner) : min_(min_corner), max_(max_corner) {
  if (!min_.allFinite() || !max_.allFinite() || !(min_.array() < max_.array()).all()) {
    throw std::invalid_argument("Aabb: min_corner must be strictly below max_corner on every axis");
  }
}

bool Aabb::contains(const Vec3& p) const {
  return (p.array() >= min_.array()).all() && (p.array() <= max_.array()).all();
}

double Aabb::margin(const Vec3& p) const {
  return std::min((p - min_).minCoeff(), (max_ - p).minCoeff());
}

bool Aabb::overlaps_open(const Aabb& other) const {
  return (min_.array() < other.max_.array()).all() && (other.min_.array() < max_.array()).all();
}

Aabb Aabb::intersection(const Aabb& other) const {
  return {min_.cwiseMax(other.min_), max_.cwiseMin(other.max_)};
}

Aabb Aabb::shrunk(double amount) const {
  const Vec3 d = Vec3::Constant(amount);
  if (!((max_ - min_).array() > 2.0 * amount).all()) {
    throw std::invalid_argument("Aabb::shrunk: clearance collapses the box");
  }
  return {min_ + d, max_ - d};
}

OutsideCorridorError::OutsideCorridorError(Endpoint which, const Vec3& point)
    : Error([&] {
        std::ostringstream os;
        os << (which == Endpoint::Start ? "start" : "goal") << " point (" << point.x() << ", "
           << point.y() << ", " << point.z() << ") lies outside every corridor box";
        return os.str();
      }()),
      which_(which) {}

std::vector<std::string> corridor_chain_violations(const std::vector<Aabb>& boxes) {
  std::vector<std::string> out;
  if (boxes.empty()) {
    out.emplace_back("corridor has no boxes");
    return out;
  }
  for (std::size_t i = 0; i + 1 < boxes.size(); ++i) {
    if (!boxes[i].overlaps_open(boxes[i + 1])) {
      out.push_back("boxes " + std::to_string(i) + " and " + std::to_string(i + 1) +
                    " do not overlap");
    }
  }
  for (std::size_t i = 0; i < boxes.size(); ++i) {
    for (std::size_t j = i + 2; j < boxes.size(); ++j) {
      if (boxes[i].overlaps_open(boxes[j])) {
        out.push_back("non-adjacent boxes " + std::to_string(i) + " and " + std::to_string(j) +
                      " overlap (corridor must be a chain)");
      }
    }
  }
  return out;
}

Corridor::Corridor(std::vector<Aabb> boxes) : boxes_(std::move(boxes)) {
  const auto violations = corridor_chain_violations(boxes_);
  if (!violations.empty()) {
    throw std::invalid_argument("Corridor: " + violations.front());
  }
}

Corridor Corridor::shrunk(double clearance) const {
  std::vector<Aabb> out;
  out.reserve(boxes_.size());
  for (const auto& b : boxes_) out.push_back(b.shrunk(clearance));
  return Corridor(std::move(out));
}

bool contains_point(const Corridor& c, const Vec3& p) {
  return std::any_of(c.boxes().begin(), c.boxes().end(),
                     [&](const Aabb& b) { return b.contains(p); });
}

double safety_margin(const Corridor& c, const Vec3& p) {
  double best = -std::numeric_limits<double>::infinity();
  for (const auto& b : c.boxes()) best = std::max(best, b.margin(p));
  return best;
}

bool sphere_is_safe(const Corridor& c, const Vec3& center, double radius) {
  if (!(radius >= 0.0)) {
    throw std::invalid_argument("sphere_is_safe: radius must be >= 0");
  }
  return safety_margin(c, center) >= radius;
}

std::vector<std::size_t> box_sequence_for(const Corridor& c, const Vec3& start, const Vec3& goal) {
  std::vector<std::size_t> in_start;
  std::vector<std::size_t> in_goal;
  for (std::size_t i = 0; i < c.size(); ++i) {
    if (c.box(i).contains(start)) in_start.push_back(i);
    if (c.box(i).contains(goal)) in_goal.push_back(i);
  }
  if (in_start.empty()) throw OutsideCorridorError(Endpoint::Start, start);
  if (in_goal.empty()) throw OutsideCorridorError(Endpoint::Goal, goal);

  // shortest chain interval; ties go to the lowest start index
  std::size_t best_i = in_start.front();
  std::size_t best_j = in_goal.front();
  std::size_t best_len = std::numeric_limits<std::size_t>::max();
  for (const auto i : in_start) {
    for (const auto j : in_goal) {
      const std::size_t len = i > j ? i - j : j - i;
      if (len < best_len) {
        best_len = len;
        best_i = i;
        best_j = j;
      }
    }
  }
  std::vector<std::size_t> seq;
  if (best_i <= best_j) {
    for (std::size_t k = best_i; k <= best_j; ++k) seq.push_back(k);
  } else {
    for (std::size_t k = best_i + 1; k-- > best_j;) seq.push_back(k);
  }
  return seq;
}

}  // namespace flyer
