#pragma once

#include <Eigen/Core>
#include <Eigen/Geometry>

#include <algorithm>
#include <array>
#include <cstdint>
#include <limits>

namespace beltpick {

using Vec2 = Eigen::Vector2d;
using Vec3 = Eigen::Vector3d;
using Mat3 = Eigen::Matrix3d;

struct Ray {
  Vec3 origin;
  Vec3 dir;  // unit
};

struct Aabb {
  Vec3 lo = Vec3::Constant(std::numeric_limits<double>::infinity());
  Vec3 hi = Vec3::Constant(-std::numeric_limits<double>::infinity());

  bool empty() const { return (lo.array() > hi.array()).any(); }
  void extend(const Vec3& p) {
    lo = lo.cwiseMin(p);
    hi = hi.cwiseMax(p);
  }
  void extend(const Aabb& b) {
    lo = lo.cwiseMin(b.lo);
    hi = hi.cwiseMax(b.hi);
  }
  Aabb inflated(double r) const { return {lo.array() - r, hi.array() + r}; }
  Vec3 center() const { return 0.5 * (lo + hi); }
  Vec3 extent() const { return hi - lo; }
  bool overlaps(const Aabb& b) const {
    return (lo.array() <= b.hi.array()).all() && (b.lo.array() <= hi.array()).all();
  }
  bool contains(const Vec3& p) const {
    return (p.array() >= lo.array()).all() && (p.array() <= hi.array()).all();
  }
  double distance_sq(const Vec3& p) const {
    const Vec3 d = (lo - p).cwiseMax(p - hi).cwiseMax(Vec3::Zero());
    return d.squaredNorm();
  }

  // Slab test; returns entry distance or +inf on miss.
  double ray_entry(const Ray& ray, double t_max) const {
    double t0 = 0.0;
    double t1 = t_max;
    for (int a = 0; a < 3; ++a) {
      if (ray.dir[a] == 0.0) {
        if (ray.origin[a] < lo[a] || ray.origin[a] > hi[a]) return std::numeric_limits<double>::infinity();
        continue;
      }
      const double inv = 1.0 / ray.dir[a];
      double tn = (lo[a] - ray.origin[a]) * inv;
      double tf = (hi[a] - ray.origin[a]) * inv;
      if (tn > tf) std::swap(tn, tf);
      t0 = tn > t0 ? tn : t0;
      t1 = tf < t1 ? tf : t1;
      if (t0 > t1) return std::numeric_limits<double>::infinity();
    }
    return t0;
  }
};

// Deterministic unit vectors (u, v) completing `d` to a right-handed frame.
inline void orthonormal_basis(const Vec3& d, Vec3& u, Vec3& v) {
  const Vec3 helper = std::abs(d.x()) < 0.9 ? Vec3::UnitX() : Vec3::UnitY();
  u = d.cross(helper).normalized();
  v = d.cross(u);
}

}  // namespace beltpick
