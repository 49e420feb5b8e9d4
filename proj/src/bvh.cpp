#include "beltpick/bvh.hpp"

#include <algorithm>

#include "beltpick/error.hpp"

namespace beltpick {

namespace {
constexpr std::uint32_t kLeafSize = 4;
}

Bvh::Bvh(std::shared_ptr<const TriMesh> mesh) : mesh_(std::move(mesh)) {
  if (!mesh_ || mesh_->triangles.empty()) throw Error(Errc::kInvalidArgument, "BVH needs a non-empty mesh");
  const auto n = static_cast<std::uint32_t>(mesh_->triangles.size());
  face_boxes_.resize(n);
  std::vector<Vec3> centroids(n);
  for (std::uint32_t i = 0; i < n; ++i) {
    for (int k = 0; k < 3; ++k) face_boxes_[i].extend(mesh_->corner(i, k));
    centroids[i] = face_boxes_[i].center();
  }
  order_.resize(n);
  for (std::uint32_t i = 0; i < n; ++i) order_[i] = i;
  nodes_.reserve(2 * n / kLeafSize + 2);
  nodes_.emplace_back();
  build(0, 0, n, centroids);
}

void Bvh::build(std::uint32_t node, std::uint32_t begin, std::uint32_t end, const std::vector<Vec3>& centroids) {
  Aabb box;
  Aabb centroid_box;
  for (std::uint32_t i = begin; i < end; ++i) {
    box.extend(face_boxes_[order_[i]]);
    centroid_box.extend(centroids[order_[i]]);
  }
  nodes_[node].box = box;
  const Vec3 spread = centroid_box.extent();
  if (end - begin <= kLeafSize || spread.maxCoeff() <= 0.0) {
    nodes_[node].first = begin;
    nodes_[node].count = end - begin;
    return;
  }
  int axis = 0;
  spread.maxCoeff(&axis);
  const std::uint32_t mid = begin + (end - begin) / 2;
  std::nth_element(order_.begin() + begin, order_.begin() + mid, order_.begin() + end,
                   [&](std::uint32_t a, std::uint32_t b) {
                     const double ca = centroids[a][axis];
                     const double cb = centroids[b][axis];
                     return ca < cb || (ca == cb && a < b);
                   });
  const auto left = static_cast<std::uint32_t>(nodes_.size());
  nodes_.emplace_back();
  nodes_.emplace_back();
  nodes_[node].first = left;
  nodes_[node].count = 0;
  build(left, begin, mid, centroids);
  build(left + 1, mid, end, centroids);
}

std::optional<BvhHit> Bvh::raycast(const Ray& ray, double t_max) const {
  std::optional<BvhHit> best;
  double best_t = t_max;
  std::uint32_t stack[64];
  int top = 0;
  if (!std::isfinite(nodes_[0].box.ray_entry(ray, best_t))) return best;
  stack[top++] = 0;
  while (top > 0) {
    const Node& node = nodes_[stack[--top]];
    if (node.box.ray_entry(ray, best_t) > best_t) continue;
    if (node.count > 0) {
      for (std::uint32_t i = 0; i < node.count; ++i) {
        const std::uint32_t face = order_[node.first + i];
        const auto hit = intersect_ray_triangle(ray, mesh_->corner(face, 0), mesh_->corner(face, 1),
                                                mesh_->corner(face, 2), best_t);
        if (!hit) continue;
        if (!best || hit->t < best_t || (hit->t == best_t && face < best->face)) {
          best = BvhHit{hit->t, face, hit->b1, hit->b2};
          best_t = hit->t;
        }
      }
      continue;
    }
    const Node& a = nodes_[node.first];
    const Node& b = nodes_[node.first + 1];
    const double ta = a.box.ray_entry(ray, best_t);
    const double tb = b.box.ray_entry(ray, best_t);
    // Push the farther child first so the nearer one is explored first.
    if (ta <= tb) {
      if (std::isfinite(tb)) stack[top++] = node.first + 1;
      if (std::isfinite(ta)) stack[top++] = node.first;
    } else {
      if (std::isfinite(ta)) stack[top++] = node.first;
      if (std::isfinite(tb)) stack[top++] = node.first + 1;
    }
  }
  return best;
}

int Bvh::count_crossings(const Ray& ray) const {
  const double inf = std::numeric_limits<double>::infinity();
  int crossings = 0;
  std::uint32_t stack[64];
  int top = 0;
  stack[top++] = 0;
  while (top > 0) {
    const Node& node = nodes_[stack[--top]];
    if (!std::isfinite(node.box.ray_entry(ray, inf))) continue;
    if (node.count > 0) {
      for (std::uint32_t i = 0; i < node.count; ++i) {
        const std::uint32_t face = order_[node.first + i];
        if (intersect_ray_triangle(ray, mesh_->corner(face, 0), mesh_->corner(face, 1), mesh_->corner(face, 2), inf, 0.0))
          ++crossings;
      }
    } else {
      stack[top++] = node.first;
      stack[top++] = node.first + 1;
    }
  }
  return crossings;
}

std::optional<ClosestPoint> Bvh::closest_point(const Vec3& p, double max_distance_sq) const {
  std::optional<ClosestPoint> best;
  double best_d2 = max_distance_sq;
  std::uint32_t stack[64];
  int top = 0;
  stack[top++] = 0;
  while (top > 0) {
    const Node& node = nodes_[stack[--top]];
    if (node.box.distance_sq(p) > best_d2) continue;
    if (node.count > 0) {
      for (std::uint32_t i = 0; i < node.count; ++i) {
        const std::uint32_t face = order_[node.first + i];
        const Vec3 q = closest_point_on_triangle(p, mesh_->corner(face, 0), mesh_->corner(face, 1), mesh_->corner(face, 2));
        const double d2 = (q - p).squaredNorm();
        if (d2 < best_d2 || (best && d2 == best_d2 && face < best->face) || (!best && d2 <= best_d2)) {
          best = ClosestPoint{q, face, d2};
          best_d2 = d2;
        }
      }
      continue;
    }
    const double da = nodes_[node.first].box.distance_sq(p);
    const double db = nodes_[node.first + 1].box.distance_sq(p);
    if (da <= db) {
      stack[top++] = node.first + 1;
      stack[top++] = node.first;
    } else {
      stack[top++] = node.first;
      stack[top++] = node.first + 1;
    }
  }
  return best;
}

}  // namespace beltpick
