#pragma once

#include <cstdint>
#include <limits>
#include <memory>
#include <optional>
#include <vector>

#include "beltpick/geometry.hpp"
#include "beltpick/mesh.hpp"

namespace beltpick {

struct BvhHit {
  double t;
  std::uint32_t face;
  double b1;
  double b2;
};

struct ClosestPoint {
  Vec3 point;
  std::uint32_t face;
  double distance_sq;
};

/// Bounding volume hierarchy over one immutable mesh (median split on the
/// widest centroid axis, up to 4 triangles per leaf). Queries are const and
/// safe to run concurrently.
class Bvh {
 public:
  explicit Bvh(std::shared_ptr<const TriMesh> mesh);

  const TriMesh& mesh() const { return *mesh_; }
  const Aabb& bounds() const { return nodes_.front().box; }

  // Nearest hit with t in (0, t_max]; equal-t ties resolve to the lower face id.
  std::optional<BvhHit> raycast(const Ray& ray, double t_max = std::numeric_limits<double>::infinity()) const;

  // Number of faces crossed by the ray (parity test for inside/outside).
  int count_crossings(const Ray& ray) const;

  std::optional<ClosestPoint> closest_point(const Vec3& p,
                                            double max_distance_sq = std::numeric_limits<double>::infinity()) const;

  // Calls visit(face) for every face whose box overlaps `box`.
  template <class Visit>
  void visit_overlapping(const Aabb& box, Visit&& visit) const {
    if (nodes_.empty()) return;
    std::uint32_t stack[64];
    int top = 0;
    stack[top++] = 0;
    while (top > 0) {
      const Node& node = nodes_[stack[--top]];
      if (!node.box.overlaps(box)) continue;
      if (node.count > 0) {
        for (std::uint32_t i = 0; i < node.count; ++i) {
          const std::uint32_t face = order_[node.first + i];
          if (face_boxes_[face].overlaps(box)) visit(face);
        }
      } else {
        stack[top++] = node.first;
        stack[top++] = node.first + 1;
      }
    }
  }

 private:
  struct Node {
    Aabb box;
    std::uint32_t first = 0;  // leaf: offset into order_; inner: left child (right = first + 1)
    std::uint32_t count = 0;  // > 0 for leaves
  };

  void build(std::uint32_t node, std::uint32_t begin, std::uint32_t end, const std::vector<Vec3>& centroids);

  std::shared_ptr<const TriMesh> mesh_;
  std::vector<Node> nodes_;
  std::vector<std::uint32_t> order_;
  std::vector<Aabb> face_boxes_;
};

}  // namespace beltpick
