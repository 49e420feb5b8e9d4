#pragma once

#include <array>
#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>
#include <vector>

#include "beltpick/camera_belt.hpp"
#include "beltpick/geometry.hpp"

namespace beltpick {

using TriangleIndices = std::array<std::uint32_t, 3>;

/// Indexed triangle mesh in millimetres. Counter-clockwise winding seen from
/// outside; `watertight` is only ever set after a boundary-edge check.
struct TriMesh {
  std::vector<Vec3> vertices;
  std::vector<TriangleIndices> triangles;
  std::vector<Vec3> normals;  // optional, per vertex
  bool watertight = false;

  std::size_t triangle_count() const { return triangles.size(); }
  const Vec3& corner(std::size_t tri, int k) const { return vertices[triangles[tri][k]]; }

  Vec3 face_normal(std::size_t tri) const;  // unit
  double face_area(std::size_t tri) const;
  double area() const;
  Aabb bounds() const;
  std::size_t boundary_edge_count() const;

  // Checks index range and degenerate faces; sets `watertight` from the
  // boundary-edge count. Throws kInvalidArgument.
  void validate_and_classify();

  TriMesh transformed(const RigidPose& pose) const;
  TriMesh translated(const Vec3& offset) const;
};

TriMesh make_box(const Vec3& extents);
TriMesh make_icosphere(double radius, int subdivisions);
TriMesh make_cylinder(double radius, double height, int segments);

struct MassProperties {
  double volume = 0.0;  // mm^3, 0 when the mesh is open
  Vec3 centroid = Vec3::Zero();
  bool solid = false;   // true: signed-tetrahedron centroid; false: area centroid
};

MassProperties mass_properties(const TriMesh& mesh);

// Flips winding when a closed mesh encloses negative signed volume.
void orient_outward(TriMesh& mesh);

// ASCII OBJ subset: `v x y z` and triangular `f` records (v, v/t, v//n and
// v/t/n index forms, negative indices allowed). Anything else that is not a
// comment or an ignorable record (vt, vn, o, g, s, usemtl, mtllib) is rejected.
TriMesh parse_obj(const std::string& text);
TriMesh load_obj(const std::filesystem::path& path);
std::string format_obj(const TriMesh& mesh);
void save_obj(const TriMesh& mesh, const std::filesystem::path& path);

// ---- Triangle-level geometry shared by ray casting, collision and placement.

struct TriangleRayHit {
  double t;
  double b1;  // barycentric weight of corner 1
  double b2;  // barycentric weight of corner 2
};

// `slack` widens the barycentric bounds so a ray through a shared vertex or
// edge cannot slip between neighbouring faces; parity counts pass 0.
std::optional<TriangleRayHit> intersect_ray_triangle(const Ray& ray, const Vec3& a, const Vec3& b, const Vec3& c,
                                                     double t_max, double slack = 1e-12);

Vec3 closest_point_on_triangle(const Vec3& p, const Vec3& a, const Vec3& b, const Vec3& c);

bool triangles_intersect(const std::array<Vec3, 3>& t0, const std::array<Vec3, 3>& t1);

/// Solid finite cylinder: points whose projection on `axis` (unit) from `base`
/// lies in [0, height] and whose distance to the axis is <= radius.
struct Cylinder {
  Vec3 base;
  Vec3 axis;
  double radius;
  double height;

  Aabb bounds() const;
  // Minimum world z over the solid.
  double min_z() const;
};

bool triangle_intersects_cylinder(const Vec3& a, const Vec3& b, const Vec3& c, const Cylinder& cyl);

}  // namespace beltpick
