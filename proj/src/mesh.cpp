#include "beltpick/mesh.hpp"

#include <charconv>
#include <cmath>
#include <fstream>
#include <iomanip>
#include <map>
#include <sstream>
#include <unordered_map>

#include "beltpick/error.hpp"

namespace beltpick {

Vec3 TriMesh::face_normal(std::size_t tri) const {
  const Vec3 n = (corner(tri, 1) - corner(tri, 0)).cross(corner(tri, 2) - corner(tri, 0));
  const double len = n.norm();
  return len > 0.0 ? Vec3(n / len) : Vec3::Zero();
}

double TriMesh::face_area(std::size_t tri) const {
  return 0.5 * (corner(tri, 1) - corner(tri, 0)).cross(corner(tri, 2) - corner(tri, 0)).norm();
}

double TriMesh::area() const {
  double total = 0.0;
  for (std::size_t i = 0; i < triangles.size(); ++i) total += face_area(i);
  return total;
}

Aabb TriMesh::bounds() const {
  Aabb box;
  for (const Vec3& v : vertices) box.extend(v);
  return box;
}

std::size_t TriMesh::boundary_edge_count() const {
  std::unordered_map<std::uint64_t, int> uses;
  uses.reserve(triangles.size() * 3);
  for (const auto& t : triangles) {
    for (int k = 0; k < 3; ++k) {
      std::uint64_t a = t[k];
      std::uint64_t b = t[(k + 1) % 3];
      if (a > b) std::swap(a, b);
      ++uses[(a << 32) | b];
    }
  }
  std::size_t boundary = 0;
  for (const auto& [edge, count] : uses)
    if (count == 1) ++boundary;
  return boundary;
}

void TriMesh::validate_and_classify() {
  if (!normals.empty() && normals.size() != vertices.size())
    throw Error(Errc::kInvalidArgument, "per-vertex normal count does not match vertex count");
  for (std::size_t i = 0; i < triangles.size(); ++i) {
    for (auto idx : triangles[i])
      if (idx >= vertices.size()) throw Error(Errc::kInvalidArgument, "triangle index out of range");
    if (!(face_area(i) > 1e-6)) throw Error(Errc::kInvalidArgument, "degenerate triangle " + std::to_string(i));
  }
  watertight = !triangles.empty() && boundary_edge_count() == 0;
}

TriMesh TriMesh::transformed(const RigidPose& pose) const {
  TriMesh out = *this;
  for (Vec3& v : out.vertices) v = pose.to_world(v);
  for (Vec3& n : out.normals) n = pose.rotation * n;
  return out;
}

TriMesh TriMesh::translated(const Vec3& offset) const {
  TriMesh out = *this;
  for (Vec3& v : out.vertices) v += offset;
  return out;
}

namespace {

// Primitives are convex and centered on the origin, so every face normal must
// point away from it.
void orient_convex_faces(TriMesh& mesh) {
  for (std::size_t i = 0; i < mesh.triangles.size(); ++i) {
    const Vec3 centroid = (mesh.corner(i, 0) + mesh.corner(i, 1) + mesh.corner(i, 2)) / 3.0;
    if (mesh.face_normal(i).dot(centroid) < 0.0) std::swap(mesh.triangles[i][1], mesh.triangles[i][2]);
  }
  mesh.validate_and_classify();
}

}  // namespace

TriMesh make_box(const Vec3& extents) {
  if ((extents.array() <= 0.0).any()) throw Error(Errc::kInvalidArgument, "box extents must be positive");
  const Vec3 h = extents / 2.0;
  TriMesh mesh;
  for (int i = 0; i < 8; ++i)
    mesh.vertices.emplace_back((i & 1) ? h.x() : -h.x(), (i & 2) ? h.y() : -h.y(), (i & 4) ? h.z() : -h.z());
  mesh.triangles = {{0, 2, 1}, {1, 2, 3}, {4, 5, 6}, {5, 7, 6}, {0, 1, 4}, {1, 5, 4},
                    {2, 6, 3}, {3, 6, 7}, {0, 4, 2}, {2, 4, 6}, {1, 3, 5}, {3, 7, 5}};
  orient_convex_faces(mesh);
  return mesh;
}

TriMesh make_icosphere(double radius, int subdivisions) {
  if (!(radius > 0.0) || subdivisions < 0) throw Error(Errc::kInvalidArgument, "bad icosphere parameters");
  const double t = (1.0 + std::sqrt(5.0)) / 2.0;
  std::vector<Vec3> verts = {{-1, t, 0}, {1, t, 0}, {-1, -t, 0}, {1, -t, 0}, {0, -1, t}, {0, 1, t},
                             {0, -1, -t}, {0, 1, -t}, {t, 0, -1}, {t, 0, 1}, {-t, 0, -1}, {-t, 0, 1}};
  for (Vec3& v : verts) v.normalize();
  std::vector<TriangleIndices> faces = {{0, 11, 5}, {0, 5, 1},  {0, 1, 7},   {0, 7, 10}, {0, 10, 11},
                                        {1, 5, 9},  {5, 11, 4}, {11, 10, 2}, {10, 7, 6}, {7, 1, 8},
                                        {3, 9, 4},  {3, 4, 2},  {3, 2, 6},   {3, 6, 8},  {3, 8, 9},
                                        {4, 9, 5},  {2, 4, 11}, {6, 2, 10},  {8, 6, 7},  {9, 8, 1}};
  for (int level = 0; level < subdivisions; ++level) {
    std::map<std::pair<std::uint32_t, std::uint32_t>, std::uint32_t> midpoint;
    auto mid = [&](std::uint32_t a, std::uint32_t b) {
      const auto key = std::minmax(a, b);
      if (auto it = midpoint.find(key); it != midpoint.end()) return it->second;
      verts.push_back((verts[a] + verts[b]).normalized());
      const auto idx = static_cast<std::uint32_t>(verts.size() - 1);
      midpoint.emplace(key, idx);
      return idx;
    };
    std::vector<TriangleIndices> next;
    next.reserve(faces.size() * 4);
    for (const auto& f : faces) {
      const auto ab = mid(f[0], f[1]);
      const auto bc = mid(f[1], f[2]);
      const auto ca = mid(f[2], f[0]);
      next.push_back({f[0], ab, ca});
      next.push_back({f[1], bc, ab});
      next.push_back({f[2], ca, bc});
      next.push_back({ab, bc, ca});
    }
    faces = std::move(next);
  }
  TriMesh mesh;
  mesh.vertices.reserve(verts.size());
  for (const Vec3& v : verts) mesh.vertices.push_back(radius * v);
  mesh.triangles = std::move(faces);
  orient_convex_faces(mesh);
  return mesh;
}

TriMesh make_cylinder(double radius, double height, int segments) {
  if (!(radius > 0.0 && height > 0.0) || segments < 3) throw Error(Errc::kInvalidArgument, "bad cylinder parameters");
  TriMesh mesh;
  const auto n = static_cast<std::uint32_t>(segments);
  for (std::uint32_t i = 0; i < n; ++i) {
    const double a = 2.0 * M_PI * i / n;
    mesh.vertices.emplace_back(radius * std::cos(a), radius * std::sin(a), -height / 2.0);
    mesh.vertices.emplace_back(radius * std::cos(a), radius * std::sin(a), height / 2.0);
  }
  const std::uint32_t bottom = 2 * n;
  const std::uint32_t top = 2 * n + 1;
  mesh.vertices.emplace_back(0.0, 0.0, -height / 2.0);
  mesh.vertices.emplace_back(0.0, 0.0, height / 2.0);
  for (std::uint32_t i = 0; i < n; ++i) {
    const std::uint32_t j = (i + 1) % n;
    mesh.triangles.push_back({2 * i, 2 * j, 2 * i + 1});
    mesh.triangles.push_back({2 * j, 2 * j + 1, 2 * i + 1});
    mesh.triangles.push_back({bottom, 2 * j, 2 * i});
    mesh.triangles.push_back({top, 2 * i + 1, 2 * j + 1});
  }
  orient_convex_faces(mesh);
  return mesh;
}

MassProperties mass_properties(const TriMesh& mesh) {
  MassProperties props;
  if (mesh.watertight) {
    double volume = 0.0;
    Vec3 moment = Vec3::Zero();
    for (std::size_t i = 0; i < mesh.triangles.size(); ++i) {
      const Vec3& a = mesh.corner(i, 0);
      const Vec3& b = mesh.corner(i, 1);
      const Vec3& c = mesh.corner(i, 2);
      const double v = a.dot(b.cross(c)) / 6.0;
      volume += v;
      moment += v * (a + b + c) / 4.0;
    }
    if (std::abs(volume) > 1e-12) {
      props.volume = std::abs(volume);
      props.centroid = moment / volume;
      props.solid = true;
      return props;
    }
  }
  double area = 0.0;
  Vec3 moment = Vec3::Zero();
  for (std::size_t i = 0; i < mesh.triangles.size(); ++i) {
    const double a = mesh.face_area(i);
    area += a;
    moment += a * (mesh.corner(i, 0) + mesh.corner(i, 1) + mesh.corner(i, 2)) / 3.0;
  }
  if (area > 0.0) props.centroid = moment / area;
  return props;
}

void orient_outward(TriMesh& mesh) {
  if (!mesh.watertight) return;
  double volume = 0.0;
  for (std::size_t i = 0; i < mesh.triangles.size(); ++i)
    volume += mesh.corner(i, 0).dot(mesh.corner(i, 1).cross(mesh.corner(i, 2)));
  if (volume < 0.0)
    for (auto& t : mesh.triangles) std::swap(t[1], t[2]);
}

// ---------------------------------------------------------------- OBJ

namespace {

double parse_double(std::string_view token, std::size_t line_no) {
  double value = 0.0;
  const auto* end = token.data() + token.size();
  auto [ptr, ec] = std::from_chars(token.data(), end, value);
  if (ec != std::errc() || ptr != end || !std::isfinite(value))
    throw Error(Errc::kInvalidArgument, "OBJ line " + std::to_string(line_no) + ": bad number '" + std::string(token) + "'");
  return value;
}

std::uint32_t parse_index(std::string_view token, std::size_t vertex_count, std::size_t line_no) {
  const auto slash = token.find('/');
  const std::string_view head = token.substr(0, slash);
  long long idx = 0;
  auto [ptr, ec] = std::from_chars(head.data(), head.data() + head.size(), idx);
  if (ec != std::errc() || ptr != head.data() + head.size() || idx == 0)
    throw Error(Errc::kInvalidArgument, "OBJ line " + std::to_string(line_no) + ": bad face index");
  const long long resolved = idx > 0 ? idx - 1 : static_cast<long long>(vertex_count) + idx;
  if (resolved < 0 || resolved >= static_cast<long long>(vertex_count))
    throw Error(Errc::kInvalidArgument, "OBJ line " + std::to_string(line_no) + ": face index out of range");
  return static_cast<std::uint32_t>(resolved);
}

}  // namespace

TriMesh parse_obj(const std::string& text) {
  TriMesh mesh;
  std::istringstream in(text);
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    std::istringstream fields(line);
    std::string tag;
    if (!(fields >> tag) || tag[0] == '#') continue;
    std::vector<std::string> args;
    for (std::string tok; fields >> tok;) args.push_back(tok);
    if (tag == "v") {
      if (args.size() != 3 && args.size() != 4)
        throw Error(Errc::kInvalidArgument, "OBJ line " + std::to_string(line_no) + ": vertex needs 3 coordinates");
      mesh.vertices.emplace_back(parse_double(args[0], line_no), parse_double(args[1], line_no),
                                 parse_double(args[2], line_no));
    } else if (tag == "f") {
      if (args.size() != 3)
        throw Error(Errc::kInvalidArgument, "OBJ line " + std::to_string(line_no) + ": only triangular faces are accepted");
      mesh.triangles.push_back({parse_index(args[0], mesh.vertices.size(), line_no),
                                parse_index(args[1], mesh.vertices.size(), line_no),
                                parse_index(args[2], mesh.vertices.size(), line_no)});
    } else if (tag == "vt" || tag == "vn" || tag == "o" || tag == "g" || tag == "s" || tag == "usemtl" ||
               tag == "mtllib") {
      continue;
    } else {
      throw Error(Errc::kInvalidArgument, "OBJ line " + std::to_string(line_no) + ": unsupported record '" + tag + "'");
    }
  }
  if (mesh.triangles.empty()) throw Error(Errc::kInvalidArgument, "OBJ has no faces");
  mesh.validate_and_classify();
  return mesh;
}

TriMesh load_obj(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error(Errc::kIo, "cannot open " + path.string());
  std::ostringstream buf;
  buf << in.rdbuf();
  return parse_obj(buf.str());
}

std::string format_obj(const TriMesh& mesh) {
  std::ostringstream out;
  out << std::setprecision(17);
  for (const Vec3& v : mesh.vertices) out << "v " << v.x() << ' ' << v.y() << ' ' << v.z() << '\n';
  for (const auto& t : mesh.triangles) out << "f " << t[0] + 1 << ' ' << t[1] + 1 << ' ' << t[2] + 1 << '\n';
  return out.str();
}

void save_obj(const TriMesh& mesh, const std::filesystem::path& path) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw Error(Errc::kIo, "cannot write " + path.string());
  out << format_obj(mesh);
}

// ---------------------------------------------------------------- triangles

std::optional<TriangleRayHit> intersect_ray_triangle(const Ray& ray, const Vec3& a, const Vec3& b, const Vec3& c,
                                                     double t_max, double slack) {
  const Vec3 e1 = b - a;
  const Vec3 e2 = c - a;
  const Vec3 pvec = ray.dir.cross(e2);
  const double det = e1.dot(pvec);
  if (std::abs(det) < 1e-14 * e1.norm() * e2.norm()) return std::nullopt;
  const double inv = 1.0 / det;
  const Vec3 tvec = ray.origin - a;
  const double u = tvec.dot(pvec) * inv;
  if (u < -slack || u > 1.0 + slack) return std::nullopt;
  const Vec3 qvec = tvec.cross(e1);
  const double v = ray.dir.dot(qvec) * inv;
  if (v < -slack || u + v > 1.0 + slack) return std::nullopt;
  const double t = e2.dot(qvec) * inv;
  if (!(t > 1e-9) || t > t_max) return std::nullopt;
  return TriangleRayHit{t, u, v};
}

Vec3 closest_point_on_triangle(const Vec3& p, const Vec3& a, const Vec3& b, const Vec3& c) {
  const Vec3 ab = b - a;
  const Vec3 ac = c - a;
  const Vec3 ap = p - a;
  const double d1 = ab.dot(ap);
  const double d2 = ac.dot(ap);
  if (d1 <= 0.0 && d2 <= 0.0) return a;
  const Vec3 bp = p - b;
  const double d3 = ab.dot(bp);
  const double d4 = ac.dot(bp);
  if (d3 >= 0.0 && d4 <= d3) return b;
  const double vc = d1 * d4 - d3 * d2;
  if (vc <= 0.0 && d1 >= 0.0 && d3 <= 0.0) return a + (d1 / (d1 - d3)) * ab;
  const Vec3 cp = p - c;
  const double d5 = ab.dot(cp);
  const double d6 = ac.dot(cp);
  if (d6 >= 0.0 && d5 <= d6) return c;
  const double vb = d5 * d2 - d1 * d6;
  if (vb <= 0.0 && d2 >= 0.0 && d6 <= 0.0) return a + (d2 / (d2 - d6)) * ac;
  const double va = d3 * d6 - d5 * d4;
  if (va <= 0.0 && (d4 - d3) >= 0.0 && (d5 - d6) >= 0.0) return b + ((d4 - d3) / ((d4 - d3) + (d5 - d6))) * (c - b);
  const double denom = 1.0 / (va + vb + vc);
  return a + ab * (vb * denom) + ac * (vc * denom);
}

namespace {

bool segment_hits_triangle(const Vec3& p, const Vec3& q, const std::array<Vec3, 3>& tri) {
  const Vec3 d = q - p;
  const double len = d.norm();
  if (len <= 0.0) return false;
  const Ray ray{p, d / len};
  return intersect_ray_triangle(ray, tri[0], tri[1], tri[2], len).has_value();
}

}  // namespace

bool triangles_intersect(const std::array<Vec3, 3>& t0, const std::array<Vec3, 3>& t1) {
  for (int k = 0; k < 3; ++k) {
    if (segment_hits_triangle(t0[k], t0[(k + 1) % 3], t1)) return true;
    if (segment_hits_triangle(t1[k], t1[(k + 1) % 3], t0)) return true;
  }
  return false;
}

Aabb Cylinder::bounds() const {
  Aabb box;
  const Vec3 top = base + height * axis;
  Vec3 disc;
  for (int a = 0; a < 3; ++a) disc[a] = radius * std::sqrt(std::max(0.0, 1.0 - axis[a] * axis[a]));
  box.extend(base - disc);
  box.extend(base + disc);
  box.extend(top - disc);
  box.extend(top + disc);
  return box;
}

double Cylinder::min_z() const {
  const double disc = radius * std::sqrt(std::max(0.0, 1.0 - axis.z() * axis.z()));
  return std::min(base.z(), base.z() + height * axis.z()) - disc;
}

bool triangle_intersects_cylinder(const Vec3& a, const Vec3& b, const Vec3& c, const Cylinder& cyl) {
  // Clip the triangle to the slab 0 <= s <= height along the axis; inside the
  // slab the cylinder is a prism over a disk, so what remains is a 2D
  // convex-polygon-vs-disk test in the plane normal to the axis.
  std::vector<Vec3> poly = {a, b, c};
  auto clip = [&](double sign, double offset) {
    std::vector<Vec3> out;
    const std::size_t n = poly.size();
    for (std::size_t i = 0; i < n; ++i) {
      const Vec3& p = poly[i];
      const Vec3& q = poly[(i + 1) % n];
      const double dp = sign * (p - cyl.base).dot(cyl.axis) - offset;
      const double dq = sign * (q - cyl.base).dot(cyl.axis) - offset;
      if (dp >= 0.0) out.push_back(p);
      if ((dp >= 0.0) != (dq >= 0.0)) out.push_back(p + (dp / (dp - dq)) * (q - p));
    }
    poly = std::move(out);
  };
  clip(1.0, 0.0);
  if (poly.empty()) return false;
  clip(-1.0, -cyl.height);
  if (poly.empty()) return false;

  Vec3 u;
  Vec3 v;
  orthonormal_basis(cyl.axis, u, v);
  std::vector<Vec2> q;
  q.reserve(poly.size());
  for (const Vec3& p : poly) q.emplace_back((p - cyl.base).dot(u), (p - cyl.base).dot(v));

  const double r2 = cyl.radius * cyl.radius;
  bool pos = false;
  bool neg = false;
  for (std::size_t i = 0; i < q.size(); ++i) {
    const Vec2& p0 = q[i];
    const Vec2& p1 = q[(i + 1) % q.size()];
    const Vec2 e = p1 - p0;
    const double len2 = e.squaredNorm();
    const double s = len2 > 0.0 ? std::clamp(-p0.dot(e) / len2, 0.0, 1.0) : 0.0;
    if ((p0 + s * e).squaredNorm() <= r2) return true;
    const double cross = e.x() * (-p0.y()) - e.y() * (-p0.x());
    if (cross > 0.0) pos = true;
    if (cross < 0.0) neg = true;
  }
  // Origin strictly inside the projected polygon.
  return q.size() >= 3 && pos != neg;
}

}  // namespace beltpick
