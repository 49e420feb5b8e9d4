#include <algorithm>
#include <array>
#include <vector>

#include "beltpick/error.hpp"
#include "beltpick/recon.hpp"

namespace beltpick {

namespace {

constexpr int kCorner[8][3] = {{0, 0, 0}, {1, 0, 0}, {1, 1, 0}, {0, 1, 0},
                               {0, 0, 1}, {1, 0, 1}, {1, 1, 1}, {0, 1, 1}};
constexpr int kEdge[12][2] = {{0, 1}, {1, 2}, {2, 3}, {3, 0}, {4, 5}, {5, 6},
                              {6, 7}, {7, 4}, {0, 4}, {1, 5}, {2, 6}, {3, 7}};
// Face corners in cyclic order; kFaceEdges[f][i] joins corner i and corner i+1.
constexpr int kFaceCorners[6][4] = {{0, 1, 2, 3}, {4, 5, 6, 7}, {0, 1, 5, 4},
                                    {3, 2, 6, 7}, {0, 3, 7, 4}, {1, 2, 6, 5}};
constexpr int kFaceEdges[6][4] = {{0, 1, 2, 3}, {4, 5, 6, 7}, {0, 9, 4, 8},
                                  {2, 10, 6, 11}, {3, 11, 7, 8}, {1, 10, 5, 9}};

using TriangleList = std::vector<std::array<int, 3>>;  // edge ids

Vec3 corner_pos(int c) { return Vec3(kCorner[c][0], kCorner[c][1], kCorner[c][2]); }
Vec3 edge_mid(int e) { return 0.5 * (corner_pos(kEdge[e][0]) + corner_pos(kEdge[e][1])); }

// Builds the triangles for one inside/outside configuration. Surface segments
// are traced on each face (on a face with two diagonal inside corners the
// segments cut off each inside corner), chained into closed loops, oriented so
// that the normal points away from the inside corners and fan-triangulated.
TriangleList build_case(int config) {
  auto inside = [config](int c) { return ((config >> c) & 1) != 0; };
  std::array<std::vector<int>, 12> adj;
  for (int f = 0; f < 6; ++f) {
    std::vector<int> crossing;
    for (int i = 0; i < 4; ++i)
      if (inside(kFaceCorners[f][i]) != inside(kFaceCorners[f][(i + 1) % 4])) crossing.push_back(kFaceEdges[f][i]);
    if (crossing.size() == 2) {
      adj[crossing[0]].push_back(crossing[1]);
      adj[crossing[1]].push_back(crossing[0]);
    } else if (crossing.size() == 4) {
      for (int i = 0; i < 4; ++i) {
        if (!inside(kFaceCorners[f][i])) continue;
        const int before = kFaceEdges[f][(i + 3) % 4];
        const int after = kFaceEdges[f][i];
        adj[before].push_back(after);
        adj[after].push_back(before);
      }
    }
  }

  TriangleList tris;
  std::array<bool, 12> used{};
  for (int start = 0; start < 12; ++start) {
    if (used[start] || adj[start].empty()) continue;
    std::vector<int> loop;
    int prev = -1;
    int cur = start;
    do {
      loop.push_back(cur);
      used[cur] = true;
      const int next = adj[cur][0] != prev ? adj[cur][0] : adj[cur][1];
      prev = cur;
      cur = next;
    } while (cur != start);

    Vec3 normal = Vec3::Zero();
    Vec3 centroid = Vec3::Zero();
    Vec3 inner = Vec3::Zero();
    for (std::size_t i = 0; i < loop.size(); ++i) {
      const Vec3 a = edge_mid(loop[i]);
      const Vec3 b = edge_mid(loop[(i + 1) % loop.size()]);
      normal += a.cross(b);
      centroid += a;
      const int c0 = kEdge[loop[i]][0];
      inner += corner_pos(inside(c0) ? c0 : kEdge[loop[i]][1]);
    }
    centroid /= static_cast<double>(loop.size());
    inner /= static_cast<double>(loop.size());
    if (normal.dot(inner - centroid) > 0.0) std::reverse(loop.begin(), loop.end());
    for (std::size_t i = 1; i + 1 < loop.size(); ++i) tris.push_back({loop[0], loop[i], loop[i + 1]});
  }
  return tris;
}

const std::array<TriangleList, 256>& case_table() {
  static const std::array<TriangleList, 256> table = [] {
    std::array<TriangleList, 256> t;
    for (int c = 0; c < 256; ++c) t[c] = build_case(c);
    return t;
  }();
  return table;
}

}  // namespace

TriMesh marching_cubes(const TsdfVolume& volume, double iso) {
  const GridSpec& g = volume.spec;
  if (volume.values.size() != g.count() || volume.weights.size() != g.count())
    throw Error(Errc::kDimensionMismatch, "volume payload does not match grid dims");
  const auto& table = case_table();
  const int nx = g.dims[0];
  const int ny = g.dims[1];
  const int nz = g.dims[2];

  TriMesh mesh;
  // Vertex id per grid edge, keyed by (lower voxel index, axis).
  std::vector<std::int64_t> edge_vertex(g.count() * 3, -1);

  auto vertex_for = [&](int i, int j, int k, int e) -> std::uint32_t {
    int a = kEdge[e][0];
    int b = kEdge[e][1];
    const int axis = kCorner[a][0] != kCorner[b][0] ? 0 : (kCorner[a][1] != kCorner[b][1] ? 1 : 2);
    if (kCorner[a][axis] > kCorner[b][axis]) std::swap(a, b);
    const int ai = i + kCorner[a][0];
    const int aj = j + kCorner[a][1];
    const int ak = k + kCorner[a][2];
    const std::size_t lo = g.index(ai, aj, ak);
    std::int64_t& slot = edge_vertex[lo * 3 + axis];
    if (slot < 0) {
      const std::size_t hi = g.index(i + kCorner[b][0], j + kCorner[b][1], k + kCorner[b][2]);
      const double v0 = volume.values[lo];
      const double v1 = volume.values[hi];
      const double t = v1 != v0 ? std::clamp((iso - v0) / (v1 - v0), 0.0, 1.0) : 0.5;
      const Vec3 p0 = g.center(ai, aj, ak);
      Vec3 p = p0;
      p[axis] += t * g.voxel_size;
      slot = static_cast<std::int64_t>(mesh.vertices.size());
      mesh.vertices.push_back(p);
    }
    return static_cast<std::uint32_t>(slot);
  };

  for (int k = 0; k + 1 < nz; ++k)
    for (int j = 0; j + 1 < ny; ++j)
      for (int i = 0; i + 1 < nx; ++i) {
        int config = 0;
        bool observed = true;
        for (int c = 0; c < 8 && observed; ++c) {
          const std::size_t idx = g.index(i + kCorner[c][0], j + kCorner[c][1], k + kCorner[c][2]);
          if (!(volume.weights[idx] > 0.0)) observed = false;
          if (volume.values[idx] < iso) config |= 1 << c;
        }
        if (!observed || config == 0 || config == 255) continue;
        for (const auto& tri : table[config])
          mesh.triangles.push_back({vertex_for(i, j, k, tri[0]), vertex_for(i, j, k, tri[1]), vertex_for(i, j, k, tri[2])});
      }

  if (mesh.triangles.empty()) throw Error(Errc::kEmptySurface, "no zero crossing in observed cells");
  mesh.watertight = mesh.boundary_edge_count() == 0;
  return mesh;
}

}  // namespace beltpick
