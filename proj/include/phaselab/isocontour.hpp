#pragma once

#include <unordered_map>

#include "phaselab/mesh.hpp"

namespace phaselab {

/// A crossing point on the undirected edge (a, b) with a < b, located at
/// (1-s) a + s b. The parameter is computed once per edge from the canonical
/// orientation, so the two adjacent faces agree on the point bitwise.
struct IsoPoint {
  int a = 0;
  int b = 0;
  double s = 0.0;
};

struct IsoLoop {
  std::vector<IsoPoint> points;   // walk order; segment k joins points k, k+1 (wrapping)
  std::vector<Vec3> positions;    // embedded meshes only
  double length = 0.0;
};

struct IsoContour {
  std::vector<IsoLoop> loops;
  double total_length = 0.0;
  bool empty = true;
};

/// Level set {u = level} of a vertex field, extracted segment by segment in
/// each face's isometric chart so intrinsic meshes work unchanged. Vertices
/// with u exactly at the level count as above it, which keeps every face at
/// zero or two crossed edges; on a closed mesh the segments then tile into
/// disjoint closed loops. Walk order is deterministic: loops start at the
/// lowest crossing index and leave through the lower-indexed face.
inline IsoContour extract_iso_contour(const TriangleMesh& mesh,
                                      const VertexField& u, double level) {
  require(u.size() == static_cast<Eigen::Index>(mesh.num_vertices),
          "field size does not match the mesh");
  const int num_faces = static_cast<int>(mesh.faces.rows());

  auto above = [&](int v) { return u[v] >= level; };
  auto edge_key = [](int a, int b) {
    return (static_cast<std::uint64_t>(a) << 32) | static_cast<std::uint32_t>(b);
  };

  std::unordered_map<std::uint64_t, int> crossing_of_edge;
  std::vector<IsoPoint> crossings;
  struct Segment {
    int c0, c1, face;
    double length;
  };
  std::vector<Segment> segments;

  for (int f = 0; f < num_faces; ++f) {
    int local[2], found = 0;
    for (int c = 0; c < 3 && found <= 2; ++c) {
      int va = mesh.faces(f, (c + 1) % 3), vb = mesh.faces(f, (c + 2) % 3);
      if (above(va) != above(vb)) {
        if (found < 2) local[found] = c;
        ++found;
      }
    }
    if (found == 0) continue;
    if (found != 2) {
      throw AssemblyError("level set crossed " + std::to_string(found) +
                          " edges of face " + std::to_string(f));
    }

    int ids[2];
    Vec2 pts[2];
    for (int k = 0; k < 2; ++k) {
      int c = local[k];
      int lv0 = (c + 1) % 3, lv1 = (c + 2) % 3;
      int va = mesh.faces(f, lv0), vb = mesh.faces(f, lv1);
      if (va > vb) {
        std::swap(va, vb);
        std::swap(lv0, lv1);
      }
      auto key = edge_key(va, vb);
      auto it = crossing_of_edge.find(key);
      if (it == crossing_of_edge.end()) {
        double s = (level - u[va]) / (u[vb] - u[va]);
        s = std::clamp(s, 0.0, 1.0);
        it = crossing_of_edge.emplace(key, static_cast<int>(crossings.size()))
                 .first;
        crossings.push_back({va, vb, s});
      }
      ids[k] = it->second;
      double s = crossings[ids[k]].s;
      Vec2 p0(mesh.corner_layout(f, 2 * lv0), mesh.corner_layout(f, 2 * lv0 + 1));
      Vec2 p1(mesh.corner_layout(f, 2 * lv1), mesh.corner_layout(f, 2 * lv1 + 1));
      pts[k] = (1.0 - s) * p0 + s * p1;
    }
    segments.push_back({ids[0], ids[1], f, (pts[1] - pts[0]).norm()});
  }

  IsoContour contour;
  if (segments.empty()) return contour;
  contour.empty = false;

  // each crossing joins exactly two segments on a closed mesh
  std::vector<std::array<int, 2>> incident(crossings.size(), {-1, -1});
  for (int sid = 0; sid < static_cast<int>(segments.size()); ++sid) {
    for (int end : {segments[sid].c0, segments[sid].c1}) {
      auto& slots = incident[end];
      if (slots[0] < 0) {
        slots[0] = sid;
      } else if (slots[1] < 0) {
        slots[1] = sid;
      } else {
        throw AssemblyError("level set is not two-regular at a crossing");
      }
    }
  }
  for (auto& slots : incident) {
    if (slots[1] < 0) {
      throw AssemblyError("level set has a dangling crossing; mesh not closed");
    }
    if (segments[slots[0]].face > segments[slots[1]].face) {
      std::swap(slots[0], slots[1]);
    }
  }

  std::vector<char> used(segments.size(), 0);
  for (int start = 0; start < static_cast<int>(crossings.size()); ++start) {
    int first_seg = incident[start][0];
    if (used[first_seg]) continue;

    IsoLoop loop;
    int at = start, seg = first_seg;
    do {
      used[seg] = 1;
      loop.points.push_back(crossings[at]);
      loop.length += segments[seg].length;
      at = (segments[seg].c0 == at) ? segments[seg].c1 : segments[seg].c0;
      seg = (incident[at][0] == seg) ? incident[at][1] : incident[at][0];
    } while (at != start);

    if (mesh.has_positions) {
      loop.positions.reserve(loop.points.size());
      for (const auto& p : loop.points) {
        loop.positions.push_back((1.0 - p.s) * mesh.positions.row(p.a).transpose() +
                                 p.s * mesh.positions.row(p.b).transpose());
      }
    }
    contour.total_length += loop.length;
    contour.loops.push_back(std::move(loop));
  }
  return contour;
}

/// Total length of the level set {u = level}.
inline double level_set_length(const TriangleMesh& mesh, const VertexField& u,
                               double level) {
  return extract_iso_contour(mesh, u, level).total_length;
}

}  // namespace phaselab
