#pragma once

#include <algorithm>
#include <cmath>
#include <map>
#include <utility>

#include "phaselab/core.hpp"

namespace phaselab {

/// Closed oriented triangle mesh carrying an intrinsic metric.
///
/// The metric lives in `corner_lengths`: row f holds the lengths of the three
/// edges of face f, entry c being the edge opposite corner c. Embedded meshes
/// fill it from vertex positions; intrinsic meshes (flat torus) supply it
/// directly and may leave `positions` empty. All downstream geometry
/// (areas, angles, operators, gradients, contour lengths) reads only the
/// intrinsic data, so embedded and intrinsic meshes share one code path.
struct TriangleMesh {
  Eigen::MatrixXd positions;       // V x 3, empty when intrinsic-only
  Eigen::MatrixXi faces;           // F x 3, CCW
  Eigen::MatrixXd corner_lengths;  // F x 3, l(f,c) = |edge opposite corner c|

  // Derived at construction.
  Eigen::MatrixXd corner_layout;  // F x 6, per-face isometric chart (x,y per corner)
  Eigen::MatrixXd corner_angles;  // F x 3
  Eigen::VectorXd face_areas;     // F

  int num_vertices = 0;
  int euler_characteristic = 0;
  double total_area = 0.0;
  double mean_edge_length = 0.0;
  bool has_positions = false;

  int num_faces() const { return static_cast<int>(faces.rows()); }

  static TriangleMesh from_positions(const Eigen::MatrixXd& positions,
                                     const Eigen::MatrixXi& faces);
  static TriangleMesh from_intrinsic(const Eigen::MatrixXi& faces,
                                     const Eigen::MatrixXd& corner_lengths,
                                     int num_vertices);

 private:
  void finalize();
};

namespace detail {

inline double stable_triangle_area(double a, double b, double c) {
  // Kahan's formula; exact-rounding-friendly for needle triangles.
  double x = a, y = b, z = c;
  if (x < y) std::swap(x, y);
  if (y < z) std::swap(y, z);
  if (x < y) std::swap(x, y);
  double s = (x + (y + z)) * (z - (x - y)) * (z + (x - y)) * (x + (y - z));
  if (s < 0.0) return -1.0;
  return 0.25 * std::sqrt(s);
}

}  // namespace detail

inline void TriangleMesh::finalize() {
  const int nf = num_faces();
  require(nf > 0, "mesh has no faces");
  require(num_vertices > 0, "mesh has no vertices");

  std::vector<bool> referenced(num_vertices, false);
  for (int f = 0; f < nf; ++f) {
    for (int c = 0; c < 3; ++c) {
      int v = faces(f, c);
      require(v >= 0 && v < num_vertices, "face " + std::to_string(f) +
                                              " references vertex out of range");
      referenced[v] = true;
    }
    require(faces(f, 0) != faces(f, 1) && faces(f, 1) != faces(f, 2) &&
                faces(f, 0) != faces(f, 2),
            "face " + std::to_string(f) + " repeats a vertex");
  }
  require(std::all_of(referenced.begin(), referenced.end(),
                      [](bool b) { return b; }),
          "mesh has isolated vertices");

  // Closed manifold + consistent orientation: each undirected edge must be
  // used exactly twice, once in each direction. Shared-edge lengths must agree.
  std::map<std::pair<int, int>, std::pair<int, double>> edges;  // (dir count, length)
  for (int f = 0; f < nf; ++f) {
    for (int c = 0; c < 3; ++c) {
      int a = faces(f, (c + 1) % 3);
      int b = faces(f, (c + 2) % 3);
      double len = corner_lengths(f, c);
      require(std::isfinite(len) && len > 0.0,
              "face " + std::to_string(f) + " has a non-positive edge length");
      auto key = std::minmax(a, b);
      auto [it, inserted] = edges.try_emplace(key, 0, len);
      if (!inserted) {
        require(std::abs(it->second.second - len) <=
                    1e-12 * std::max(1.0, len),
                "edge lengths disagree across faces at face " +
                    std::to_string(f));
      }
      it->second.first += (a < b) ? 1 : -1;
    }
  }
  double edge_len_sum = 0.0;
  std::map<std::pair<int, int>, int> use_count;
  for (int f = 0; f < nf; ++f) {
    for (int c = 0; c < 3; ++c) {
      auto key = std::minmax(faces(f, (c + 1) % 3), faces(f, (c + 2) % 3));
      use_count[key] += 1;
    }
  }
  for (const auto& [key, cnt] : use_count) {
    require(cnt == 2, "mesh is not closed: edge (" + std::to_string(key.first) +
                          "," + std::to_string(key.second) + ") used " +
                          std::to_string(cnt) + " times");
  }
  for (const auto& [key, rec] : edges) {
    require(rec.first == 0, "inconsistent orientation at edge (" +
                                std::to_string(key.first) + "," +
                                std::to_string(key.second) + ")");
    edge_len_sum += rec.second;
  }

  const int ne = static_cast<int>(edges.size());
  euler_characteristic = num_vertices - ne + nf;
  mean_edge_length = edge_len_sum / ne;

  corner_layout.resize(nf, 6);
  corner_angles.resize(nf, 3);
  face_areas.resize(nf);
  total_area = 0.0;
  for (int f = 0; f < nf; ++f) {
    double a = corner_lengths(f, 0);
    double b = corner_lengths(f, 1);
    double c = corner_lengths(f, 2);
    require(a < b + c && b < a + c && c < a + b,
            "face " + std::to_string(f) + " violates the triangle inequality");
    double area = detail::stable_triangle_area(a, b, c);
    require(area > 0.0, "face " + std::to_string(f) + " is degenerate");
    face_areas[f] = area;
    total_area += area;

    for (int k = 0; k < 3; ++k) {
      double opp = corner_lengths(f, k);
      double s1 = corner_lengths(f, (k + 1) % 3);
      double s2 = corner_lengths(f, (k + 2) % 3);
      double q = (s1 * s1 + s2 * s2 - opp * opp) / (2.0 * s1 * s2);
      corner_angles(f, k) = std::acos(std::clamp(q, -1.0, 1.0));
    }

    // Isometric chart: corner 0 at origin, corner 1 on +x, corner 2 above.
    double cos0 = (b * b + c * c - a * a) / (2.0 * b * c);
    cos0 = std::clamp(cos0, -1.0, 1.0);
    double sin0 = std::sqrt(std::max(0.0, 1.0 - cos0 * cos0));
    corner_layout(f, 0) = 0.0;
    corner_layout(f, 1) = 0.0;
    corner_layout(f, 2) = c;
    corner_layout(f, 3) = 0.0;
    corner_layout(f, 4) = b * cos0;
    corner_layout(f, 5) = b * sin0;
  }
}

inline TriangleMesh TriangleMesh::from_positions(const Eigen::MatrixXd& positions,
                                                 const Eigen::MatrixXi& faces) {
  require(positions.cols() == 3, "positions must be V x 3");
  require(faces.cols() == 3, "faces must be F x 3");
  require(positions.allFinite(), "positions contain non-finite entries");

  TriangleMesh mesh;
  mesh.positions = positions;
  mesh.faces = faces;
  mesh.num_vertices = static_cast<int>(positions.rows());
  mesh.has_positions = true;

  const int nf = mesh.num_faces();
  mesh.corner_lengths.resize(nf, 3);
  for (int f = 0; f < nf; ++f) {
    for (int c = 0; c < 3; ++c) {
      Vec3 p = positions.row(faces(f, (c + 1) % 3));
      Vec3 q = positions.row(faces(f, (c + 2) % 3));
      mesh.corner_lengths(f, c) = (p - q).norm();
    }
  }
  mesh.finalize();
  return mesh;
}

inline TriangleMesh TriangleMesh::from_intrinsic(
    const Eigen::MatrixXi& faces, const Eigen::MatrixXd& corner_lengths,
    int num_vertices) {
  require(faces.cols() == 3, "faces must be F x 3");
  require(corner_lengths.rows() == faces.rows() && corner_lengths.cols() == 3,
          "corner_lengths must be F x 3");
  require(corner_lengths.allFinite(), "corner lengths contain non-finite entries");

  TriangleMesh mesh;
  mesh.faces = faces;
  mesh.corner_lengths = corner_lengths;
  mesh.num_vertices = num_vertices;
  mesh.has_positions = false;
  mesh.finalize();
  return mesh;
}

/// Barycentric vertex areas: one third of each incident face area.
/// Sums exactly to the total area (up to summation roundoff).
inline Eigen::VectorXd vertex_areas(const TriangleMesh& mesh) {
  Eigen::VectorXd areas = Eigen::VectorXd::Zero(mesh.num_vertices);
  for (int f = 0; f < mesh.num_faces(); ++f) {
    double third = mesh.face_areas[f] / 3.0;
    for (int c = 0; c < 3; ++c) areas[mesh.faces(f, c)] += third;
  }
  return areas;
}

}  // namespace phaselab
