#pragma once

#include <cmath>
#include <map>

#include "phaselab/mesh.hpp"
#include "phaselab/profile.hpp"

namespace phaselab {

/// Geodesic icosphere: icosahedron with `subdivisions` rounds of 4-to-1
/// midpoint subdivision, vertices projected to the unit sphere.
/// V = 10 * 4^n + 2. Subdivision depth is capped at 7.
inline TriangleMesh gen_icosphere(int subdivisions) {
  require(subdivisions >= 0, "subdivisions must be non-negative");
  if (subdivisions > 7) {
    throw ResourceError("icosphere subdivision depth " +
                        std::to_string(subdivisions) + " exceeds cap 7");
  }

  const double phi = 0.5 * (1.0 + std::sqrt(5.0));
  Eigen::MatrixXd positions(12, 3);
  positions << -1, phi, 0, 1, phi, 0, -1, -phi, 0, 1, -phi, 0,
      0, -1, phi, 0, 1, phi, 0, -1, -phi, 0, 1, -phi,
      phi, 0, -1, phi, 0, 1, -phi, 0, -1, -phi, 0, 1;
  positions.rowwise().normalize();

  Eigen::MatrixXi faces(20, 3);
  faces << 0, 11, 5, 0, 5, 1, 0, 1, 7, 0, 7, 10, 0, 10, 11,
      1, 5, 9, 5, 11, 4, 11, 10, 2, 10, 7, 6, 7, 1, 8,
      3, 9, 4, 3, 4, 2, 3, 2, 6, 3, 6, 8, 3, 8, 9,
      4, 9, 5, 2, 4, 11, 6, 2, 10, 8, 6, 7, 9, 8, 1;

  for (int round = 0; round < subdivisions; ++round) {
    std::map<std::pair<int, int>, int> midpoint;
    std::vector<Vec3> verts;
    verts.reserve(positions.rows() * 4);
    for (int i = 0; i < positions.rows(); ++i) verts.push_back(positions.row(i));

    auto mid = [&](int a, int b) {
      auto key = std::minmax(a, b);
      auto it = midpoint.find(key);
      if (it != midpoint.end()) return it->second;
      Vec3 m = (verts[a] + verts[b]).normalized();
      int id = static_cast<int>(verts.size());
      verts.push_back(m);
      midpoint.emplace(key, id);
      return id;
    };

    Eigen::MatrixXi next(faces.rows() * 4, 3);
    for (int f = 0; f < faces.rows(); ++f) {
      int a = faces(f, 0), b = faces(f, 1), c = faces(f, 2);
      int ab = mid(a, b), bc = mid(b, c), ca = mid(c, a);
      next.row(4 * f + 0) << a, ab, ca;
      next.row(4 * f + 1) << b, bc, ab;
      next.row(4 * f + 2) << c, ca, bc;
      next.row(4 * f + 3) << ab, bc, ca;
    }
    positions.resize(verts.size(), 3);
    for (size_t i = 0; i < verts.size(); ++i) positions.row(i) = verts[i];
    faces = next;
  }

  TriangleMesh mesh = TriangleMesh::from_positions(positions, faces);
  require(mesh.euler_characteristic == 2, "icosphere must be a topological sphere");
  return mesh;
}

/// Surface of revolution with its generating data.
/// vertex_t holds the meridian parameter of every vertex (poles included),
/// which downstream code uses to evaluate axisymmetric reference solutions.
struct RevolutionMesh {
  TriangleMesh mesh;
  ProfileCurve profile;
  Eigen::VectorXd vertex_t;
  int n_t = 0;
  int n_theta = 0;
};

/// Ring-aligned triangulation of the revolution surface of `profile`:
/// n_t meridian intervals, n_theta vertices per interior ring, poles as
/// single vertices. V = (n_t - 1) * n_theta + 2, capped at 200k.
inline RevolutionMesh gen_revolution_mesh(const ProfileCurve& profile, int n_t,
                                          int n_theta) {
  require(n_t >= 8, "n_t must be at least 8");
  require(n_theta >= 3, "n_theta must be at least 3");
  long v_count = static_cast<long>(n_t - 1) * n_theta + 2;
  if (v_count > 200000) {
    throw ResourceError("revolution mesh with " + std::to_string(v_count) +
                        " vertices exceeds the 200k cap");
  }
  if (!profile.embeddable()) {
    throw EmbeddabilityError(
        "profile slope exceeds 1; no isometric surface of revolution exists");
  }

  const double t_max = profile.t_max();
  const int rings = n_t - 1;
  Eigen::MatrixXd positions(v_count, 3);
  Eigen::VectorXd vertex_t(v_count);

  // Cumulative height per ring; per-interval quadrature keeps full accuracy.
  std::vector<double> z(n_t + 1, 0.0);
  {
    namespace bq = boost::math::quadrature;
    auto integrand = [&](double s) {
      double g = 1.0 - profile.dpsi(s) * profile.dpsi(s);
      return std::sqrt(std::max(0.0, g));
    };
    for (int j = 1; j <= n_t; ++j) {
      double a = t_max * (j - 1) / n_t;
      double b = t_max * j / n_t;
      z[j] = z[j - 1] +
             bq::gauss_kronrod<double, 31>::integrate(integrand, a, b, 8, 1e-13);
    }
  }

  positions.row(0) << 0.0, 0.0, 0.0;  // pole at t = 0
  vertex_t[0] = 0.0;
  for (int j = 1; j <= rings; ++j) {
    double t = t_max * j / n_t;
    double r = profile.psi(t);
    for (int k = 0; k < n_theta; ++k) {
      double theta = 2.0 * M_PI * k / n_theta;
      int v = 1 + (j - 1) * n_theta + k;
      positions.row(v) << r * std::cos(theta), r * std::sin(theta), z[j];
      vertex_t[v] = t;
    }
  }
  int top = static_cast<int>(v_count) - 1;
  positions.row(top) << 0.0, 0.0, z[n_t];
  vertex_t[top] = t_max;

  auto ring_vertex = [&](int j, int k) {
    return 1 + (j - 1) * n_theta + ((k % n_theta) + n_theta) % n_theta;
  };

  std::vector<Eigen::RowVector3i> face_list;
  face_list.reserve(2 * static_cast<size_t>(n_t) * n_theta);
  for (int k = 0; k < n_theta; ++k) {  // bottom fan, outward-down
    face_list.push_back({0, ring_vertex(1, k + 1), ring_vertex(1, k)});
  }
  for (int j = 1; j < rings; ++j) {
    for (int k = 0; k < n_theta; ++k) {
      int a = ring_vertex(j, k), b = ring_vertex(j, k + 1);
      int c = ring_vertex(j + 1, k + 1), d = ring_vertex(j + 1, k);
      face_list.push_back({a, b, c});
      face_list.push_back({a, c, d});
    }
  }
  for (int k = 0; k < n_theta; ++k) {  // top fan, outward-up
    face_list.push_back({top, ring_vertex(rings, k), ring_vertex(rings, k + 1)});
  }

  Eigen::MatrixXi faces(face_list.size(), 3);
  for (size_t f = 0; f < face_list.size(); ++f) faces.row(f) = face_list[f];

  RevolutionMesh out{TriangleMesh::from_positions(positions, faces), profile,
                     vertex_t, n_t, n_theta};
  require(out.mesh.euler_characteristic == 2,
          "revolution mesh must be a topological sphere");
  return out;
}

/// Flat square torus carried intrinsically: the [0,L)^2 fundamental domain on
/// an n x n grid of right-isosceles triangle pairs, opposite sides glued.
/// Exactly flat (every angle defect is zero by construction); chart
/// coordinates of each vertex are kept in vertex_uv for field synthesis.
struct TorusMesh {
  TriangleMesh mesh;
  Eigen::MatrixXd vertex_uv;  // V x 2, fundamental-domain coordinates
  double side = 0.0;
  int n = 0;
};

inline TorusMesh gen_flat_torus(double side, int n) {
  require(side > 0.0, "torus side length must be positive");
  require(n >= 4, "torus grid must be at least 4 x 4");
  if (n > 512) {
    throw ResourceError("torus grid " + std::to_string(n) +
                        " exceeds the 512 cap");
  }

  const double h = side / n;
  const double diag = h * std::sqrt(2.0);
  const int nv = n * n;
  auto vid = [&](int i, int j) {
    return ((j % n + n) % n) * n + ((i % n + n) % n);
  };

  Eigen::MatrixXi faces(2 * n * n, 3);
  Eigen::MatrixXd lengths(2 * n * n, 3);
  int f = 0;
  for (int j = 0; j < n; ++j) {
    for (int i = 0; i < n; ++i) {
      int v00 = vid(i, j), v10 = vid(i + 1, j);
      int v11 = vid(i + 1, j + 1), v01 = vid(i, j + 1);
      faces.row(f) << v00, v10, v11;
      lengths.row(f) << h, diag, h;  // opposite v00: vertical, v10: diagonal, v11: horizontal
      ++f;
      faces.row(f) << v00, v11, v01;
      lengths.row(f) << h, h, diag;
      ++f;
    }
  }

  Eigen::MatrixXd uv(nv, 2);
  for (int j = 0; j < n; ++j) {
    for (int i = 0; i < n; ++i) uv.row(vid(i, j)) << i * h, j * h;
  }

  TorusMesh out{TriangleMesh::from_intrinsic(faces, lengths, nv), uv, side, n};
  require(out.mesh.euler_characteristic == 0, "flat torus must have genus 1");
  return out;
}

}  // namespace phaselab
