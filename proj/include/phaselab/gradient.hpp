#pragma once

#include "phaselab/mesh.hpp"

namespace phaselab {

/// Per-face gradient of a piecewise-linear vertex field, expressed in each
/// face's isometric chart (so only the metric enters). Row f is the constant
/// gradient 2-vector on face f.
inline Eigen::MatrixXd face_gradients(const TriangleMesh& mesh,
                                      const VertexField& u) {
  require(u.size() == mesh.num_vertices, "field size mismatch");
  Eigen::MatrixXd grad(mesh.num_faces(), 2);
  for (int f = 0; f < mesh.num_faces(); ++f) {
    double inv2a = 1.0 / (2.0 * mesh.face_areas[f]);
    Vec2 g = Vec2::Zero();
    for (int c = 0; c < 3; ++c) {
      // Gradient of the hat at corner c: opposite edge rotated +90 deg.
      int c1 = (c + 1) % 3, c2 = (c + 2) % 3;
      double ex = mesh.corner_layout(f, 2 * c2) - mesh.corner_layout(f, 2 * c1);
      double ey =
          mesh.corner_layout(f, 2 * c2 + 1) - mesh.corner_layout(f, 2 * c1 + 1);
      g += u[mesh.faces(f, c)] * Vec2(-ey, ex) * inv2a;
    }
    grad.row(f) = g;
  }
  return grad;
}

/// |grad u| per face.
inline Eigen::VectorXd face_gradient_magnitudes(const TriangleMesh& mesh,
                                                const VertexField& u) {
  return face_gradients(mesh, u).rowwise().norm();
}

/// Area-weighted transfer of per-face |grad u| to vertices. This is the
/// interface-indicator field used as an instability test direction.
inline VertexField vertex_gradient_magnitude(const TriangleMesh& mesh,
                                             const VertexField& u) {
  Eigen::VectorXd mags = face_gradient_magnitudes(mesh, u);
  VertexField out = VertexField::Zero(mesh.num_vertices);
  Eigen::VectorXd weight = Eigen::VectorXd::Zero(mesh.num_vertices);
  for (int f = 0; f < mesh.num_faces(); ++f) {
    double third = mesh.face_areas[f] / 3.0;
    for (int c = 0; c < 3; ++c) {
      out[mesh.faces(f, c)] += third * mags[f];
      weight[mesh.faces(f, c)] += third;
    }
  }
  return out.cwiseQuotient(weight);
}

}  // namespace phaselab
