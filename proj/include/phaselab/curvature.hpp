#pragma once

#include "phaselab/mesh.hpp"

namespace phaselab {

/// Integrated Gauss curvature per vertex: angle defect 2 pi - sum of
/// incident corner angles. Sums to 2 pi chi over a closed mesh.
inline Eigen::VectorXd angle_defects(const TriangleMesh& mesh) {
  Eigen::VectorXd defect =
      Eigen::VectorXd::Constant(mesh.num_vertices, 2.0 * M_PI);
  for (int f = 0; f < mesh.num_faces(); ++f) {
    for (int c = 0; c < 3; ++c) defect[mesh.faces(f, c)] -= mesh.corner_angles(f, c);
  }
  return defect;
}

/// Pointwise curvature estimate: angle defect over barycentric vertex area.
inline Eigen::VectorXd vertex_gauss_curvature(const TriangleMesh& mesh) {
  Eigen::VectorXd defect = angle_defects(mesh);
  Eigen::VectorXd area = vertex_areas(mesh);
  return defect.cwiseQuotient(area);
}

/// Total curvature; equals 2 pi chi exactly up to summation roundoff.
inline double total_angle_defect(const TriangleMesh& mesh) {
  return angle_defects(mesh).sum();
}

}  // namespace phaselab
