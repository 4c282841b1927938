#pragma once

#include <cmath>

#include "phaselab/mesh.hpp"

namespace phaselab {

/// Discrete Laplace pair on a mesh: cotangent stiffness S (symmetric PSD,
/// zero row sums) and lumped barycentric mass M (diagonal, positive).
/// u' S u equals the piecewise-linear Dirichlet energy integral of |grad u|^2;
/// mass_diag sums to the surface area. The weak Laplacian is M^-1 (-S u)
/// but consumers work with the forms directly.
struct OperatorPair {
  SparseMatrix stiffness;     // V x V
  Eigen::VectorXd mass_diag;  // V
};

/// Assemble cotangent stiffness and lumped mass from the intrinsic metric.
/// Per-face element matrices have exact zero row sums; obtuse triangles give
/// negative off-diagonal weights, which is fine, but a non-finite cotangent
/// (numerically collapsed face) aborts with the face named.
inline OperatorPair build_operators(const TriangleMesh& mesh) {
  const int nv = mesh.num_vertices;
  std::vector<Eigen::Triplet<double>> trips;
  trips.reserve(static_cast<size_t>(mesh.num_faces()) * 12);

  for (int f = 0; f < mesh.num_faces(); ++f) {
    double area4 = 4.0 * mesh.face_areas[f];
    for (int c = 0; c < 3; ++c) {
      double opp = mesh.corner_lengths(f, c);
      double s1 = mesh.corner_lengths(f, (c + 1) % 3);
      double s2 = mesh.corner_lengths(f, (c + 2) % 3);
      double cot = (s1 * s1 + s2 * s2 - opp * opp) / area4;
      if (!std::isfinite(cot)) {
        throw AssemblyError("non-finite cotangent in face " + std::to_string(f));
      }
      double w = 0.5 * cot;
      int i = mesh.faces(f, (c + 1) % 3);
      int j = mesh.faces(f, (c + 2) % 3);
      trips.emplace_back(i, j, -w);
      trips.emplace_back(j, i, -w);
      trips.emplace_back(i, i, w);
      trips.emplace_back(j, j, w);
    }
  }

  OperatorPair ops;
  ops.stiffness.resize(nv, nv);
  ops.stiffness.setFromTriplets(trips.begin(), trips.end());
  ops.mass_diag = vertex_areas(mesh);
  return ops;
}

/// L2 inner product in the lumped mass metric.
inline double mass_inner(const OperatorPair& ops, const VertexField& u,
                         const VertexField& v) {
  return u.dot(ops.mass_diag.cwiseProduct(v));
}

/// Squared L2, Dirichlet, and H1 norms of a vertex field.
struct FieldNorms {
  double l2_sq = 0.0;
  double dirichlet_sq = 0.0;  // integral of |grad u|^2
  double h1_sq = 0.0;
};

inline FieldNorms field_norms(const OperatorPair& ops, const VertexField& u) {
  require(u.size() == ops.mass_diag.size(), "field size mismatch");
  FieldNorms n;
  n.l2_sq = mass_inner(ops, u, u);
  n.dirichlet_sq = u.dot(ops.stiffness * u);
  n.h1_sq = n.l2_sq + n.dirichlet_sq;
  return n;
}

}  // namespace phaselab
