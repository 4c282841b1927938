#pragma once

#include "phaselab/eigensolver.hpp"
#include "phaselab/energy.hpp"
#include "phaselab/gradient.hpp"

namespace phaselab {

/// Second-variation operator of the phase-field energy at u, as a bilinear
/// form in the mass metric: A = eps S + M diag(W''(u)) / eps. Its pencil
/// eigenvalues against M decide local stability: the state is a local
/// minimizer iff the smallest one is non-negative.
inline SparseMatrix stability_operator(const OperatorPair& ops,
                                       const DoubleWell& well, double epsilon,
                                       const VertexField& u) {
  require(epsilon > 0.0, "epsilon must be positive");
  require(u.size() == ops.mass_diag.size(), "field size mismatch");
  SparseMatrix hess = epsilon * ops.stiffness;
  for (int i = 0; i < u.size(); ++i) {
    hess.coeffRef(i, i) += ops.mass_diag[i] * well.ddw(u[i]) / epsilon;
  }
  return hess;
}

/// Second variation evaluated on a direction v:
///   Q(v) = eps v'Sv + 1/eps * sum_i M_ii W''(u_i) v_i^2.
inline double quad_form(const OperatorPair& ops, const DoubleWell& well,
                        double epsilon, const VertexField& u,
                        const VertexField& v) {
  require(u.size() == v.size() && u.size() == ops.mass_diag.size(),
          "field size mismatch");
  double dirichlet = epsilon * v.dot(ops.stiffness * v);
  double potential = 0.0;
  for (int i = 0; i < u.size(); ++i) {
    potential += ops.mass_diag[i] * well.ddw(u[i]) * v[i] * v[i];
  }
  return dirichlet + potential / epsilon;
}

/// Classification band: eigenvalues within tau of zero are reported as
/// degenerate rather than stable/unstable, scaled to the operator's
/// potential term so the band tracks the problem's conditioning.
inline double stability_tau(const DoubleWell& well, double epsilon,
                            const VertexField& u) {
  double lo = u.minCoeff(), hi = u.maxCoeff();
  return 1e-6 * std::max(well.max_ddw(lo, hi), 1.0) / epsilon;
}

struct StabilityReport {
  Eigen::VectorXd eigenvalues;
  Eigen::MatrixXd eigenvectors;  // M-orthonormal columns
  Eigen::VectorXd residuals;
  double tau = 0.0;
  std::string classification;  // stable | unstable | degenerate
};

/// Smallest k eigenpairs of the second variation at u, classified against
/// the tau band. Zero modes are reported as degenerate, never suppressed.
inline StabilityReport classify_stability(const OperatorPair& ops,
                                          const DoubleWell& well,
                                          double epsilon, const VertexField& u,
                                          int k = 4,
                                          const EigenOptions& opts = {}) {
  SparseMatrix hess = stability_operator(ops, well, epsilon, u);
  EigenResult eig = smallest_eigenpairs(hess, ops.mass_diag, k, opts);

  StabilityReport report;
  report.eigenvalues = eig.values;
  report.eigenvectors = eig.vectors;
  report.residuals = eig.residuals;
  report.tau = stability_tau(well, epsilon, u);
  double mu1 = eig.values[0];
  if (mu1 < -report.tau) {
    report.classification = "unstable";
  } else if (mu1 <= report.tau) {
    report.classification = "degenerate";
  } else {
    report.classification = "stable";
  }
  return report;
}

struct WitnessReport {
  VertexField direction;  // area-averaged |grad u| at vertices
  double q_value = 0.0;   // Q evaluated on the direction
  double mass_norm_sq = 0.0;
  double tau = 0.0;
  std::string verdict;  // certifies-instability | inconclusive | degenerate
};

/// Geometric instability test direction: the interface indicator |grad u|
/// transferred to vertices. On a positively curved surface the second
/// variation is negative on this direction for any nonconstant steady state,
/// so Q(v) < -tau ||v||^2 certifies instability without an eigensolve.
inline WitnessReport instability_witness(const TriangleMesh& mesh,
                                         const OperatorPair& ops,
                                         const DoubleWell& well, double epsilon,
                                         const VertexField& u) {
  WitnessReport report;
  report.direction = vertex_gradient_magnitude(mesh, u);
  report.tau = stability_tau(well, epsilon, u);
  report.mass_norm_sq = mass_inner(ops, report.direction, report.direction);

  double scale = u.maxCoeff() - u.minCoeff();
  if (report.mass_norm_sq <= 1e-24 ||
      scale <= 1e-12 * std::max(1.0, u.cwiseAbs().maxCoeff())) {
    report.verdict = "degenerate";  // constant state: no interface to test
    report.q_value = 0.0;
    return report;
  }

  report.q_value = quad_form(ops, well, epsilon, u, report.direction);
  double band = report.tau * report.mass_norm_sq;
  if (report.q_value < -band) {
    report.verdict = "certifies-instability";
  } else if (report.q_value <= band) {
    report.verdict = "degenerate";
  } else {
    report.verdict = "inconclusive";
  }
  return report;
}

}  // namespace phaselab
