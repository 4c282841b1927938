#include <catch2/catch_amalgamated.hpp>

#include "phaselab/generators.hpp"
#include "phaselab/stability.hpp"

using namespace phaselab;

TEST_CASE("Laplace spectrum of the unit sphere: 0, then 2 with multiplicity 3") {
  TriangleMesh mesh = gen_icosphere(4);
  OperatorPair ops = build_operators(mesh);
  EigenResult eig = smallest_eigenpairs(ops.stiffness, ops.mass_diag, 5);

  CHECK(std::abs(eig.values[0]) < 1e-8);
  int in_band = 0;
  for (int j = 1; j < 5; ++j) {
    if (std::abs(eig.values[j] - 2.0) <= 0.04) ++in_band;
  }
  CHECK(in_band == 3);
  CHECK(eig.values[4] > 2.1);  // next shell is near 6
  CHECK(eig.values[4] == Catch::Approx(6.0).epsilon(0.03));
}

TEST_CASE("Laplace spectrum of the unit flat torus: (2 pi)^2 with multiplicity 4") {
  TorusMesh torus = gen_flat_torus(1.0, 64);
  OperatorPair ops = build_operators(torus.mesh);
  EigenResult eig = smallest_eigenpairs(ops.stiffness, ops.mass_diag, 6);

  double lam = 4.0 * M_PI * M_PI;
  CHECK(std::abs(eig.values[0]) < 1e-8);
  for (int j = 1; j <= 4; ++j) {
    CHECK(eig.values[j] == Catch::Approx(lam).epsilon(0.01));
  }
  CHECK(eig.values[5] > 1.5 * lam);
}

TEST_CASE("eigensolver meets its residual contract deterministically") {
  TriangleMesh mesh = gen_icosphere(3);
  OperatorPair ops = build_operators(mesh);

  EigenOptions opts;
  opts.seed = 2718;
  EigenResult a = smallest_eigenpairs(ops.stiffness, ops.mass_diag, 4, opts);
  EigenResult b = smallest_eigenpairs(ops.stiffness, ops.mass_diag, 4, opts);

  CHECK(a.residuals.maxCoeff() <= 1e-8);
  // Bitwise reproducibility of the full result.
  CHECK((a.values - b.values).cwiseAbs().maxCoeff() == 0.0);
  CHECK((a.vectors - b.vectors).cwiseAbs().maxCoeff() == 0.0);

  // M-orthonormal eigenvectors.
  for (int i = 0; i < 4; ++i) {
    for (int j = 0; j <= i; ++j) {
      double g = a.vectors.col(i).dot(ops.mass_diag.cwiseProduct(a.vectors.col(j)));
      CHECK(std::abs(g - (i == j ? 1.0 : 0.0)) < 1e-10);
    }
  }

  // Strict relative residual for modes with a nonzero eigenvalue.
  for (int j = 1; j < 4; ++j) {
    Eigen::VectorXd ax = ops.stiffness * a.vectors.col(j);
    Eigen::VectorXd rx =
        ax - a.values[j] * ops.mass_diag.cwiseProduct(a.vectors.col(j));
    CHECK(rx.norm() <= 1e-8 * ax.norm());
  }
}

TEST_CASE("eigensolver reports nonconvergence with its residual history") {
  TriangleMesh mesh = gen_icosphere(2);
  OperatorPair ops = build_operators(mesh);
  EigenOptions opts;
  opts.max_iterations = 1;
  opts.residual_tol = 1e-14;
  try {
    smallest_eigenpairs(ops.stiffness, ops.mass_diag, 3, opts);
    FAIL("expected AccuracyError");
  } catch (const AccuracyError& err) {
    CHECK_FALSE(err.residual_trace.empty());
  }
}

TEST_CASE("constant phases classify by the well curvature") {
  TriangleMesh mesh = gen_icosphere(2);
  OperatorPair ops = build_operators(mesh);
  DoubleWell well = DoubleWell::quartic();
  double eps = 0.5;

  SECTION("pure phase: smallest eigenvalue W''(beta)/eps, stable") {
    VertexField u = VertexField::Ones(mesh.num_vertices);
    StabilityReport report = classify_stability(ops, well, eps, u, 3);
    CHECK(report.eigenvalues[0] == Catch::Approx(2.0 / eps).epsilon(1e-8));
    CHECK(report.classification == "stable");

    WitnessReport witness = instability_witness(mesh, ops, well, eps, u);
    CHECK(witness.verdict == "degenerate");
  }
  SECTION("unstable maximum: smallest eigenvalue W''(0)/eps < 0") {
    VertexField u = VertexField::Zero(mesh.num_vertices);
    StabilityReport report = classify_stability(ops, well, eps, u, 3);
    CHECK(report.eigenvalues[0] == Catch::Approx(-1.0 / eps).epsilon(1e-8));
    CHECK(report.classification == "unstable");
  }
}

TEST_CASE("quadratic form agrees with the eigensolve on eigenvectors") {
  TriangleMesh mesh = gen_icosphere(2);
  OperatorPair ops = build_operators(mesh);
  DoubleWell well = DoubleWell::quartic();
  double eps = 0.35;

  Rng rng(5150);
  VertexField u(mesh.num_vertices);
  for (int i = 0; i < u.size(); ++i) u[i] = rng.uniform(-1.2, 1.2);

  StabilityReport report = classify_stability(ops, well, eps, u, 3);
  for (int j = 0; j < 3; ++j) {
    VertexField phi = report.eigenvectors.col(j);
    double q = quad_form(ops, well, eps, u, phi);
    CHECK(q == Catch::Approx(report.eigenvalues[j]).margin(1e-7 * (1.0 + std::abs(report.eigenvalues[j]))));
  }
}

TEST_CASE("witness Rayleigh quotient dominates the smallest eigenvalue") {
  TriangleMesh mesh = gen_icosphere(2);
  OperatorPair ops = build_operators(mesh);
  DoubleWell well = DoubleWell::quartic();
  double eps = 0.3;

  Rng rng(8086);
  for (int trial = 0; trial < 5; ++trial) {
    VertexField u(mesh.num_vertices);
    for (int i = 0; i < u.size(); ++i) u[i] = rng.uniform(-1.3, 1.3);
    StabilityReport report = classify_stability(ops, well, eps, u, 1);
    WitnessReport witness = instability_witness(mesh, ops, well, eps, u);
    REQUIRE(witness.mass_norm_sq > 0.0);
    double rayleigh = witness.q_value / witness.mass_norm_sq;
    CHECK(rayleigh >= report.eigenvalues[0] - 1e-8 * (1.0 + std::abs(report.eigenvalues[0])));
  }
}
