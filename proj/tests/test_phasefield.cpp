#include <catch2/catch_amalgamated.hpp>

#include <boost/math/quadrature/gauss_kronrod.hpp>

#include "phaselab/flow.hpp"
#include "phaselab/generators.hpp"

using namespace phaselab;

namespace {

VertexField random_field(Rng& rng, int n, double lo, double hi) {
  VertexField u(n);
  for (int i = 0; i < n; ++i) u[i] = rng.uniform(lo, hi);
  return u;
}

}  // namespace

TEST_CASE("double well values, wells, and curvature at the wells") {
  DoubleWell q = DoubleWell::quartic();
  CHECK(q.alpha() == -1.0);
  CHECK(q.beta() == 1.0);
  CHECK(q.w(-1.0) == 0.0);
  CHECK(q.w(1.0) == 0.0);
  CHECK(q.w(0.0) == 0.25);
  CHECK(q.dw(1.0) == 0.0);
  CHECK(q.dw(-1.0) == 0.0);
  CHECK(q.ddw(1.0) == 2.0);
  CHECK(q.ddw(-1.0) == 2.0);
  // Positivity off the wells.
  for (double u = -2.0; u <= 2.0; u += 0.01) {
    if (std::abs(u * u - 1.0) > 1e-9) CHECK(q.w(u) > 0.0);
  }

  DoubleWell a = DoubleWell::asymmetric_quartic();
  CHECK(a.alpha() == 0.0);
  CHECK(a.beta() == 1.0);
  CHECK(a.w(0.0) == 0.0);
  CHECK(a.w(1.0) == 0.0);
  CHECK(a.ddw(0.0) == 2.0);
  CHECK(a.ddw(1.0) == 2.0);

  // Stabilization bound: sup of 3u^2-1 over [-1.5, 1.5] is 5.75.
  double kappa = q.default_kappa();
  CHECK(kappa >= 5.75);
  CHECK(kappa <= 5.81);
}

TEST_CASE("surface tension closed forms and sqrt-scaling") {
  double sigma_q = surface_tension(DoubleWell::quartic());
  CHECK(std::abs(sigma_q - 2.0 * std::sqrt(2.0) / 3.0) < 1e-10);

  double sigma_a = surface_tension(DoubleWell::asymmetric_quartic());
  CHECK(std::abs(sigma_a - std::sqrt(2.0) / 6.0) < 1e-10);

  for (double c : {0.5, 2.0}) {
    double sigma_c = surface_tension(DoubleWell::scaled_quartic(c));
    CHECK(std::abs(sigma_c - std::sqrt(c) * sigma_q) < 1e-10);
  }
}

TEST_CASE("heteroclinic profile matches tanh and carries energy sigma") {
  HeteroclinicProfile h = heteroclinic_profile(DoubleWell::quartic());
  double worst = 0.0;
  for (int i = 0; i < h.t.size(); ++i) {
    worst = std::max(worst,
                     std::abs(h.u[i] - std::tanh(h.t[i] / std::sqrt(2.0))));
  }
  CHECK(worst < 1e-6);
  CHECK(h.u.minCoeff() >= -1.0);
  CHECK(h.u.maxCoeff() <= 1.0);
  // Monotone connection.
  for (int i = 1; i < h.u.size(); ++i) CHECK(h.u[i] >= h.u[i - 1] - 1e-15);
  CHECK(std::abs(h.energy - surface_tension(DoubleWell::quartic())) < 1e-6);
}

TEST_CASE("energy of constant states") {
  TriangleMesh mesh = gen_icosphere(2);
  OperatorPair ops = build_operators(mesh);
  DoubleWell well = DoubleWell::quartic();
  double eps = 0.25;

  VertexField zero = VertexField::Zero(mesh.num_vertices);
  CHECK(phase_energy(ops, well, eps, zero) ==
        Catch::Approx(mesh.total_area / (4.0 * eps)).epsilon(1e-12));

  // Pure phases carry zero energy up to stiffness-form roundoff.
  VertexField plus = VertexField::Ones(mesh.num_vertices);
  CHECK(std::abs(phase_energy(ops, well, eps, plus)) < 1e-12);
  CHECK(std::abs(phase_energy(ops, well, eps, -plus)) < 1e-12);
}

TEST_CASE("energy matches high-order quadrature for a smooth torus field") {
  TorusMesh torus = gen_flat_torus(1.0, 128);
  OperatorPair ops = build_operators(torus.mesh);
  DoubleWell well = DoubleWell::quartic();
  double eps = 1.0;

  VertexField u(torus.mesh.num_vertices);
  for (int v = 0; v < torus.mesh.num_vertices; ++v) {
    u[v] = std::sin(2.0 * M_PI * torus.vertex_uv(v, 0));
  }

  namespace bq = boost::math::quadrature;
  auto integrand = [&](double x) {
    double du = 2.0 * M_PI * std::cos(2.0 * M_PI * x);
    return 0.5 * eps * du * du + well.w(std::sin(2.0 * M_PI * x)) / eps;
  };
  double oracle =
      bq::gauss_kronrod<double, 61>::integrate(integrand, 0.0, 1.0, 10, 1e-13);

  CHECK(phase_energy(ops, well, eps, u) == Catch::Approx(oracle).epsilon(1e-3));
}

TEST_CASE("energy rejects non-finite fields with the vertex named") {
  TriangleMesh mesh = gen_icosphere(1);
  OperatorPair ops = build_operators(mesh);
  VertexField u = VertexField::Zero(mesh.num_vertices);
  u[7] = std::numeric_limits<double>::quiet_NaN();
  CHECK_THROWS_MATCHES(phase_energy(ops, DoubleWell::quartic(), 0.3, u),
                       NumericalError,
                       Catch::Matchers::MessageMatches(
                           Catch::Matchers::ContainsSubstring("vertex 7")));
}

TEST_CASE("EL residual is the mass-metric energy gradient") {
  std::vector<TriangleMesh> meshes;
  meshes.push_back(gen_icosphere(1));
  meshes.push_back(gen_flat_torus(0.9, 6).mesh);
  meshes.push_back(gen_revolution_mesh(ProfileCurve::dumbbell(0.5), 8, 5).mesh);

  DoubleWell well = DoubleWell::quartic();
  double eps = 0.3;
  Rng rng(424242);
  int cases = 0;
  for (const auto& mesh : meshes) {
    OperatorPair ops = build_operators(mesh);
    for (int trial = 0; trial < 7 && cases < 20; ++trial, ++cases) {
      VertexField u = random_field(rng, mesh.num_vertices, -1.4, 1.4);
      VertexField r = el_residual(ops, well, eps, u);
      double ref = r.cwiseAbs().maxCoeff();
      double delta = 1e-5;
      double worst = 0.0;
      for (int i = 0; i < mesh.num_vertices; ++i) {
        VertexField up = u, dn = u;
        up[i] += delta;
        dn[i] -= delta;
        double fd = (phase_energy(ops, well, eps, up) -
                     phase_energy(ops, well, eps, dn)) /
                    (2.0 * delta);
        worst = std::max(worst, std::abs(fd - ops.mass_diag[i] * r[i]) /
                                    std::max(ops.mass_diag[i] * ref, 1e-12));
      }
      CHECK(worst < 1e-6);
    }
  }
  CHECK(cases == 20);

  OperatorPair ops = build_operators(meshes[0]);
  CHECK(el_residual(ops, well, eps,
                    VertexField::Ones(meshes[0].num_vertices))
            .cwiseAbs()
            .maxCoeff() < 1e-14);
  CHECK_THROWS_AS(el_residual(ops, well, eps, VertexField::Zero(5)),
                  std::invalid_argument);
}

TEST_CASE("stabilized step never increases the energy") {
  std::vector<TriangleMesh> meshes;
  meshes.push_back(gen_icosphere(1));
  meshes.push_back(gen_flat_torus(1.3, 6).mesh);
  meshes.push_back(gen_revolution_mesh(ProfileCurve::sphere(), 8, 5).mesh);
  std::vector<OperatorPair> ops;
  for (const auto& m : meshes) ops.push_back(build_operators(m));

  std::vector<DoubleWell> wells = {
      DoubleWell::quartic(), DoubleWell::scaled_quartic(0.5),
      DoubleWell::scaled_quartic(2.0), DoubleWell::asymmetric_quartic()};

  Rng rng(987654321);
  for (int sample = 0; sample < 10000; ++sample) {
    int mi = static_cast<int>(rng.next_u64() % meshes.size());
    const DoubleWell& well = wells[rng.next_u64() % wells.size()];
    double eps = rng.uniform(0.1, 1.0);
    double dt = std::exp(rng.uniform(std::log(1e-3), std::log(10.0)));
    double pad = rng.uniform(0.0, 1.0);
    VertexField u = random_field(rng, meshes[mi].num_vertices,
                                 well.alpha() - pad, well.beta() + pad);

    FlowStepper stepper(ops[mi], well, eps, dt);
    double e0 = phase_energy(ops[mi], well, eps, u);
    VertexField next = stepper.step(u);
    double e1 = phase_energy(ops[mi], well, eps, next);
    REQUIRE(e1 <= e0 + 1e-12 * std::max(1.0, std::abs(e0)));
  }
}

TEST_CASE("flow trajectories decrease energy monotonically") {
  TriangleMesh mesh = gen_icosphere(1);
  OperatorPair ops = build_operators(mesh);
  DoubleWell well = DoubleWell::quartic();
  FlowStepper stepper(ops, well, 0.3, 0.3);

  Rng rng(20250101);
  for (int start = 0; start < 1000; ++start) {
    VertexField u = random_field(rng, mesh.num_vertices, -1.5, 1.5);
    double prev = phase_energy(ops, well, 0.3, u);
    for (int k = 0; k < 20; ++k) {
      u = stepper.step(u);
      double e = phase_energy(ops, well, 0.3, u);
      REQUIRE(e <= prev + 1e-12 * std::max(1.0, std::abs(prev)));
      prev = e;
    }
  }
}

TEST_CASE("the unstable zero state decays under flow") {
  TriangleMesh mesh = gen_icosphere(2);
  OperatorPair ops = build_operators(mesh);
  DoubleWell well = DoubleWell::quartic();
  double eps = 0.25;

  Rng rng(77);
  VertexField u = random_field(rng, mesh.num_vertices, -1e-6, 1e-6);
  FlowStepper stepper(ops, well, eps, 0.5);
  double e0 = phase_energy(ops, well, eps, u);
  double prev = e0;
  for (int k = 0; k < 50; ++k) {
    u = stepper.step(u);
    double e = phase_energy(ops, well, eps, u);
    CHECK(e < prev);  // strictly downhill off the unstable maximum
    prev = e;
  }
  CHECK(prev < e0 - 1e-9);  // well above roundoff on an O(10) energy
}

TEST_CASE("steady solve lands on a pure phase") {
  TriangleMesh mesh = gen_icosphere(2);
  OperatorPair ops = build_operators(mesh);
  DoubleWell well = DoubleWell::quartic();
  double eps = 0.25;

  Rng rng(31337);
  VertexField u0 = random_field(rng, mesh.num_vertices, -1.2, 1.2);
  SolveParams params;
  params.seed = 5;
  SolveReport report = solve_steady(ops, well, eps, u0, params);

  CHECK(report.termination == "converged");
  VertexField ones = VertexField::Ones(mesh.num_vertices);
  double dist = std::min((report.u - ones).cwiseAbs().maxCoeff(),
                         (report.u + ones).cwiseAbs().maxCoeff());
  CHECK(dist < 1e-6);
  // Flow prefix of the energy trace is non-increasing; polish may add
  // ulp-level wiggle at the very end.
  for (size_t i = 1; i + 1 < report.energy_trace.size(); ++i) {
    CHECK(report.energy_trace[i] <=
          report.energy_trace[i - 1] + 1e-12 * (1.0 + std::abs(report.energy_trace[i - 1])));
  }
}

TEST_CASE("newton polish tightens a near-steady state") {
  TriangleMesh mesh = gen_icosphere(2);
  OperatorPair ops = build_operators(mesh);
  DoubleWell well = DoubleWell::quartic();
  double eps = 0.4;

  Rng rng(99);
  VertexField u = VertexField::Ones(mesh.num_vertices);
  for (int i = 0; i < u.size(); ++i) u[i] += 1e-3 * rng.uniform(-1.0, 1.0);

  PolishReport report = newton_polish(ops, well, eps, u);
  CHECK(report.converged);
  CHECK(el_residual(ops, well, eps, report.u).cwiseAbs().maxCoeff() <= 1e-10);
  CHECK((report.u - VertexField::Ones(mesh.num_vertices)).cwiseAbs().maxCoeff() <
        1e-8);
}
