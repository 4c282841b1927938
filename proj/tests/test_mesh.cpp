#include <catch2/catch_amalgamated.hpp>

#include "phaselab/curvature.hpp"
#include "phaselab/generators.hpp"
#include "phaselab/mesh.hpp"

using namespace phaselab;

namespace {

Eigen::MatrixXd tet_positions() {
  Eigen::MatrixXd p(4, 3);
  p << 0, 0, 0, 1, 0, 0, 0, 1, 0, 0, 0, 1;
  return p;
}

Eigen::MatrixXi tet_faces() {
  Eigen::MatrixXi f(4, 3);
  f << 0, 2, 1, 0, 1, 3, 0, 3, 2, 1, 2, 3;
  return f;
}

double signed_volume(const TriangleMesh& mesh) {
  double vol = 0.0;
  for (int f = 0; f < mesh.num_faces(); ++f) {
    Vec3 a = mesh.positions.row(mesh.faces(f, 0));
    Vec3 b = mesh.positions.row(mesh.faces(f, 1));
    Vec3 c = mesh.positions.row(mesh.faces(f, 2));
    vol += a.dot(b.cross(c)) / 6.0;
  }
  return vol;
}

}  // namespace

TEST_CASE("tetrahedron builds as a closed oriented sphere") {
  TriangleMesh mesh = TriangleMesh::from_positions(tet_positions(), tet_faces());
  CHECK(mesh.num_vertices == 4);
  CHECK(mesh.num_faces() == 4);
  CHECK(mesh.euler_characteristic == 2);
  CHECK(signed_volume(mesh) < 0.2);  // inward convention would flip sign
  CHECK(signed_volume(mesh) > 0.0);
}

TEST_CASE("mesh validation rejects broken input") {
  SECTION("missing face leaves boundary edges") {
    Eigen::MatrixXi open = tet_faces().topRows(3);
    CHECK_THROWS_AS(TriangleMesh::from_positions(tet_positions(), open),
                    std::invalid_argument);
  }
  SECTION("flipped face breaks orientation") {
    Eigen::MatrixXi f = tet_faces();
    std::swap(f(3, 0), f(3, 1));
    CHECK_THROWS_AS(TriangleMesh::from_positions(tet_positions(), f),
                    std::invalid_argument);
  }
  SECTION("repeated vertex in a face") {
    Eigen::MatrixXi f = tet_faces();
    f(0, 1) = f(0, 0);
    CHECK_THROWS_AS(TriangleMesh::from_positions(tet_positions(), f),
                    std::invalid_argument);
  }
  SECTION("isolated vertex") {
    Eigen::MatrixXd p(5, 3);
    p.topRows(4) = tet_positions();
    p.row(4) << 9, 9, 9;
    CHECK_THROWS_AS(TriangleMesh::from_positions(p, tet_faces()),
                    std::invalid_argument);
  }
  SECTION("intrinsic lengths violating the triangle inequality") {
    Eigen::MatrixXd lengths = Eigen::MatrixXd::Constant(4, 3, 1.0);
    lengths(2, 0) = 5.0;
    CHECK_THROWS_AS(TriangleMesh::from_intrinsic(tet_faces(), lengths, 4),
                    std::invalid_argument);
  }
  SECTION("intrinsic lengths disagreeing across a shared edge") {
    Eigen::MatrixXd lengths = Eigen::MatrixXd::Constant(4, 3, 1.0);
    lengths(2, 1) = 1.2;
    CHECK_THROWS_AS(TriangleMesh::from_intrinsic(tet_faces(), lengths, 4),
                    std::invalid_argument);
  }
}

TEST_CASE("icosphere subdivision counts and geometry") {
  for (int n = 0; n <= 3; ++n) {
    TriangleMesh mesh = gen_icosphere(n);
    CHECK(mesh.num_vertices == 10 * (1 << (2 * n)) + 2);
    CHECK(mesh.euler_characteristic == 2);
    CHECK(mesh.positions.rowwise().norm().maxCoeff() == Catch::Approx(1.0));
    CHECK(signed_volume(mesh) > 0.0);
  }
  TriangleMesh fine = gen_icosphere(3);
  CHECK(fine.total_area == Catch::Approx(4.0 * M_PI).epsilon(0.01));

  CHECK_THROWS_AS(gen_icosphere(-1), std::invalid_argument);
  CHECK_THROWS_AS(gen_icosphere(8), ResourceError);
}

TEST_CASE("angle defects detect curvature sign and satisfy Gauss-Bonnet") {
  SECTION("icosphere: total defect 4 pi") {
    TriangleMesh mesh = gen_icosphere(4);
    CHECK(std::abs(total_angle_defect(mesh) - 4.0 * M_PI) < 1e-10);
    Eigen::VectorXd k = vertex_gauss_curvature(mesh);
    CHECK(k.minCoeff() > 0.5);
    CHECK(k.maxCoeff() < 1.5);
  }
  SECTION("flat torus: every defect vanishes") {
    TorusMesh torus = gen_flat_torus(1.0, 16);
    CHECK(angle_defects(torus.mesh).cwiseAbs().maxCoeff() < 1e-12);
    CHECK(std::abs(total_angle_defect(torus.mesh)) < 1e-10);
  }
  SECTION("dumbbell: total defect 4 pi with a negative band at the neck") {
    RevolutionMesh rev = gen_revolution_mesh(ProfileCurve::dumbbell(0.5), 48, 48);
    CHECK(std::abs(total_angle_defect(rev.mesh) - 4.0 * M_PI) < 1e-10);
    Eigen::VectorXd k = vertex_gauss_curvature(rev.mesh);
    double k_neck = 0.0;
    for (int v = 0; v < rev.mesh.num_vertices; ++v) {
      if (std::abs(rev.vertex_t[v] - M_PI / 2.0) < 1e-9) k_neck = k[v];
    }
    CHECK(k_neck == Catch::Approx(-1.0).margin(0.05));
  }
}

TEST_CASE("flat torus is exactly flat with the prescribed area") {
  TorusMesh torus = gen_flat_torus(2.5, 8);
  CHECK(torus.mesh.num_vertices == 64);
  CHECK(torus.mesh.euler_characteristic == 0);
  CHECK(torus.mesh.total_area == Catch::Approx(2.5 * 2.5).epsilon(1e-13));
  CHECK(torus.vertex_uv.rows() == 64);
  CHECK(torus.vertex_uv.maxCoeff() == Catch::Approx(2.5 * 7.0 / 8.0));

  CHECK_THROWS_AS(gen_flat_torus(0.0, 8), std::invalid_argument);
  CHECK_THROWS_AS(gen_flat_torus(1.0, 3), std::invalid_argument);
  CHECK_THROWS_AS(gen_flat_torus(1.0, 1024), ResourceError);
}

TEST_CASE("revolution mesh of the sphere profile reproduces the round sphere") {
  RevolutionMesh rev = gen_revolution_mesh(ProfileCurve::sphere(), 64, 64);
  CHECK(rev.mesh.num_vertices == 63 * 64 + 2);
  CHECK(rev.mesh.euler_characteristic == 2);
  CHECK(rev.mesh.total_area == Catch::Approx(4.0 * M_PI).epsilon(0.005));
  CHECK(signed_volume(rev.mesh) > 0.0);

  // Center (0,0,1): every vertex at unit distance.
  Vec3 center(0.0, 0.0, 1.0);
  double worst = 0.0;
  for (int v = 0; v < rev.mesh.num_vertices; ++v) {
    worst = std::max(worst,
                     std::abs((Vec3(rev.mesh.positions.row(v)) - center).norm() - 1.0));
  }
  CHECK(worst < 1e-10);

  CHECK_THROWS_AS(gen_revolution_mesh(ProfileCurve::sphere(), 4, 16),
                  std::invalid_argument);
  CHECK_THROWS_AS(gen_revolution_mesh(ProfileCurve::sphere(), 16, 2),
                  std::invalid_argument);
  CHECK_THROWS_AS(gen_revolution_mesh(ProfileCurve::sphere(), 512, 512),
                  ResourceError);
}

TEST_CASE("profile curves expose the closed-form geometry") {
  SECTION("sphere") {
    ProfileCurve sph = ProfileCurve::sphere();
    auto parallels = sph.closed_geodesic_parallels();
    REQUIRE(parallels.size() == 1);
    CHECK(parallels[0].t == Catch::Approx(M_PI / 2.0).margin(1e-10));
    CHECK(parallels[0].length == Catch::Approx(2.0 * M_PI).margin(1e-9));
    CHECK(parallels[0].gauss_curvature == Catch::Approx(1.0).margin(1e-8));
    CHECK(sph.gauss_curvature(0.0) == Catch::Approx(1.0));
  }
  SECTION("dumbbell neck and bulges") {
    double d = 0.5;
    ProfileCurve db = ProfileCurve::dumbbell(d);
    auto parallels = db.closed_geodesic_parallels();
    REQUIRE(parallels.size() == 3);
    // Bulge maxima at sin t = 1/sqrt(3d), neck at pi/2.
    double t_bulge = std::asin(1.0 / std::sqrt(3.0 * d));
    CHECK(parallels[0].t == Catch::Approx(t_bulge).margin(1e-9));
    CHECK(parallels[1].t == Catch::Approx(M_PI / 2.0).margin(1e-9));
    CHECK(parallels[2].t == Catch::Approx(M_PI - t_bulge).margin(1e-9));
    CHECK(parallels[1].length == Catch::Approx(2.0 * M_PI * (1.0 - d)).margin(1e-9));
    CHECK(parallels[1].gauss_curvature ==
          Catch::Approx(-(3.0 * d - 1.0) / (1.0 - d)).margin(1e-8));
    for (const auto& p : parallels) CHECK(std::abs(db.dpsi(p.t)) < 1e-10);

    CHECK(db.psi(M_PI / 2.0) == Catch::Approx(1.0 - d));
    CHECK(db.ddpsi(M_PI / 2.0) == Catch::Approx(3.0 * d - 1.0));
    CHECK_THROWS_AS(ProfileCurve::dumbbell(0.2), std::invalid_argument);
    CHECK_THROWS_AS(ProfileCurve::dumbbell(0.8), std::invalid_argument);
  }
  SECTION("d = 0.5 neck checks: K = -1, circumference pi") {
    ProfileCurve db = ProfileCurve::dumbbell(0.5);
    CHECK(db.gauss_curvature(M_PI / 2.0) == Catch::Approx(-1.0));
    CHECK(2.0 * M_PI * db.psi(M_PI / 2.0) == Catch::Approx(M_PI));
  }
  SECTION("tabulated profile tracks its source") {
    int n = 400;
    Eigen::VectorXd samples(n + 1);
    for (int i = 0; i <= n; ++i) samples[i] = std::sin(M_PI * i / n);
    ProfileCurve tab = ProfileCurve::tabulated(samples, M_PI);
    for (double t : {0.3, 1.0, 1.7, 2.9}) {
      CHECK(tab.psi(t) == Catch::Approx(std::sin(t)).margin(1e-6));
      CHECK(tab.dpsi(t) == Catch::Approx(std::cos(t)).margin(1e-5));
    }
    CHECK(tab.embeddable());
  }
  SECTION("steep tabulated profile is rejected as non-embeddable") {
    int n = 400;
    Eigen::VectorXd samples(n + 1);
    for (int i = 0; i <= n; ++i) {
      double t = M_PI * i / n;
      double s2 = std::sin(2.0 * t);
      samples[i] = std::sin(t) * (1.0 + 0.8 * s2 * s2);
    }
    ProfileCurve steep = ProfileCurve::tabulated(samples, M_PI);
    CHECK_FALSE(steep.embeddable());
    CHECK_THROWS_AS(gen_revolution_mesh(steep, 32, 16), EmbeddabilityError);
  }
}

TEST_CASE("embedding height integrates the meridian arc length") {
  ProfileCurve sph = ProfileCurve::sphere();
  // z(t) = 1 - cos t for the unit sphere profile.
  for (double t : {0.5, 1.2, M_PI / 2.0, 2.8, M_PI}) {
    CHECK(sph.embedding_height(t) == Catch::Approx(1.0 - std::cos(t)).margin(1e-10));
  }
}
