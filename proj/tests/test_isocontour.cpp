#include <catch2/catch_amalgamated.hpp>

#include "phaselab/axisym.hpp"
#include "phaselab/generators.hpp"
#include "phaselab/isocontour.hpp"

using namespace phaselab;
using Catch::Matchers::WithinAbs;

TEST_CASE("equator of the height field converges to the great circle") {
  double err_coarse = 0.0, err_fine = 0.0;
  for (int n : {2, 4}) {
    auto mesh = gen_icosphere(n);
    VertexField z = mesh.positions.col(2);
    auto contour = extract_iso_contour(mesh, z, 0.0);
    REQUIRE(contour.loops.size() == 1);
    CHECK_FALSE(contour.empty);
    CHECK(contour.loops[0].points.size() >= 10);
    CHECK(contour.loops[0].positions.size() == contour.loops[0].points.size());
    double err = std::abs(contour.total_length - 2 * M_PI);
    (n == 2 ? err_coarse : err_fine) = err;
  }
  CHECK(err_fine <= 5e-3);
  CHECK(std::log2(err_coarse / err_fine) / 2.0 >= 1.5);
}

TEST_CASE("levels outside the field range give an empty contour") {
  auto mesh = gen_icosphere(2);
  VertexField z = mesh.positions.col(2);
  auto contour = extract_iso_contour(mesh, z, 2.0);
  CHECK(contour.empty);
  CHECK(contour.loops.empty());
  CHECK(contour.total_length == 0.0);
  CHECK(level_set_length(mesh, z, -1.5) == 0.0);
}

TEST_CASE("a level pinned exactly at vertex values still forms clean loops") {
  auto mesh = gen_icosphere(3);
  VertexField z = mesh.positions.col(2);
  double level = z[17];
  auto contour = extract_iso_contour(mesh, z, level);
  REQUIRE(contour.loops.size() == 1);
  for (const auto& p : contour.loops[0].points) {
    CHECK(p.a < p.b);
    CHECK(p.s >= 0.0);
    CHECK(p.s <= 1.0);
  }
  double circle = 2 * M_PI * std::sqrt(1.0 - level * level);
  CHECK(std::abs(contour.total_length - circle) / circle < 0.01);
}

TEST_CASE("vertical level lines on the flat torus have exact length") {
  auto torus = gen_flat_torus(1.0, 64);
  VertexField u(torus.mesh.num_vertices);
  for (int v = 0; v < static_cast<int>(torus.mesh.num_vertices); ++v) {
    u[v] = std::sin(2 * M_PI * torus.vertex_uv(v, 0));
  }
  for (double level : {0.0, 0.5}) {
    auto contour = extract_iso_contour(torus.mesh, u, level);
    CHECK(contour.loops.size() == 2);
    CHECK_THAT(contour.total_length, WithinAbs(2.0, 1e-9));
    // intrinsic mesh: crossings carry edge coordinates, no embedding
    for (const auto& loop : contour.loops) {
      CHECK(loop.positions.empty());
      CHECK_THAT(loop.length, WithinAbs(1.0, 1e-9));
    }
  }
}

TEST_CASE("contour extraction is deterministic") {
  auto mesh = gen_icosphere(3);
  VertexField z = mesh.positions.col(2);
  auto a = extract_iso_contour(mesh, z, 0.3);
  auto b = extract_iso_contour(mesh, z, 0.3);
  REQUIRE(a.loops.size() == b.loops.size());
  CHECK(a.total_length == b.total_length);
  for (size_t i = 0; i < a.loops.size(); ++i) {
    REQUIRE(a.loops[i].points.size() == b.loops[i].points.size());
    for (size_t j = 0; j < a.loops[i].points.size(); ++j) {
      CHECK(a.loops[i].points[j].a == b.loops[i].points[j].a);
      CHECK(a.loops[i].points[j].b == b.loops[i].points[j].b);
      CHECK(a.loops[i].points[j].s == b.loops[i].points[j].s);
    }
  }
}

TEST_CASE("reduced dumbbell kink traces the neck circle") {
  auto well = DoubleWell::quartic();
  auto dumb = ProfileCurve::dumbbell(0.5);
  auto st = solve_axisymmetric_steady(
      dumb, well, 0.1, axisym_step_init(dumb, 1024, well, 0.1));
  auto rev = gen_revolution_mesh(dumb, 96, 96);
  VertexField u = extend_axisymmetric(st, rev.vertex_t);

  auto contour = extract_iso_contour(rev.mesh, u, 0.0);
  REQUIRE(contour.loops.size() == 1);
  CHECK(std::abs(contour.total_length - M_PI) / M_PI < 1e-3);

  // the loop should hug the waist: radius 1 - d around the axis
  double z_neck = dumb.embedding_height(M_PI / 2);
  for (const auto& p : contour.loops[0].positions) {
    CHECK_THAT(p.head<2>().norm(), WithinAbs(0.5, 0.005));
    CHECK_THAT(p[2], WithinAbs(z_neck, 0.05));
  }
}

TEST_CASE("contour extraction rejects mismatched fields") {
  auto mesh = gen_icosphere(2);
  CHECK_THROWS_AS(extract_iso_contour(mesh, VertexField::Zero(7), 0.0),
                  std::invalid_argument);
}
