#include <catch2/catch_amalgamated.hpp>

#include <cstdio>
#include <filesystem>
#include <fstream>

#include "phaselab/core.hpp"
#include "phaselab/generators.hpp"
#include "phaselab/mesh_io.hpp"

using namespace phaselab;

namespace {

struct TempFile {
  std::string path;
  explicit TempFile(const std::string& name)
      : path((std::filesystem::temp_directory_path() / name).string()) {}
  ~TempFile() { std::remove(path.c_str()); }
};

}  // namespace

TEST_CASE("OBJ round trip preserves geometry bitwise") {
  auto mesh = gen_icosphere(2);
  TempFile tmp("phaselab_roundtrip.obj");
  write_obj(tmp.path, mesh);
  auto back = read_obj(tmp.path);

  REQUIRE(back.positions.rows() == mesh.positions.rows());
  REQUIRE(back.faces.rows() == mesh.faces.rows());
  CHECK(back.positions == mesh.positions);
  CHECK(back.faces == mesh.faces);
  CHECK(back.euler_characteristic == 2);
}

TEST_CASE("OBJ reader tolerates comments, normals and slash indices") {
  TempFile tmp("phaselab_decorated.obj");
  {
    std::ofstream out(tmp.path);
    out << "# regular tetrahedron\n"
        << "o tet\n"
        << "v 1 1 1\nv 1 -1 -1\nv -1 1 -1\nv -1 -1 1\n"
        << "vn 0 0 1\n"
        << "vt 0.5 0.5\n"
        << "s off\n"
        << "f 1/1/1 2/1/1 3/1/1\n"
        << "f 1//1 3//1 4//1\n"
        << "f 1/1 4/1 2/1\n"
        << "f 2 4 3\n";
  }
  auto mesh = read_obj(tmp.path);
  CHECK(mesh.num_vertices == 4);
  CHECK(mesh.faces.rows() == 4);
  CHECK(mesh.euler_characteristic == 2);
}

TEST_CASE("OBJ reader rejects malformed inputs") {
  SECTION("missing file") {
    CHECK_THROWS_AS(read_obj("/nonexistent/dir/mesh.obj"), IoError);
  }
  SECTION("quad face") {
    TempFile tmp("phaselab_quad.obj");
    std::ofstream(tmp.path) << "v 0 0 0\nv 1 0 0\nv 1 1 0\nv 0 1 0\n"
                            << "f 1 2 3 4\n";
    CHECK_THROWS_AS(read_obj(tmp.path), IoError);
  }
  SECTION("face index out of range") {
    TempFile tmp("phaselab_oob.obj");
    std::ofstream(tmp.path) << "v 0 0 0\nv 1 0 0\nv 0 1 0\nf 1 2 9\n";
    CHECK_THROWS_AS(read_obj(tmp.path), IoError);
  }
  SECTION("open surface fails validation") {
    TempFile tmp("phaselab_open.obj");
    std::ofstream(tmp.path) << "v 0 0 0\nv 1 0 0\nv 0 1 0\nf 1 2 3\n";
    CHECK_THROWS_AS(read_obj(tmp.path), std::invalid_argument);
  }
}

TEST_CASE("intrinsic meshes cannot be exported as OBJ") {
  auto torus = gen_flat_torus(1.0, 8);
  TempFile tmp("phaselab_intrinsic.obj");
  CHECK_THROWS_AS(write_obj(tmp.path, torus.mesh), IoError);
}

TEST_CASE("field CSV round trip is bitwise exact") {
  Rng rng(99);
  VertexField field(1000);
  for (int i = 0; i < 1000; ++i) field[i] = rng.uniform(-1e8, 1e8);
  field[0] = 1.0 / 3.0;
  field[1] = -0.0;
  field[2] = 1e-308;

  TempFile tmp("phaselab_field.csv");
  write_field_csv(tmp.path, field);
  VertexField back = read_field_csv(tmp.path);
  REQUIRE(back.size() == field.size());
  for (int i = 0; i < 1000; ++i) {
    CHECK(std::memcmp(&back[i], &field[i], sizeof(double)) == 0);
  }

  // header and line endings are pinned
  std::ifstream in(tmp.path, std::ios::binary);
  std::string text((std::istreambuf_iterator<char>(in)),
                   std::istreambuf_iterator<char>());
  CHECK(text.rfind("vertex_id,value\n0,", 0) == 0);
  CHECK(text.find('\r') == std::string::npos);
}

TEST_CASE("field CSV reader rejects corrupt files") {
  SECTION("bad header") {
    TempFile tmp("phaselab_badhdr.csv");
    std::ofstream(tmp.path) << "id,val\n0,1.0\n";
    CHECK_THROWS_AS(read_field_csv(tmp.path), IoError);
  }
  SECTION("ids out of order") {
    TempFile tmp("phaselab_badids.csv");
    std::ofstream(tmp.path) << "vertex_id,value\n0,1.0\n2,2.0\n";
    CHECK_THROWS_AS(read_field_csv(tmp.path), IoError);
  }
  SECTION("malformed row") {
    TempFile tmp("phaselab_badrow.csv");
    std::ofstream(tmp.path) << "vertex_id,value\n0;1.0\n";
    CHECK_THROWS_AS(read_field_csv(tmp.path), IoError);
  }
}

TEST_CASE("VTK export writes well-formed legacy polydata") {
  auto mesh = gen_icosphere(1);
  VertexField z = mesh.positions.col(2);
  TempFile tmp("phaselab_surface.vtk");
  write_vtk(tmp.path, mesh, {{"phase", z}});

  std::ifstream in(tmp.path, std::ios::binary);
  std::string text((std::istreambuf_iterator<char>(in)),
                   std::istreambuf_iterator<char>());
  CHECK(text.rfind("# vtk DataFile Version 3.0\n", 0) == 0);
  CHECK(text.find("DATASET POLYDATA\nPOINTS 42 double\n") != std::string::npos);
  CHECK(text.find("POLYGONS 80 320\n") != std::string::npos);
  CHECK(text.find("POINT_DATA 42\nSCALARS phase double 1\nLOOKUP_TABLE default\n") !=
        std::string::npos);

  CHECK_THROWS_AS(write_vtk(tmp.path, mesh, {{"bad", VertexField::Zero(3)}}),
                  std::invalid_argument);
}
