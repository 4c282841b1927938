#pragma once

#include <cstdio>
#include <fstream>
#include <map>
#include <sstream>

#include "phaselab/mesh.hpp"

namespace phaselab {

struct IoError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

namespace detail {

inline std::string format_double(double x) {
  char buf[40];
  std::snprintf(buf, sizeof buf, "%.17g", x);
  return buf;
}

}  // namespace detail

/// Wavefront OBJ with full-precision coordinates; positions survive a
/// write/read round trip bitwise.
inline void write_obj(const std::string& path, const TriangleMesh& mesh) {
  if (!mesh.has_positions) {
    throw IoError("cannot write OBJ: mesh has no embedding");
  }
  std::ofstream out(path, std::ios::binary);
  if (!out) throw IoError("cannot open " + path + " for writing");
  for (Eigen::Index v = 0; v < mesh.positions.rows(); ++v) {
    out << "v " << detail::format_double(mesh.positions(v, 0)) << ' '
        << detail::format_double(mesh.positions(v, 1)) << ' '
        << detail::format_double(mesh.positions(v, 2)) << '\n';
  }
  for (Eigen::Index f = 0; f < mesh.faces.rows(); ++f) {
    out << "f " << mesh.faces(f, 0) + 1 << ' ' << mesh.faces(f, 1) + 1 << ' '
        << mesh.faces(f, 2) + 1 << '\n';
  }
  if (!out.flush()) throw IoError("write to " + path + " failed");
}

/// Reads a triangulated OBJ (v/f records; normals, texture coordinates,
/// groups and comments are skipped). The result passes full mesh validation.
inline TriangleMesh read_obj(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw IoError("cannot open " + path);

  std::vector<Vec3> verts;
  std::vector<std::array<int, 3>> faces;
  std::string line;
  int lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    std::istringstream ls(line);
    std::string tag;
    if (!(ls >> tag) || tag[0] == '#') continue;
    if (tag == "v") {
      Vec3 p;
      if (!(ls >> p[0] >> p[1] >> p[2])) {
        throw IoError(path + ":" + std::to_string(lineno) + ": malformed vertex");
      }
      verts.push_back(p);
    } else if (tag == "f") {
      std::array<int, 3> face;
      int count = 0;
      std::string item;
      while (ls >> item) {
        long idx = 0;
        try {
          idx = std::stol(item.substr(0, item.find('/')));
        } catch (const std::exception&) {
          throw IoError(path + ":" + std::to_string(lineno) +
                        ": malformed face index '" + item + "'");
        }
        if (idx < 1 || idx > static_cast<long>(verts.size())) {
          throw IoError(path + ":" + std::to_string(lineno) +
                        ": face index " + std::to_string(idx) + " out of range");
        }
        if (count < 3) face[count] = static_cast<int>(idx - 1);
        ++count;
      }
      if (count != 3) {
        throw IoError(path + ":" + std::to_string(lineno) +
                      ": only triangular faces are supported");
      }
      faces.push_back(face);
    }
    // vn / vt / o / g / s / usemtl / mtllib: ignored
  }
  if (verts.empty() || faces.empty()) {
    throw IoError(path + ": no triangle mesh found");
  }

  Eigen::MatrixXd positions(verts.size(), 3);
  for (size_t i = 0; i < verts.size(); ++i) positions.row(i) = verts[i];
  Eigen::MatrixXi f(faces.size(), 3);
  for (size_t i = 0; i < faces.size(); ++i) {
    f(i, 0) = faces[i][0];
    f(i, 1) = faces[i][1];
    f(i, 2) = faces[i][2];
  }
  return TriangleMesh::from_positions(positions, f);
}

/// Vertex scalar field as two-column CSV, full precision, LF line endings.
inline void write_field_csv(const std::string& path, const VertexField& field) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw IoError("cannot open " + path + " for writing");
  out << "vertex_id,value\n";
  for (Eigen::Index i = 0; i < field.size(); ++i) {
    out << i << ',' << detail::format_double(field[i]) << '\n';
  }
  if (!out.flush()) throw IoError("write to " + path + " failed");
}

inline VertexField read_field_csv(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw IoError("cannot open " + path);
  std::string line;
  if (!std::getline(in, line) || line != "vertex_id,value") {
    throw IoError(path + ": expected header 'vertex_id,value'");
  }
  std::vector<double> values;
  int lineno = 1;
  while (std::getline(in, line)) {
    ++lineno;
    if (line.empty()) continue;
    std::istringstream ls(line);
    long id = 0;
    char comma = 0;
    double value = 0.0;
    if (!(ls >> id >> comma >> value) || comma != ',') {
      throw IoError(path + ":" + std::to_string(lineno) + ": malformed row");
    }
    if (id != static_cast<long>(values.size())) {
      throw IoError(path + ":" + std::to_string(lineno) +
                    ": vertex ids must run 0,1,2,...");
    }
    values.push_back(value);
  }
  if (values.empty()) throw IoError(path + ": no data rows");
  return Eigen::Map<VertexField>(values.data(), values.size());
}

/// Legacy ASCII VTK polydata with any number of named vertex scalars,
/// for inspection in standard viewers.
inline void write_vtk(const std::string& path, const TriangleMesh& mesh,
                      const std::map<std::string, VertexField>& fields = {}) {
  if (!mesh.has_positions) {
    throw IoError("cannot write VTK: mesh has no embedding");
  }
  for (const auto& [name, field] : fields) {
    require(field.size() == static_cast<Eigen::Index>(mesh.num_vertices),
            "field '" + name + "' does not match the mesh");
  }
  std::ofstream out(path, std::ios::binary);
  if (!out) throw IoError("cannot open " + path + " for writing");
  out << "# vtk DataFile Version 3.0\nphase field surface\nASCII\n"
      << "DATASET POLYDATA\nPOINTS " << mesh.num_vertices << " double\n";
  for (Eigen::Index v = 0; v < mesh.positions.rows(); ++v) {
    out << detail::format_double(mesh.positions(v, 0)) << ' '
        << detail::format_double(mesh.positions(v, 1)) << ' '
        << detail::format_double(mesh.positions(v, 2)) << '\n';
  }
  out << "POLYGONS " << mesh.faces.rows() << ' ' << 4 * mesh.faces.rows()
      << '\n';
  for (Eigen::Index f = 0; f < mesh.faces.rows(); ++f) {
    out << "3 " << mesh.faces(f, 0) << ' ' << mesh.faces(f, 1) << ' '
        << mesh.faces(f, 2) << '\n';
  }
  if (!fields.empty()) {
    out << "POINT_DATA " << mesh.num_vertices << '\n';
    for (const auto& [name, field] : fields) {
      out << "SCALARS " << name << " double 1\nLOOKUP_TABLE default\n";
      for (Eigen::Index i = 0; i < field.size(); ++i) {
        out << detail::format_double(field[i]) << '\n';
      }
    }
  }
  if (!out.flush()) throw IoError("write to " + path + " failed");
}

}  // namespace phaselab
