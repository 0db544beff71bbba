#pragma once

#include <string>
#include <utility>
#include <vector>

#include "membrane/fem.hpp"

namespace membrane {

// Legacy ASCII VTK polydata: triangulated surface plus named per-vertex
// scalar fields.  The reader accepts exactly the subset the writer emits,
// which keeps every artifact round-trippable by the tool itself.
struct VtkData {
  std::vector<Vec3> points;
  std::vector<std::array<int, 3>> triangles;
  std::vector<std::pair<std::string, Eigen::VectorXd>> fields;
};

void write_vtk(const std::string& path, const TriMesh& m,
               const std::vector<std::pair<std::string, Eigen::VectorXd>>&
                   fields = {},
               const std::string& title = "membrane field export");
VtkData read_vtk(const std::string& path);

// Wavefront OBJ of the (optionally deformed) surface: vertices moved to
// x + epsilon * u(x) * nu(x).  Pass an empty u for the undeformed mesh.
struct ObjData {
  std::vector<Vec3> points;
  std::vector<std::array<int, 3>> triangles;
};

void write_obj(const std::string& path, const TriMesh& m,
               const Eigen::VectorXd& u = {}, double epsilon = 0.2);
ObjData read_obj(const std::string& path);

// RFC-4180-style CSV (comma separator, '.' decimal point, one header row).
// Doubles are printed with %.17g so emitted files are bit-identical across
// runs and exact on re-parse.
void write_csv(const std::string& path, const std::vector<std::string>& header,
               const std::vector<std::vector<double>>& rows);

struct CsvData {
  std::vector<std::string> header;
  std::vector<std::vector<double>> rows;
};
CsvData read_csv(const std::string& path);

// %.17g formatting used by all writers.
std::string format_double(double v);

}  // namespace membrane
