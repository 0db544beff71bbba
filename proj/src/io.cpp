#include "membrane/io.hpp"

#include <cstdio>
#include <fstream>
#include <sstream>
#include <stdexcept>

#include "membrane/geometry.hpp"

namespace membrane {

namespace {

[[noreturn]] void fail(const std::string& path, const std::string& what) {
  throw std::runtime_error(path + ": " + what);
}

std::ofstream open_out(const std::string& path) {
  std::ofstream out(path);
  if (!out) fail(path, "cannot open for writing");
  return out;
}

std::ifstream open_in(const std::string& path) {
  std::ifstream in(path);
  if (!in) fail(path, "cannot open for reading");
  return in;
}

}  // namespace

std::string format_double(double v) {
  char buf[40];
  std::snprintf(buf, sizeof(buf), "%.17g", v);
  return buf;
}

void write_vtk(const std::string& path, const TriMesh& m,
               const std::vector<std::pair<std::string, Eigen::VectorXd>>&
                   fields,
               const std::string& title) {
  std::ofstream out = open_out(path);
  out << "# vtk DataFile Version 3.0\n" << title << "\nASCII\n";
  out << "DATASET POLYDATA\n";
  out << "POINTS " << m.n_vertices() << " double\n";
  for (const Vec3& p : m.vertices)
    out << format_double(p[0]) << ' ' << format_double(p[1]) << ' '
        << format_double(p[2]) << '\n';
  out << "POLYGONS " << m.n_triangles() << ' ' << 4 * m.n_triangles() << '\n';
  for (const auto& t : m.triangles)
    out << "3 " << t[0] << ' ' << t[1] << ' ' << t[2] << '\n';
  if (!fields.empty()) {
    out << "POINT_DATA " << m.n_vertices() << '\n';
    for (const auto& [name, values] : fields) {
      if (values.size() != m.n_vertices())
        fail(path, "field '" + name + "' does not match the vertex count");
      out << "SCALARS " << name << " double 1\nLOOKUP_TABLE default\n";
      for (Eigen::Index i = 0; i < values.size(); ++i)
        out << format_double(values[i]) << '\n';
    }
  }
  if (!out) fail(path, "write failed");
}

VtkData read_vtk(const std::string& path) {
  std::ifstream in = open_in(path);
  std::string line;
  auto next_line = [&](const char* what) {
    if (!std::getline(in, line)) fail(path, std::string("truncated: ") + what);
    return line;
  };
  next_line("version header");
  next_line("title");
  if (next_line("format") != "ASCII") fail(path, "expected ASCII format");
  if (next_line("dataset") != "DATASET POLYDATA")
    fail(path, "expected DATASET POLYDATA");

  VtkData data;
  std::string tag, scalar_type;
  int n = 0;
  in >> tag >> n >> scalar_type;
  if (!in || tag != "POINTS") fail(path, "expected POINTS block");
  data.points.resize(n);
  for (Vec3& p : data.points) in >> p[0] >> p[1] >> p[2];
  if (!in) fail(path, "truncated POINTS block");

  int t = 0, list_len = 0;
  in >> tag >> t >> list_len;
  if (!in || tag != "POLYGONS") fail(path, "expected POLYGONS block");
  if (list_len != 4 * t) fail(path, "only triangle polygons are supported");
  data.triangles.resize(t);
  for (auto& tri : data.triangles) {
    int arity = 0;
    in >> arity >> tri[0] >> tri[1] >> tri[2];
    if (!in || arity != 3) fail(path, "only triangle polygons are supported");
  }

  if (in >> tag) {
    if (tag != "POINT_DATA") fail(path, "expected POINT_DATA block");
    int np = 0;
    in >> np;
    if (np != n) fail(path, "POINT_DATA size mismatch");
    std::string name, type;
    int comps = 0;
    while (in >> tag) {
      if (tag != "SCALARS") fail(path, "expected SCALARS block");
      in >> name >> type >> comps;
      if (!in || comps != 1) fail(path, "expected scalar fields");
      std::string lut, lut_name;
      in >> lut >> lut_name;
      if (lut != "LOOKUP_TABLE") fail(path, "expected LOOKUP_TABLE line");
      Eigen::VectorXd values(n);
      for (int i = 0; i < n; ++i) in >> values[i];
      if (!in) fail(path, "truncated SCALARS block");
      data.fields.emplace_back(name, std::move(values));
    }
  }
  return data;
}

void write_obj(const std::string& path, const TriMesh& m,
               const Eigen::VectorXd& u, double epsilon) {
  if (u.size() != 0 && u.size() != m.n_vertices())
    fail(path, "displacement does not match the vertex count");
  std::ofstream out = open_out(path);
  out << "# triangulated membrane surface\n";
  for (int i = 0; i < m.n_vertices(); ++i) {
    Vec3 p = m.vertices[static_cast<std::size_t>(i)];
    if (u.size() != 0) p += epsilon * u[i] * normal(m.surface, p);
    out << "v " << format_double(p[0]) << ' ' << format_double(p[1]) << ' '
        << format_double(p[2]) << '\n';
  }
  for (const auto& t : m.triangles)
    out << "f " << t[0] + 1 << ' ' << t[1] + 1 << ' ' << t[2] + 1 << '\n';
  if (!out) fail(path, "write failed");
}

ObjData read_obj(const std::string& path) {
  std::ifstream in = open_in(path);
  ObjData data;
  std::string line;
  int lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    std::istringstream ls(line);
    std::string kind;
    if (!(ls >> kind) || kind[0] == '#') continue;
    if (kind == "v") {
      Vec3 p;
      if (!(ls >> p[0] >> p[1] >> p[2]))
        fail(path, "line " + std::to_string(lineno) + ": bad vertex");
      data.points.push_back(p);
    } else if (kind == "f") {
      std::array<int, 3> t{};
      if (!(ls >> t[0] >> t[1] >> t[2]))
        fail(path, "line " + std::to_string(lineno) + ": bad face");
      for (int& v : t) --v;
      data.triangles.push_back(t);
    } else {
      fail(path, "line " + std::to_string(lineno) + ": unsupported element '" +
                     kind + "'");
    }
  }
  return data;
}

void write_csv(const std::string& path, const std::vector<std::string>& header,
               const std::vector<std::vector<double>>& rows) {
  std::ofstream out = open_out(path);
  for (std::size_t i = 0; i < header.size(); ++i)
    out << header[i] << (i + 1 < header.size() ? "," : "");
  out << '\n';
  for (const auto& row : rows) {
    if (row.size() != header.size()) fail(path, "row width mismatch");
    for (std::size_t i = 0; i < row.size(); ++i)
      out << format_double(row[i]) << (i + 1 < row.size() ? "," : "");
    out << '\n';
  }
  if (!out) fail(path, "write failed");
}

CsvData read_csv(const std::string& path) {
  std::ifstream in = open_in(path);
  CsvData data;
  std::string line;
  int lineno = 0;
  auto split = [](const std::string& s) {
    std::vector<std::string> cells;
    std::string cell;
    std::istringstream ls(s);
    while (std::getline(ls, cell, ',')) {
      if (!cell.empty() && cell.back() == '\r') cell.pop_back();
      cells.push_back(cell);
    }
    return cells;
  };
  while (std::getline(in, line)) {
    ++lineno;
    if (line.empty() || (line.size() == 1 && line[0] == '\r')) continue;
    const std::vector<std::string> cells = split(line);
    if (lineno == 1) {
      data.header = cells;
      continue;
    }
    std::vector<double> row;
    for (const std::string& c : cells) {
      try {
        std::size_t used = 0;
        row.push_back(std::stod(c, &used));
        if (used != c.size()) throw std::invalid_argument(c);
      } catch (const std::exception&) {
        fail(path, "line " + std::to_string(lineno) + ": bad number '" + c +
                       "'");
      }
    }
    if (row.size() != data.header.size())
      fail(path, "line " + std::to_string(lineno) + ": row width mismatch");
    data.rows.push_back(std::move(row));
  }
  if (data.header.empty()) fail(path, "missing header row");
  return data;
}

}  // namespace membrane
