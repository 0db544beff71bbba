#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <filesystem>
#include <fstream>
#include <numbers>
#include <sstream>

#include "membrane/commands.hpp"
#include "membrane/config.hpp"
#include "membrane/io.hpp"

using namespace membrane;
namespace fs = std::filesystem;

namespace {

fs::path temp_dir() {
  static int counter = 0;
  const fs::path d =
      fs::temp_directory_path() /
      ("membrane-test-" + std::to_string(::getpid()) + "-" +
       std::to_string(counter++));
  fs::create_directories(d);
  return d;
}

std::string slurp(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

void spit(const fs::path& p, const std::string& text) {
  std::ofstream out(p, std::ios::binary);
  out << text;
}

SurfaceSpec sphere() {
  SurfaceSpec s;
  s.kind = SurfaceKind::Sphere;
  return s;
}

}  // namespace

TEST_CASE("config parser: sections, scalars, arrays, comments") {
  const ConfigTable t = ConfigTable::parse(R"(
# experiment setup
[surface]
kind = "sphere"     # trailing comment
radius = 2.5
sigma = 25

[loads]
points = [[0, 0, 1], [1, 0, 0]]
beta = [5, -5]

[output]
formats = ["csv", "vtk"]
dir = "results/run # 1"

[numeric]
level = 5
)");
  CHECK(t.has_section("surface"));
  CHECK(!t.has_section("constraints"));
  CHECK(t.str("surface", "kind") == "sphere");
  CHECK(t.number("surface", "radius") == 2.5);
  CHECK(t.integer("numeric", "level") == 5);
  CHECK(t.number_or("numeric", "missing", 7.5) == 7.5);
  CHECK(t.integer_or("numeric", "missing", 3) == 3);
  CHECK(t.str_or("output", "missing", "fallback") == "fallback");
  // '#' inside quotes is content, not comment
  CHECK(t.str("output", "dir") == "results/run # 1");

  const auto rows = t.number_rows("loads", "points");
  REQUIRE(rows.size() == 2);
  CHECK(rows[0] == std::vector<double>{0.0, 0.0, 1.0});
  CHECK(rows[1] == std::vector<double>{1.0, 0.0, 0.0});
  CHECK(t.numbers("loads", "beta") == std::vector<double>{5.0, -5.0});
  CHECK(t.strings("output", "formats") ==
        std::vector<std::string>{"csv", "vtk"});
}

TEST_CASE("config parser: string escapes and integer strictness") {
  const ConfigTable t = ConfigTable::parse(
      "[a]\n"
      "quoted = \"say \\\"hi\\\" \\\\ done\"\n"
      "n = 4\n"
      "x = 4.25\n");
  CHECK(t.str("a", "quoted") == "say \"hi\" \\ done");
  CHECK(t.integer("a", "n") == 4);
  CHECK_THROWS_AS((void)t.integer("a", "x"), ConfigError);
  CHECK_THROWS_AS((void)t.number("a", "quoted"), ConfigError);
  CHECK_THROWS_AS((void)t.str("a", "n"), ConfigError);
  CHECK_THROWS_AS((void)t.number("a", "missing"), ConfigError);
  CHECK_THROWS_AS((void)t.number("b", "n"), ConfigError);
}

TEST_CASE("config parser: malformed input reports the line") {
  auto line_of = [](const std::string& text) {
    try {
      (void)ConfigTable::parse(text);
    } catch (const ConfigError& e) {
      return e.line();
    }
    return -1;
  };
  CHECK(line_of("[a]\nkey value\n") == 2);           // missing '='
  CHECK(line_of("[a\nx = 1\n") == 1);                // unterminated header
  CHECK(line_of("[a]\nx = \"open\n") == 2);          // unterminated string
  CHECK(line_of("[a]\nx = [1, 2\n") == 2);           // unterminated array
  CHECK(line_of("[a]\nx = 1 2\n") == 2);             // trailing characters
  CHECK(line_of("x = 1\n") == 1);                    // entry before section
  CHECK(line_of("[a]\nx = nope\n") == 2);            // not a value
}

TEST_CASE("run config: defaults and the two problem blocks") {
  const RunConfig d = run_config(ConfigTable::parse(""));
  CHECK(d.surface.kind == SurfaceKind::Sphere);
  CHECK(d.surface.radius == 1.0);
  CHECK(d.level == 4);
  CHECK(d.tau == 0.0);
  CHECK(d.effective_tau() ==
        doctest::Approx(1.0 / std::numbers::pi).epsilon(1e-14));
  CHECK(d.out_dir == "out");
  CHECK(!d.loads.has_value());
  CHECK(!d.constraints.has_value());
  CHECK(d.verify_levels == std::vector<int>{2, 3});

  const RunConfig fl = run_config(ConfigTable::parse(R"(
[surface]
kind = "sphere"
radius = 2
sigma = 25

[loads]
points = [[0, 0, 2], [2, 0, 0]]
beta = [5, -5]

[mesh]
level = 5

[numeric]
tol = 1e-9
)"));
  REQUIRE(fl.loads.has_value());
  CHECK(fl.loads->points.size() == 2);
  CHECK(fl.loads->magnitudes[1] == -5.0);
  CHECK(fl.level == 5);
  CHECK(fl.tol == 1e-9);
  CHECK(fl.surface.sigma == 25.0);

  const RunConfig ct = run_config(ConfigTable::parse(R"(
[surface]
kind = "torus"

[constraints]
points = [[2.41, 0, 0], [0, 2.41, 0]]
alpha = [1, -1]
delta = 1e-5
rho = 1e-7
)"));
  CHECK(ct.surface.kind == SurfaceKind::CliffordTorus);
  REQUIRE(ct.constraints.has_value());
  CHECK(ct.constraints->delta == 1e-5);
  CHECK(ct.constraints->rho == 1e-7);
  CHECK(ct.constraints->targets[0] == 1.0);

  CHECK_THROWS_AS((void)run_config(ConfigTable::parse(
                      "[surface]\nkind = \"klein\"\n")),
                  ConfigError);
  CHECK_THROWS_AS((void)run_config(ConfigTable::parse(R"(
[loads]
points = [[0, 0, 1]]
beta = [5]

[constraints]
points = [[2.41, 0, 0]]
alpha = [1]
)")),
                  ConfigError);
}

TEST_CASE("double formatting survives a round trip") {
  for (double v : {0.0, 1.0, -1.0 / 3.0, 6.283185307179586,
                   1.2345678912345678e-17, -9.87e300}) {
    const std::string s = format_double(v);
    CHECK(std::stod(s) == v);
  }
}

TEST_CASE("csv writes are exact and bit-stable") {
  const fs::path dir = temp_dir();
  const std::vector<std::string> header = {"theta", "energy"};
  const std::vector<std::vector<double>> rows = {
      {0.0, -12.5}, {std::numbers::pi / 3, 1.0 / 3.0}, {2.5e-8, -7.1e9}};
  write_csv((dir / "a.csv").string(), header, rows);
  write_csv((dir / "b.csv").string(), header, rows);
  CHECK(slurp(dir / "a.csv") == slurp(dir / "b.csv"));

  const CsvData back = read_csv((dir / "a.csv").string());
  CHECK(back.header == header);
  REQUIRE(back.rows.size() == rows.size());
  for (size_t i = 0; i < rows.size(); ++i)
    for (size_t j = 0; j < rows[i].size(); ++j)
      CHECK(back.rows[i][j] == rows[i][j]);  // bit-exact via %.17g

  spit(dir / "bad.csv", "a,b\n1.5\n");
  CHECK_THROWS_AS((void)read_csv((dir / "bad.csv").string()),
                  std::runtime_error);
  spit(dir / "bad2.csv", "a,b\n1.5,zzz\n");
  CHECK_THROWS_AS((void)read_csv((dir / "bad2.csv").string()),
                  std::runtime_error);
}

TEST_CASE("vtk round trip preserves mesh and fields") {
  const fs::path dir = temp_dir();
  const TriMesh m = build_sphere(sphere(), 1);
  Eigen::VectorXd u(m.n_vertices()), w(m.n_vertices());
  for (int i = 0; i < m.n_vertices(); ++i) {
    u[i] = std::sin(0.1 * i);
    w[i] = std::cos(0.2 * i) * 1e-7;
  }
  const std::string path = (dir / "fields.vtk").string();
  write_vtk(path, m, {{"u", u}, {"w", w}});

  const VtkData back = read_vtk(path);
  REQUIRE(back.points.size() == static_cast<size_t>(m.n_vertices()));
  REQUIRE(back.triangles.size() == static_cast<size_t>(m.n_triangles()));
  for (int i = 0; i < m.n_vertices(); ++i)
    CHECK((back.points[i] - m.vertices[i]).norm() == 0.0);
  for (int t = 0; t < m.n_triangles(); ++t)
    CHECK(back.triangles[t] == m.triangles[t]);
  REQUIRE(back.fields.size() == 2);
  CHECK(back.fields[0].first == "u");
  CHECK((back.fields[0].second - u).norm() == 0.0);
  CHECK((back.fields[1].second - w).norm() == 0.0);

  spit(dir / "bad.vtk", "not a vtk file\n");
  CHECK_THROWS_AS((void)read_vtk((dir / "bad.vtk").string()),
                  std::runtime_error);
}

TEST_CASE("obj export applies the normal displacement") {
  const fs::path dir = temp_dir();
  const TriMesh m = build_sphere(sphere(), 1);
  const Eigen::VectorXd u = Eigen::VectorXd::Ones(m.n_vertices());
  const std::string path = (dir / "deformed.obj").string();
  write_obj(path, m, u, 0.25);
  const ObjData back = read_obj(path);
  REQUIRE(back.points.size() == static_cast<size_t>(m.n_vertices()));
  REQUIRE(back.triangles.size() == static_cast<size_t>(m.n_triangles()));
  // unit sphere, u = 1, eps = 0.25: all vertices at radius 1.25
  for (const Vec3& p : back.points)
    CHECK(p.norm() == doctest::Approx(1.25).epsilon(1e-12));
  for (int t = 0; t < m.n_triangles(); ++t)
    CHECK(back.triangles[t] == m.triangles[t]);

  // undeformed export keeps the vertices
  write_obj((dir / "plain.obj").string(), m);
  const ObjData plain = read_obj((dir / "plain.obj").string());
  for (int i = 0; i < m.n_vertices(); ++i)
    CHECK((plain.points[i] - m.vertices[i]).norm() <= 1e-15);

  spit(dir / "bad.obj", "v 1 2\n");
  CHECK_THROWS_AS((void)read_obj((dir / "bad.obj").string()),
                  std::runtime_error);
}

TEST_CASE("command driver maps outcomes to exit codes") {
  const fs::path dir = temp_dir();
  std::ostringstream log;

  // valid run: mesh export with defaults at a coarse level
  spit(dir / "mesh.toml", "[mesh]\nlevel = 1\n");
  CliOverrides ov;
  ov.out_dir = (dir / "out").string();
  CHECK(run_command("mesh", (dir / "mesh.toml").string(), ov, log) == kOk);
  CHECK(fs::exists(dir / "out" / "report.json"));

  // malformed config
  spit(dir / "broken.toml", "[surface\nkind=\"sphere\"\n");
  CHECK(run_command("mesh", (dir / "broken.toml").string(), ov, log) ==
        kParseError);

  // precondition: tension on the torus
  spit(dir / "badsurf.toml",
       "[surface]\nkind = \"torus\"\nsigma = 1.0\n[mesh]\nn_theta = "
       "8\nn_phi = 16\n");
  CHECK(run_command("mesh", (dir / "badsurf.toml").string(), ov, log) ==
        kPrecondition);

  // precondition: stabilization weight below its lower bound
  spit(dir / "badtau.toml",
       "[mesh]\nlevel = 1\n[numeric]\ntau = 0.01\n[loads]\npoints = [[0, 0, "
       "1]]\nbeta = [5]\n");
  CHECK(run_command("solve-forces", (dir / "badtau.toml").string(), ov, log) ==
        kPrecondition);

  // unknown subcommand
  CHECK(run_command("frobnicate", "", ov, log) == kParseError);

  // missing problem block for the solve commands
  spit(dir / "noloads.toml", "[mesh]\nlevel = 1\n");
  CHECK(run_command("solve-forces", (dir / "noloads.toml").string(), ov,
                    log) == kPrecondition);
}

TEST_CASE("solve-forces command writes the advertised artifacts") {
  const fs::path dir = temp_dir();
  std::ostringstream log;
  spit(dir / "run.toml", R"(
[mesh]
level = 2

[loads]
points = [[0, 0, 1], [1, 0, 0]]
beta = [5, -5]
)");
  CliOverrides ov;
  ov.out_dir = (dir / "out").string();
  REQUIRE(run_command("solve-forces", (dir / "run.toml").string(), ov, log) ==
          kOk);
  for (const char* name : {"report.json", "fields.vtk", "deformed.obj",
                           "forces.csv"})
    CHECK(fs::exists(dir / "out" / name));

  const CsvData csv = read_csv((dir / "out" / "forces.csv").string());
  REQUIRE(csv.rows.size() == 2);
  CHECK(csv.header ==
        std::vector<std::string>{"x", "y", "z", "beta", "u"});
  CHECK(csv.rows[0][3] == 5.0);
  CHECK(csv.rows[1][3] == -5.0);

  // determinism: the same run produces byte-identical artifacts
  const std::string first = slurp(dir / "out" / "forces.csv");
  CliOverrides ov2;
  ov2.out_dir = (dir / "out2").string();
  REQUIRE(run_command("solve-forces", (dir / "run.toml").string(), ov2, log) ==
          kOk);
  CHECK(slurp(dir / "out2" / "forces.csv") == first);
  CHECK(slurp(dir / "out2" / "fields.vtk") ==
        slurp(dir / "out" / "fields.vtk"));
}
