#include "membrane/config.hpp"

#include <cctype>
#include <cmath>
#include <fstream>
#include <sstream>

namespace membrane {

namespace {

// Cursor over one logical line of config text.
struct LineCursor {
  const std::string& s;
  std::size_t pos = 0;
  int line;

  void skip_ws() {
    while (pos < s.size() && (s[pos] == ' ' || s[pos] == '\t')) ++pos;
  }
  bool done() {
    skip_ws();
    return pos >= s.size();
  }
  char peek() {
    skip_ws();
    return pos < s.size() ? s[pos] : '\0';
  }
  [[noreturn]] void fail(const std::string& what) const {
    throw ConfigError(line, what);
  }
};

std::string parse_quoted(LineCursor& c) {
  ++c.pos;  // opening quote
  std::string out;
  while (c.pos < c.s.size() && c.s[c.pos] != '"') {
    char ch = c.s[c.pos];
    if (ch == '\\') {
      ++c.pos;
      if (c.pos >= c.s.size()) c.fail("dangling escape in string");
      ch = c.s[c.pos];
      if (ch != '"' && ch != '\\') c.fail("unsupported escape in string");
    }
    out.push_back(ch);
    ++c.pos;
  }
  if (c.pos >= c.s.size()) c.fail("unterminated string");
  ++c.pos;  // closing quote
  return out;
}

double parse_number(LineCursor& c) {
  const char* begin = c.s.c_str() + c.pos;
  char* end = nullptr;
  const double v = std::strtod(begin, &end);
  if (end == begin) c.fail("expected a number");
  c.pos += static_cast<std::size_t>(end - begin);
  return v;
}

// Strips comments that start outside of quoted strings.
std::string strip_comment(const std::string& line) {
  bool quoted = false;
  for (std::size_t i = 0; i < line.size(); ++i) {
    if (line[i] == '"' && (i == 0 || line[i - 1] != '\\')) quoted = !quoted;
    if (line[i] == '#' && !quoted) return line.substr(0, i);
  }
  return line;
}

std::string trim(const std::string& s) {
  std::size_t a = 0, b = s.size();
  while (a < b && std::isspace(static_cast<unsigned char>(s[a]))) ++a;
  while (b > a && std::isspace(static_cast<unsigned char>(s[b - 1]))) --b;
  return s.substr(a, b - a);
}

}  // namespace

ConfigTable ConfigTable::parse(const std::string& text) {
  ConfigTable table;
  std::istringstream in(text);
  std::string raw;
  std::string section;
  int lineno = 0;
  while (std::getline(in, raw)) {
    ++lineno;
    const std::string line = trim(strip_comment(raw));
    if (line.empty()) continue;
    if (line.front() == '[') {
      if (line.back() != ']')
        throw ConfigError(lineno, "unterminated section header");
      section = trim(line.substr(1, line.size() - 2));
      if (section.empty()) throw ConfigError(lineno, "empty section name");
      table.sections_[section];
      continue;
    }
    const std::size_t eq = line.find('=');
    if (eq == std::string::npos)
      throw ConfigError(lineno, "expected `key = value`");
    const std::string key = trim(line.substr(0, eq));
    if (key.empty()) throw ConfigError(lineno, "empty key");
    if (section.empty())
      throw ConfigError(lineno, "entry outside of any [section]");

    const std::string rest = line.substr(eq + 1);
    LineCursor c{rest, 0, lineno};
    Value v;
    v.line = lineno;
    if (c.done()) c.fail("missing value");
    const char first = c.peek();
    if (first == '"') {
      v.kind = Value::Kind::String;
      v.text = parse_quoted(c);
    } else if (first == '[') {
      ++c.pos;
      if (c.peek() == ']') {
        ++c.pos;
        v.kind = Value::Kind::NumberList;  // empty array: treated as numbers
      } else if (c.peek() == '"') {
        v.kind = Value::Kind::StringList;
        while (true) {
          if (c.peek() != '"') c.fail("expected a string element");
          v.texts.push_back(parse_quoted(c));
          const char sep = c.peek();
          if (sep == ',') {
            ++c.pos;
            continue;
          }
          if (sep == ']') {
            ++c.pos;
            break;
          }
          c.fail("expected `,` or `]` in array");
        }
      } else if (c.peek() == '[') {
        v.kind = Value::Kind::NumberRows;
        while (true) {
          if (c.peek() != '[') c.fail("expected a nested array");
          ++c.pos;
          std::vector<double> row;
          while (c.peek() != ']') {
            row.push_back(parse_number(c));
            if (c.peek() == ',') ++c.pos;
          }
          ++c.pos;
          v.rows.push_back(std::move(row));
          const char sep = c.peek();
          if (sep == ',') {
            ++c.pos;
            continue;
          }
          if (sep == ']') {
            ++c.pos;
            break;
          }
          c.fail("expected `,` or `]` in array");
        }
      } else {
        v.kind = Value::Kind::NumberList;
        while (true) {
          v.list.push_back(parse_number(c));
          const char sep = c.peek();
          if (sep == ',') {
            ++c.pos;
            continue;
          }
          if (sep == ']') {
            ++c.pos;
            break;
          }
          c.fail("expected `,` or `]` in array");
        }
      }
    } else {
      v.kind = Value::Kind::Number;
      v.num = parse_number(c);
    }
    if (!c.done()) c.fail("trailing characters after value");
    table.sections_[section][key] = std::move(v);
  }
  return table;
}

ConfigTable ConfigTable::load(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError(0, "cannot open config file " + path);
  std::ostringstream buf;
  buf << in.rdbuf();
  return parse(buf.str());
}

bool ConfigTable::has_section(const std::string& section) const {
  return sections_.count(section) != 0;
}

bool ConfigTable::has(const std::string& section,
                      const std::string& key) const {
  auto s = sections_.find(section);
  return s != sections_.end() && s->second.count(key) != 0;
}

const ConfigTable::Value& ConfigTable::get(const std::string& section,
                                           const std::string& key) const {
  auto s = sections_.find(section);
  if (s == sections_.end())
    throw ConfigError(0, "missing section [" + section + "]");
  auto k = s->second.find(key);
  if (k == s->second.end())
    throw ConfigError(0, "missing key `" + key + "` in [" + section + "]");
  return k->second;
}

double ConfigTable::number(const std::string& section,
                           const std::string& key) const {
  const Value& v = get(section, key);
  if (v.kind != Value::Kind::Number)
    throw ConfigError(v.line, "`" + key + "` must be a number");
  return v.num;
}

double ConfigTable::number_or(const std::string& section,
                              const std::string& key, double fallback) const {
  return has(section, key) ? number(section, key) : fallback;
}

int ConfigTable::integer(const std::string& section,
                         const std::string& key) const {
  const double v = number(section, key);
  const double r = std::round(v);
  if (std::abs(v - r) > 1e-9 || std::abs(r) > 1e9)
    throw ConfigError(get(section, key).line,
                      "`" + key + "` must be an integer");
  return static_cast<int>(r);
}

int ConfigTable::integer_or(const std::string& section, const std::string& key,
                            int fallback) const {
  return has(section, key) ? integer(section, key) : fallback;
}

std::string ConfigTable::str(const std::string& section,
                             const std::string& key) const {
  const Value& v = get(section, key);
  if (v.kind != Value::Kind::String)
    throw ConfigError(v.line, "`" + key + "` must be a string");
  return v.text;
}

std::string ConfigTable::str_or(const std::string& section,
                                const std::string& key,
                                const std::string& fallback) const {
  return has(section, key) ? str(section, key) : fallback;
}

std::vector<double> ConfigTable::numbers(const std::string& section,
                                         const std::string& key) const {
  const Value& v = get(section, key);
  if (v.kind != Value::Kind::NumberList)
    throw ConfigError(v.line, "`" + key + "` must be a number array");
  return v.list;
}

std::vector<std::vector<double>> ConfigTable::number_rows(
    const std::string& section, const std::string& key) const {
  const Value& v = get(section, key);
  if (v.kind != Value::Kind::NumberRows)
    throw ConfigError(v.line, "`" + key + "` must be an array of arrays");
  return v.rows;
}

std::vector<std::string> ConfigTable::strings(const std::string& section,
                                              const std::string& key) const {
  const Value& v = get(section, key);
  if (v.kind != Value::Kind::StringList)
    throw ConfigError(v.line, "`" + key + "` must be a string array");
  return v.texts;
}

std::vector<int> ConfigTable::integers_or(const std::string& section,
                                          const std::string& key,
                                          std::vector<int> fallback) const {
  if (!has(section, key)) return fallback;
  const Value& v = get(section, key);
  if (v.kind != Value::Kind::NumberList)
    throw ConfigError(v.line, "`" + key + "` must be a number array");
  std::vector<int> out;
  for (double d : v.list) {
    const double r = std::round(d);
    if (std::abs(d - r) > 1e-9)
      throw ConfigError(v.line, "`" + key + "` must hold integers");
    out.push_back(static_cast<int>(r));
  }
  return out;
}

double RunConfig::effective_tau() const {
  return tau > 0.0 ? tau : default_tau(surface);
}

namespace {

std::vector<Vec3> point_rows(const ConfigTable& t, const std::string& section,
                             int line_hint) {
  std::vector<Vec3> pts;
  for (const std::vector<double>& row : t.number_rows(section, "points")) {
    if (row.size() != 3)
      throw ConfigError(line_hint,
                        "[" + section + "] points must be x,y,z triples");
    pts.emplace_back(row[0], row[1], row[2]);
  }
  return pts;
}

}  // namespace

RunConfig run_config(const ConfigTable& t) {
  RunConfig rc;

  const std::string kind = t.str_or("surface", "kind", "sphere");
  if (kind == "sphere") {
    rc.surface.kind = SurfaceKind::Sphere;
  } else if (kind == "torus") {
    rc.surface.kind = SurfaceKind::CliffordTorus;
  } else {
    throw ConfigError(0, "surface kind must be \"sphere\" or \"torus\"");
  }
  rc.surface.radius = t.number_or("surface", "radius", 1.0);
  rc.surface.kappa = t.number_or("surface", "kappa", 1.0);
  rc.surface.sigma = t.number_or("surface", "sigma", 0.0);

  rc.level = t.integer_or("mesh", "level", rc.level);
  rc.n_theta = t.integer_or("mesh", "n_theta", rc.n_theta);
  rc.n_phi = t.integer_or("mesh", "n_phi", rc.n_phi);

  rc.tau = t.number_or("numeric", "tau", 0.0);
  rc.tol = t.number_or("numeric", "tol", rc.tol);
  const double delta = t.number_or("numeric", "delta", 1e-6);
  const double rho = t.number_or("numeric", "rho", 1e-8);

  if (t.has_section("loads") && t.has_section("constraints"))
    throw ConfigError(0, "exactly one problem block: [loads] xor [constraints]");

  if (t.has_section("loads")) {
    LoadSpec loads;
    loads.points = point_rows(t, "loads", 0);
    const std::vector<double> beta = t.numbers("loads", "beta");
    loads.magnitudes =
        Eigen::Map<const Eigen::VectorXd>(beta.data(), beta.size());
    rc.loads = std::move(loads);
  }
  if (t.has_section("constraints")) {
    ConstraintSpec cons;
    cons.points = point_rows(t, "constraints", 0);
    const std::vector<double> alpha = t.numbers("constraints", "alpha");
    cons.targets =
        Eigen::Map<const Eigen::VectorXd>(alpha.data(), alpha.size());
    cons.delta = t.number_or("constraints", "delta", delta);
    cons.rho = t.number_or("constraints", "rho", rho);
    rc.constraints = std::move(cons);
  }

  rc.out_dir = t.str_or("output", "directory", rc.out_dir);
  rc.epsilon = t.number_or("output", "epsilon", rc.epsilon);
  if (t.has("output", "formats")) rc.formats = t.strings("output", "formats");

  rc.sweep_beta1 = t.number_or("sweep", "beta1", rc.sweep_beta1);
  rc.sweep_beta2 = t.number_or("sweep", "beta2", rc.sweep_beta2);
  rc.sweep_samples = t.integer_or("sweep", "samples", rc.sweep_samples);

  rc.verify_levels = t.integers_or("verify", "levels", rc.verify_levels);
  rc.verify_points = t.integer_or("verify", "points", rc.verify_points);
  return rc;
}

RunConfig load_run_config(const std::string& path) {
  return run_config(ConfigTable::load(path));
}

}  // namespace membrane
