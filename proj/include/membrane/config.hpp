#pragma once

#include <map>
#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

#include "membrane/problems.hpp"

namespace membrane {

// Parse failure with the offending line of the config text.
class ConfigError : public std::runtime_error {
 public:
  ConfigError(int line, const std::string& what)
      : std::runtime_error("config line " + std::to_string(line) + ": " + what),
        line_(line) {}
  int line() const { return line_; }

 private:
  int line_;
};

// Key-value configuration in a TOML-style subset: `[section]` headers,
// `key = value` entries, `#` comments; values are numbers, double-quoted
// strings, or single-line arrays of numbers, strings, or number arrays.
class ConfigTable {
 public:
  static ConfigTable parse(const std::string& text);
  static ConfigTable load(const std::string& path);

  bool has_section(const std::string& section) const;
  bool has(const std::string& section, const std::string& key) const;

  double number(const std::string& section, const std::string& key) const;
  double number_or(const std::string& section, const std::string& key,
                   double fallback) const;
  int integer(const std::string& section, const std::string& key) const;
  int integer_or(const std::string& section, const std::string& key,
                 int fallback) const;
  std::string str(const std::string& section, const std::string& key) const;
  std::string str_or(const std::string& section, const std::string& key,
                     const std::string& fallback) const;
  std::vector<double> numbers(const std::string& section,
                              const std::string& key) const;
  std::vector<std::vector<double>> number_rows(const std::string& section,
                                               const std::string& key) const;
  std::vector<std::string> strings(const std::string& section,
                                   const std::string& key) const;
  std::vector<int> integers_or(const std::string& section,
                               const std::string& key,
                               std::vector<int> fallback) const;

 private:
  struct Value {
    enum class Kind { Number, String, NumberList, NumberRows, StringList };
    Kind kind = Kind::Number;
    double num = 0.0;
    std::string text;
    std::vector<double> list;
    std::vector<std::vector<double>> rows;
    std::vector<std::string> texts;
    int line = 0;
  };

  const Value& get(const std::string& section, const std::string& key) const;
  std::map<std::string, std::map<std::string, Value>> sections_;
};

// One experiment definition; unset parts keep documented defaults.
struct RunConfig {
  SurfaceSpec surface;  // sphere, R = kappa = 1, sigma = 0 by default
  int level = 4;        // sphere refinement level
  int n_theta = 32;     // torus grid
  int n_phi = 64;
  std::optional<LoadSpec> loads;
  std::optional<ConstraintSpec> constraints;
  double tau = 0.0;  // 0 means default_tau(surface)
  double tol = 1e-10;
  std::string out_dir = "out";
  double epsilon = 0.2;  // deformed-surface visualization scale
  std::vector<std::string> formats = {"vtk", "obj", "csv"};
  double sweep_beta1 = 5.0;
  double sweep_beta2 = -5.0;
  int sweep_samples = 64;
  std::vector<int> verify_levels = {2, 3};
  int verify_points = 2048;

  double effective_tau() const;
};

RunConfig run_config(const ConfigTable& table);
RunConfig load_run_config(const std::string& path);

}  // namespace membrane
