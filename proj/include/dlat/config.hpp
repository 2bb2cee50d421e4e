#pragma once

#include "dlat/free_operator.hpp"
#include "dlat/lattice.hpp"

#include <json.hpp>

#include <cstdint>
#include <string>

namespace dlat {

enum class Kind { lap, puiseux, spectrum, evolve, decay, scatter, kg, appendix_a };
std::string to_string(Kind k);
/// "appendix-a" and the other CLI names; throws ConfigError otherwise.
Kind kind_from_string(const std::string &s);

/// A parsed experiment. `normalized` is the config with every default filled
/// in; it is what gets echoed, serialized and compared.
struct ExperimentConfig {
  Kind kind = Kind::lap;
  int L = 0;
  Boundary boundary = Boundary::periodic;
  Potential potential;
  QuadratureSpec quadrature;
  nlohmann::json params;
  std::uint64_t seed = 0;
  std::string output_dir;
  nlohmann::json normalized;
  /// directory that relative file paths resolve against (not compared)
  std::string base_dir;

  LatticeBox box() const { return LatticeBox(L, boundary); }
  double number(const char *key) const;
  /// NaN when the parameter is null.
  double number_or_nan(const char *key) const;
  int integer(const char *key) const;

  friend bool operator==(const ExperimentConfig &a, const ExperimentConfig &b) {
    return a.normalized == b.normalized;
  }
};

/// Strict JSON: unknown keys, missing required fields and type mismatches
/// throw ConfigError naming the key path. Relative potential files resolve
/// against `base_dir`.
ExperimentConfig parse_config(const std::string &text, const std::string &base_dir = "");
ExperimentConfig load_config(const std::string &path);
std::string serialize_config(const ExperimentConfig &cfg);
/// Overrides the seed and keeps the normalized echo in sync.
void set_seed(ExperimentConfig &cfg, std::uint64_t seed);
/// Overrides the output directory and its entry in the normalized echo.
void set_output_dir(ExperimentConfig &cfg, const std::string &dir);

/// Potential file: CSV with header "x1,x2,x3,value".
Potential read_potential_csv(const std::string &path);

} // namespace dlat
