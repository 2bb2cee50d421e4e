#pragma once

#include "dlat/config.hpp"

#include <json.hpp>

#include <exception>
#include <string>
#include <utility>
#include <vector>

namespace dlat {

struct RunManifest {
  nlohmann::json config;                                  // normalized echo
  std::vector<std::pair<std::string, std::string>> files; // (name in output_dir, sha256)
  double wall_seconds = 0.0;
  nlohmann::json versions;
  nlohmann::json diagnostics = nlohmann::json::object();
  std::string status = "ok";
  std::string error;
  int exit_code = 0;

  nlohmann::json to_json() const;
};

/// 2 for configuration problems, 3 for numerical failures, 1 otherwise.
int exit_code_for(const std::exception &e);

/// Runs the configured experiment, writes its artifacts and manifest.json into
/// cfg.output_dir. Module errors are caught and recorded in the manifest.
RunManifest run_experiment(const ExperimentConfig &cfg);

} // namespace dlat
