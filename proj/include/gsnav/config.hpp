#pragma once

#include <string>

#include "gsnav/sim.hpp"

namespace gsnav {

// Everything a run needs, with defaults matching the shipped parameter set.
// Every field has a config-file key; command-line flags override the file,
// which overrides the defaults.
struct RunConfig {
  std::string scene_path;
  std::string out_dir = "out";
  uint64_t seed = 0;
  std::string planner_kind = "mock";  // mock | remote
  std::string planner_endpoint = "http://127.0.0.1:8080/v1/chat/completions";
  std::string planner_model = "default";
  EpisodeConfig episode;
};

// Applies a JSON config on top of cfg. Unknown keys anywhere in the document
// are rejected with std::invalid_argument naming the offender.
void apply_config_text(RunConfig& cfg, const std::string& json_text);

RunConfig load_run_config(const std::string& path);

}  // namespace gsnav
