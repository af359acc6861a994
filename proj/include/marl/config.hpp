#pragma once

// Experiment configuration: a small sectioned key=value format with strict
// validation (unknown sections/keys and malformed values are rejected with
// file:line diagnostics) and a resolved-snapshot writer whose output parses
// back to the identical configuration.

#include "marl/envs.hpp"
#include "marl/trainer.hpp"

#include <iosfwd>
#include <string>
#include <vector>

namespace marl {

struct ExperimentConfig {
  EnvConfig env = climbing_game();
  TrainerConfig trainer;
  std::vector<std::uint64_t> seeds{1, 2, 3, 4, 5};
  std::string out_dir;  // empty: resolved by the command line / environment
  bool timing = false;  // measured wall_ms column instead of the 0 placeholder
};

// `origin` names the source in diagnostics (file path or a test label).
ExperimentConfig parse_config_text(const std::string& text,
                                   const std::string& origin);
ExperimentConfig parse_config(const std::string& path);

// Full snapshot with every default made explicit.
void write_resolved_config(std::ostream& out, const ExperimentConfig& cfg);

}  // namespace marl
