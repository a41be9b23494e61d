#pragma once

// INI run configuration. Sections: [model], [labels], [loss], [train],
// [inference] and any number of [subset.NAME] generator subsets. Unknown
// sections and keys are errors. The README lists every key.

#include "strokenet/model.hpp"
#include "strokenet/synth.hpp"
#include "strokenet/train.hpp"

#include <stdexcept>
#include <string>
#include <vector>

namespace strokenet {

struct ConfigError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

struct RunConfig {
  ModelConfig model;
  TrainConfig train;
  std::vector<GenConfig> subsets;  // file order
};

RunConfig parse_config(const std::string& text, const std::string& origin = "<string>");
RunConfig load_config(const fs::path& path);

}  // namespace strokenet
