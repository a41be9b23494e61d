#pragma once

// Binary checkpoint: magic "STKN", format version, architecture hash, loss
// weights, the model configuration as JSON and every named parameter tensor.
// Layout is described in docs/checkpoint.md.

#include "strokenet/model.hpp"

#include <memory>
#include <stdexcept>

namespace strokenet {

inline constexpr std::uint32_t kCheckpointVersion = 1;

struct IncompatibleCheckpoint : std::runtime_error {
  using std::runtime_error::runtime_error;
};

void save_checkpoint(const Model& model, const fs::path& path);

// Rebuilds the model recorded in the file.
std::unique_ptr<Model> load_checkpoint(const fs::path& path);

// Loads parameters into an existing model; throws IncompatibleCheckpoint
// (naming both hashes) when the architectures differ.
void load_checkpoint_into(Model& model, const fs::path& path);

// FNV-1a over the raw file bytes, hex encoded.
std::string file_digest(const fs::path& path);

}  // namespace strokenet
