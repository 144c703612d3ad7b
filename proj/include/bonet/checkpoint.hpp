#ifndef BONET_CHECKPOINT_HPP
#define BONET_CHECKPOINT_HPP

#include <filesystem>

#include "bonet/model.hpp"

namespace bonet {

// Versioned binary container: magic + version, config as JSON, then named
// tensors with shape and little-endian float32 payloads, closed by an
// FNV-1a checksum over everything before it.
void save_checkpoint(const Model<float>& model, const std::filesystem::path& path);
Model<float> load_checkpoint(const std::filesystem::path& path);

}  // namespace bonet

#endif
