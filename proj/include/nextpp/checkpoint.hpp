#pragma once

#include <filesystem>
#include <string>

#include "nextpp/model.hpp"

namespace nextpp {

inline constexpr int kCheckpointFormatVersion = 1;

// JSON container: format tag, version, shape hash, full model config and
// every named parameter tensor. Doubles are written in shortest
// round-trip form, so save followed by load is bit-exact.
std::string checkpoint_to_string(const Model& model);
Model checkpoint_from_string(const std::string& text);

void save_checkpoint(const Model& model, const std::filesystem::path& path);
Model load_checkpoint(const std::filesystem::path& path);
// Also requires the stored shapes to match `expected`.
Model load_checkpoint(const std::filesystem::path& path, const ModelConfig& expected);

}  // namespace nextpp
