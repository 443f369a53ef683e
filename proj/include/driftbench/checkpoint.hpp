#pragma once

#include <filesystem>

#include "driftbench/model.hpp"

namespace driftbench {

// Binary model snapshot: magic line, little-endian u32 header length, JSON
// header (configs plus a tensor directory), then raw little-endian float32
// tensor data in directory order. Same model, same bytes.
void save_model(const Model<float>& model, const std::filesystem::path& path);
Model<float> load_model(const std::filesystem::path& path);

}  // namespace driftbench
