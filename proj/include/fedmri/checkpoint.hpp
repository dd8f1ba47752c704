#pragma once

#include <filesystem>

#include "fedmri/recon.hpp"

namespace fedmri::recon {

// One TensorFile per parameter plus manifest.json listing
// {name, file, partition, role, subnet, stage, shape} in name order.
void save_checkpoint(const ParameterSet& params, const std::filesystem::path& dir);
ParameterSet load_checkpoint(const std::filesystem::path& dir);

}  // namespace fedmri::recon
