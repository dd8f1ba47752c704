#pragma once

#include <filesystem>
#include <json.hpp>
#include <string>
#include <vector>

#include "fedmri/federated.hpp"

namespace fedmri {

/// Reads an experiment document. Missing keys keep the FLConfig defaults
/// (rounds 50, local_epochs 10, lr 1e-4, batch 8, mu 100, ...).
/// Malformed JSON -> ParseError with the 1-based line; unknown keys, type
/// mismatches and violated invariants -> ConfigError.
fed::ExperimentConfig parse_config(const std::filesystem::path& path);
fed::ExperimentConfig parse_config_text(const std::string& text);
fed::ExperimentConfig config_from_json(const nlohmann::json& doc);

/// Fully specified document; config_from_json(config_to_json(c)) == c.
nlohmann::json config_to_json(const fed::ExperimentConfig& config);

/// Desk-scale scenarios: 40 images per client at 64×64, 10 rounds of 2
/// local epochs. Throws ConfigError for an unknown name.
fed::ExperimentConfig preset(const std::string& name);
std::vector<std::string> preset_names();

}  // namespace fedmri
