#pragma once

#include <initializer_list>
#include <json.hpp>
#include <string>

#include "fedmri/mri_sim.hpp"

namespace fedmri {

// Throws ConfigError naming the first key of `obj` not in `allowed`.
void reject_unknown_keys(const nlohmann::json& obj, std::initializer_list<const char*> allowed,
                         const std::string& context);

// Typed field readers: ConfigError on a type mismatch, naming the key.
double json_number(const nlohmann::json& obj, const char* key, const std::string& context);
std::size_t json_count(const nlohmann::json& obj, const char* key, const std::string& context);
std::string json_string(const nlohmann::json& obj, const char* key, const std::string& context);
bool json_bool(const nlohmann::json& obj, const char* key, const std::string& context);

nlohmann::json mask_spec_to_json(const sim::MaskSpec& spec);
// Keys: kind (required), acceleration (required), center_fraction, height, width.
sim::MaskSpec mask_spec_from_json(const nlohmann::json& obj, const std::string& context);

nlohmann::json client_profile_to_json(const sim::ClientProfile& profile);
// n_train/n_test default to a 7:3 split of n_images (default 40).
sim::ClientProfile client_profile_from_json(const nlohmann::json& obj, const std::string& context);

}  // namespace fedmri
