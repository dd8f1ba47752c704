#include "fedmri/json_io.hpp"

#include <algorithm>

#include "fedmri/errors.hpp"

namespace fedmri {

using nlohmann::json;

void reject_unknown_keys(const json& obj, std::initializer_list<const char*> allowed, const std::string& context) {
  if (!obj.is_object()) throw ConfigError(context + ": expected a JSON object");
  for (auto it = obj.begin(); it != obj.end(); ++it) {
    const bool known = std::any_of(allowed.begin(), allowed.end(), [&](const char* k) { return it.key() == k; });
    if (!known) throw ConfigError(context + ": unknown key \"" + it.key() + "\"");
  }
}

double json_number(const json& obj, const char* key, const std::string& context) {
  const json& v = obj.at(key);
  if (!v.is_number()) throw ConfigError(context + ": \"" + key + "\" must be a number");
  return v.get<double>();
}

std::size_t json_count(const json& obj, const char* key, const std::string& context) {
  const json& v = obj.at(key);
  if (!v.is_number_integer() || v.get<long long>() < 0)
    throw ConfigError(context + ": \"" + key + "\" must be a non-negative integer");
  return v.get<std::size_t>();
}

std::string json_string(const json& obj, const char* key, const std::string& context) {
  const json& v = obj.at(key);
  if (!v.is_string()) throw ConfigError(context + ": \"" + key + "\" must be a string");
  return v.get<std::string>();
}

bool json_bool(const json& obj, const char* key, const std::string& context) {
  const json& v = obj.at(key);
  if (!v.is_boolean()) throw ConfigError(context + ": \"" + key + "\" must be a boolean");
  return v.get<bool>();
}

json mask_spec_to_json(const sim::MaskSpec& spec) {
  return {{"kind", sim::to_string(spec.kind)},
          {"acceleration", spec.acceleration},
          {"center_fraction", spec.center_fraction},
          {"height", spec.height},
          {"width", spec.width}};
}

sim::MaskSpec mask_spec_from_json(const json& obj, const std::string& context) {
  reject_unknown_keys(obj, {"kind", "acceleration", "center_fraction", "height", "width"}, context);
  if (!obj.contains("kind") || !obj.contains("acceleration"))
    throw ConfigError(context + ": mask needs \"kind\" and \"acceleration\"");
  sim::MaskSpec spec;
  spec.kind = sim::mask_kind_from_string(json_string(obj, "kind", context));
  spec.acceleration = json_number(obj, "acceleration", context);
  if (obj.contains("center_fraction")) spec.center_fraction = json_number(obj, "center_fraction", context);
  if (obj.contains("height")) spec.height = json_count(obj, "height", context);
  if (obj.contains("width")) spec.width = json_count(obj, "width", context);
  return spec;
}

json client_profile_to_json(const sim::ClientProfile& p) {
  return {{"client_id", p.client_id},
          {"phantom_style", sim::to_string(p.phantom_style)},
          {"intensity_mean", p.intensity_mean},
          {"intensity_std", p.intensity_std},
          {"texture_noise_std", p.texture_noise_std},
          {"mask", mask_spec_to_json(p.mask_spec)},
          {"n_train", p.n_train},
          {"n_test", p.n_test},
          {"min_shapes", p.min_shapes},
          {"max_shapes", p.max_shapes}};
}

sim::ClientProfile client_profile_from_json(const json& obj, const std::string& context) {
  reject_unknown_keys(obj,
                      {"client_id", "phantom_style", "intensity_mean", "intensity_std", "texture_noise_std", "mask",
                       "n_images", "n_train", "n_test", "min_shapes", "max_shapes"},
                      context);
  sim::ClientProfile p;
  if (!obj.contains("client_id")) throw ConfigError(context + ": missing \"client_id\"");
  p.client_id = json_string(obj, "client_id", context);
  if (obj.contains("phantom_style")) p.phantom_style = sim::phantom_style_from_string(json_string(obj, "phantom_style", context));
  if (obj.contains("intensity_mean")) p.intensity_mean = json_number(obj, "intensity_mean", context);
  if (obj.contains("intensity_std")) p.intensity_std = json_number(obj, "intensity_std", context);
  if (obj.contains("texture_noise_std")) p.texture_noise_std = json_number(obj, "texture_noise_std", context);
  if (obj.contains("mask")) p.mask_spec = mask_spec_from_json(obj.at("mask"), context + ".mask");

  const bool has_train = obj.contains("n_train"), has_test = obj.contains("n_test");
  if (has_train != has_test) throw ConfigError(context + ": give both \"n_train\" and \"n_test\", or neither");
  if (has_train && obj.contains("n_images"))
    throw ConfigError(context + ": \"n_images\" conflicts with explicit \"n_train\"/\"n_test\"");
  if (has_train) {
    p.n_train = json_count(obj, "n_train", context);
    p.n_test = json_count(obj, "n_test", context);
  } else {
    const std::size_t n = obj.contains("n_images") ? json_count(obj, "n_images", context) : 40;
    const auto split = sim::split_7_3(n);
    p.n_train = split.train;
    p.n_test = split.test;
  }
  if (p.n_train + p.n_test < 2) throw ConfigError(context + ": a client needs at least two images");
  if (p.n_train == 0) throw ConfigError(context + ": a client needs at least one training image");
  if (p.intensity_std < 0.0 || p.texture_noise_std < 0.0) throw ConfigError(context + ": standard deviations must be >= 0");
  if (obj.contains("min_shapes")) p.min_shapes = static_cast<int>(json_count(obj, "min_shapes", context));
  if (obj.contains("max_shapes")) p.max_shapes = static_cast<int>(json_count(obj, "max_shapes", context));
  if (p.max_shapes < p.min_shapes) throw ConfigError(context + ": max_shapes < min_shapes");
  return p;
}

}  // namespace fedmri
