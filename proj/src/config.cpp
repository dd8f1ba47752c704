#include "fedmri/config.hpp"

#include <fstream>
#include <sstream>

#include "fedmri/errors.hpp"
#include "fedmri/json_io.hpp"

namespace fedmri {

using nlohmann::json;

namespace {

std::size_t line_of(const std::string& text, std::size_t byte) {
  std::size_t line = 1;
  for (std::size_t i = 0; i < byte && i < text.size(); ++i)
    if (text[i] == '\n') ++line;
  return line;
}

}  // namespace

fed::ExperimentConfig config_from_json(const json& doc) {
  const std::string ctx = "config";
  reject_unknown_keys(doc,
                      {"algorithm", "clients", "rounds", "local_epochs", "lr", "batch", "mu", "mu_prox",
                       "partition_mode", "contrastive_kind", "aggregation", "joint_local_update",
                       "use_data_consistency", "noise_sigma", "seed", "out_dir"},
                      ctx);
  fed::ExperimentConfig c;
  auto& fl = c.fl;
  if (doc.contains("algorithm")) fl.algorithm = fed::algorithm_from_string(json_string(doc, "algorithm", ctx));
  if (doc.contains("rounds")) fl.rounds = json_count(doc, "rounds", ctx);
  if (doc.contains("local_epochs")) fl.local_epochs = json_count(doc, "local_epochs", ctx);
  if (doc.contains("lr")) fl.lr = json_number(doc, "lr", ctx);
  if (doc.contains("batch")) fl.batch = json_count(doc, "batch", ctx);
  if (doc.contains("mu")) fl.mu = json_number(doc, "mu", ctx);
  if (doc.contains("mu_prox")) fl.mu_prox = json_number(doc, "mu_prox", ctx);
  if (doc.contains("partition_mode"))
    fl.partition_mode = recon::partition_mode_from_string(json_string(doc, "partition_mode", ctx));
  if (doc.contains("contrastive_kind"))
    fl.contrastive_kind = fed::contrastive_kind_from_string(json_string(doc, "contrastive_kind", ctx));
  if (doc.contains("aggregation")) fl.aggregation = fed::aggregation_from_string(json_string(doc, "aggregation", ctx));
  if (doc.contains("joint_local_update")) fl.joint_local_update = json_bool(doc, "joint_local_update", ctx);
  if (doc.contains("seed")) fl.seed = json_count(doc, "seed", ctx);
  if (doc.contains("use_data_consistency")) c.use_data_consistency = json_bool(doc, "use_data_consistency", ctx);
  if (doc.contains("noise_sigma")) c.noise_sigma = json_number(doc, "noise_sigma", ctx);
  if (doc.contains("out_dir")) c.out_dir = json_string(doc, "out_dir", ctx);

  if (!doc.contains("clients") || !doc.at("clients").is_array())
    throw ConfigError(ctx + ": \"clients\" must be a list of client profiles");
  const auto& list = doc.at("clients");
  for (std::size_t i = 0; i < list.size(); ++i)
    c.clients.push_back(client_profile_from_json(list[i], ctx + ".clients[" + std::to_string(i) + "]"));

  fed::validate(c);
  return c;
}

fed::ExperimentConfig parse_config_text(const std::string& text) {
  json doc;
  try {
    doc = json::parse(text);
  } catch (const json::parse_error& e) {
    throw ParseError(e.what(), line_of(text, e.byte == 0 ? 0 : e.byte - 1));
  }
  return config_from_json(doc);
}

fed::ExperimentConfig parse_config(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw ConfigError("cannot read config " + path.string());
  std::ostringstream ss;
  ss << in.rdbuf();
  return parse_config_text(ss.str());
}

json config_to_json(const fed::ExperimentConfig& c) {
  const auto& fl = c.fl;
  json clients = json::array();
  for (const auto& p : c.clients) clients.push_back(client_profile_to_json(p));
  return {{"algorithm", fed::to_string(fl.algorithm)},
          {"clients", clients},
          {"rounds", fl.rounds},
          {"local_epochs", fl.local_epochs},
          {"lr", fl.lr},
          {"batch", fl.batch},
          {"mu", fl.mu},
          {"mu_prox", fl.mu_prox},
          {"partition_mode", recon::to_string(fl.partition_mode)},
          {"contrastive_kind", fed::to_string(fl.contrastive_kind)},
          {"aggregation", fed::to_string(fl.aggregation)},
          {"joint_local_update", fl.joint_local_update},
          {"use_data_consistency", c.use_data_consistency},
          {"noise_sigma", c.noise_sigma},
          {"seed", fl.seed},
          {"out_dir", c.out_dir}};
}

// ---------------------------------------------------------------------------
// presets

namespace {

struct Look {
  sim::PhantomStyle style;
  double mean;
  double std;
  double texture;
};

// one appearance per site, cycled
const Look kLooks[] = {
    {sim::PhantomStyle::ellipses, 0.55, 0.10, 0.02},
    {sim::PhantomStyle::rects, 0.45, 0.15, 0.03},
    {sim::PhantomStyle::mixed, 0.60, 0.08, 0.01},
    {sim::PhantomStyle::ellipses, 0.40, 0.12, 0.04},
    {sim::PhantomStyle::rects, 0.65, 0.10, 0.02},
    {sim::PhantomStyle::mixed, 0.50, 0.14, 0.03},
    {sim::PhantomStyle::ellipses, 0.70, 0.06, 0.01},
    {sim::PhantomStyle::rects, 0.35, 0.12, 0.02},
};

sim::ClientProfile site(std::size_t i, sim::MaskKind kind, double r) {
  sim::ClientProfile p;
  p.client_id = "site" + std::to_string(i + 1);
  const auto& look = kLooks[i % std::size(kLooks)];
  p.phantom_style = look.style;
  p.intensity_mean = look.mean;
  p.intensity_std = look.std;
  p.texture_noise_std = look.texture;
  p.mask_spec.kind = kind;
  p.mask_spec.acceleration = r;
  p.mask_spec.height = 64;
  p.mask_spec.width = 64;
  auto split = sim::split_7_3(40);
  p.n_train = split.train;
  p.n_test = split.test;
  return p;
}

}  // namespace

std::vector<std::string> preset_names() { return {"scenario1", "scenario2", "scenario3"}; }

fed::ExperimentConfig preset(const std::string& name) {
  using K = sim::MaskKind;
  std::vector<std::pair<K, double>> masks;
  if (name == "scenario1") {
    masks.assign(4, {K::uniform1d, 3.0});
  } else if (name == "scenario2") {
    masks = {{K::uniform1d, 3.0}, {K::cartesian1d, 5.0}, {K::radial2d, 4.0}, {K::random2d, 6.0}};
  } else if (name == "scenario3") {
    masks = {{K::uniform1d, 3.0}, {K::radial2d, 2.0}, {K::cartesian1d, 5.0}, {K::random2d, 4.0},
             {K::radial2d, 4.0},  {K::uniform1d, 5.0}, {K::random2d, 6.0},    {K::cartesian1d, 3.0}};
  } else {
    throw ConfigError("unknown preset '" + name + "'");
  }
  fed::ExperimentConfig c;
  c.fl.rounds = 10;
  c.fl.local_epochs = 2;
  c.out_dir = "runs/" + name;
  for (std::size_t i = 0; i < masks.size(); ++i) c.clients.push_back(site(i, masks[i].first, masks[i].second));
  return c;
}

}  // namespace fedmri
