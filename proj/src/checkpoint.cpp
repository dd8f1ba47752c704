#include "fedmri/checkpoint.hpp"

#include <fstream>
#include <json.hpp>

#include "fedmri/errors.hpp"
#include "fedmri/tensor_io.hpp"

namespace fedmri::recon {

using nlohmann::json;

void save_checkpoint(const ParameterSet& params, const std::filesystem::path& dir) {
  std::filesystem::create_directories(dir);
  json manifest = json::array();
  for (const auto& e : params.entries()) {
    const std::string file = e.param.name + ".ftns";
    save_tensor(e.param.value, dir / file);
    manifest.push_back({{"name", e.param.name},
                        {"file", file},
                        {"partition", to_string(e.partition)},
                        {"role", to_string(e.role)},
                        {"subnet", e.subnet},
                        {"stage", e.stage},
                        {"shape", e.param.value.shape()}});
  }
  std::ofstream out(dir / "manifest.json");
  out << json{{"parameters", manifest}}.dump(2) << '\n';
}

ParameterSet load_checkpoint(const std::filesystem::path& dir) {
  std::ifstream in(dir / "manifest.json");
  if (!in) throw std::runtime_error("missing manifest.json in " + dir.string());
  const json manifest = json::parse(in);
  ParameterSet ps;
  for (const auto& item : manifest.at("parameters")) {
    Tensor value = load_tensor(dir / item.at("file").get<std::string>());
    if (value.shape() != item.at("shape").get<Shape>())
      throw FormatError("shape in manifest disagrees with " + item.at("file").get<std::string>(), 0);
    ps.add({ad::Parameter(item.at("name").get<std::string>(), std::move(value)),
            partition_from_string(item.at("partition").get<std::string>()),
            path_role_from_string(item.at("role").get<std::string>()), item.at("subnet").get<std::string>(),
            item.at("stage").get<int>()});
  }
  return ps;
}

}  // namespace fedmri::recon
