#include "fedmri/run_output.hpp"

#include <cstdio>
#include <fstream>
#include <sstream>

#include "fedmri/checkpoint.hpp"
#include "fedmri/config.hpp"
#include "fedmri/errors.hpp"
#include "fedmri/metrics.hpp"

namespace fedmri {

using nlohmann::json;
namespace fs = std::filesystem;

namespace {

std::string num(double v, int digits) {
  char buf[64];
  std::snprintf(buf, sizeof buf, "%.*g", digits, v);
  return buf;
}

void write_text(const fs::path& path, const std::string& text) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw ConfigError("cannot write " + path.string());
  out << text;
}

std::vector<std::string> split_csv(const std::string& line) {
  std::vector<std::string> cells;
  std::stringstream ss(line);
  std::string cell;
  while (std::getline(ss, cell, ',')) cells.push_back(cell);
  return cells;
}

}  // namespace

std::string metrics_csv(const fed::ExperimentResult& result) {
  std::string out = std::string(kMetricsHeader) + "\n";
  for (const auto& round : result.rounds)
    for (const auto& r : round.records)
      out += std::to_string(r.round) + "," + r.client_id + "," + num(r.psnr, 10) + "," + num(r.ssim, 10) + "," +
             std::to_string(r.bytes_up) + "," + std::to_string(r.bytes_down) + "," + num(r.wall_ms, 6) + "\n";
  return out;
}

std::string per_image_csv(const fed::ExperimentResult& result) {
  std::string out = "client_id,image,psnr,ssim\n";
  for (std::size_t c = 0; c < result.client_ids.size(); ++c) {
    const auto& ev = result.final_evaluations[c];
    for (std::size_t i = 0; i < ev.psnr.size(); ++i)
      out += result.client_ids[c] + "," + std::to_string(i) + "," + num(ev.psnr[i], 17) + "," + num(ev.ssim[i], 17) +
             "\n";
  }
  return out;
}

PerImageScores read_per_image(const fs::path& run_dir) {
  const fs::path path = run_dir / "per_image.csv";
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot read " + path.string());
  PerImageScores s;
  std::string line;
  std::getline(in, line);
  if (line != "client_id,image,psnr,ssim") throw ConfigError(path.string() + ": unexpected header");
  while (std::getline(in, line)) {
    if (line.empty()) continue;
    auto cells = split_csv(line);
    if (cells.size() != 4) throw ConfigError(path.string() + ": malformed row '" + line + "'");
    if (!s.psnr.count(cells[0])) s.clients.push_back(cells[0]);
    s.psnr[cells[0]].push_back(std::stod(cells[2]));
    s.ssim[cells[0]].push_back(std::stod(cells[3]));
  }
  return s;
}

json compare_runs(const fs::path& a, const fs::path& b) {
  auto sa = read_per_image(a);
  auto sb = read_per_image(b);
  json clients = json::array();
  for (const auto& id : sa.clients) {
    if (!sb.psnr.count(id)) throw ConfigError("client '" + id + "' missing from " + b.string());
    const auto& pa = sa.psnr.at(id);
    const auto& pb = sb.psnr.at(id);
    if (pa.size() != pb.size()) throw ConfigError("client '" + id + "' has a different number of test images");
    auto tt = metrics::paired_ttest(pa, pb);
    double ma = 0.0, mb = 0.0;
    for (std::size_t i = 0; i < pa.size(); ++i) {
      ma += pa[i];
      mb += pb[i];
    }
    clients.push_back({{"client_id", id},
                       {"t", tt.t},
                       {"p", tt.p},
                       {"n", pa.size()},
                       {"mean_a", ma / static_cast<double>(pa.size())},
                       {"mean_b", mb / static_cast<double>(pb.size())}});
  }
  return {{"a", a.string()}, {"b", b.string()}, {"clients", clients}};
}

json summary_json(const fed::ExperimentConfig& config, const fed::ExperimentResult& result,
                  const std::optional<fs::path>& baseline) {
  json clients = json::array();
  for (std::size_t c = 0; c < result.client_ids.size(); ++c)
    clients.push_back({{"client_id", result.client_ids[c]},
                       {"psnr", result.final_evaluations[c].mean_psnr},
                       {"ssim", result.final_evaluations[c].mean_ssim}});
  const auto& comm = result.comm;
  json s = {{"algorithm", fed::to_string(config.fl.algorithm)},
            {"seed", config.fl.seed},
            {"rounds", result.rounds.size()},
            {"mean_psnr", result.mean_psnr},
            {"mean_ssim", result.mean_ssim},
            {"clients", clients},
            {"shared_elements", result.shared_elements},
            {"total_elements", result.total_elements},
            {"bytes",
             {{"model_payload_up", comm.model_payload_up},
              {"model_payload_down", comm.model_payload_down},
              {"negatives_payload_down", comm.negatives_payload_down},
              {"manifest_up", comm.manifest_up},
              {"manifest_down", comm.manifest_down},
              {"total_up", comm.total_up()},
              {"total_down", comm.total_down()}}}};
  if (baseline) s["baseline"] = compare_runs(config.out_dir, *baseline);
  return s;
}

void write_run_output(const fs::path& dir, const fed::ExperimentConfig& config, const fed::ExperimentResult& result,
                      const std::optional<fs::path>& baseline) {
  fs::create_directories(dir);
  write_text(dir / "metrics.csv", metrics_csv(result));
  write_text(dir / "per_image.csv", per_image_csv(result));
  write_text(dir / "config.json", config_to_json(config).dump(2) + "\n");
  for (std::size_t c = 0; c < result.client_ids.size(); ++c)
    recon::save_checkpoint(result.final_models[c], dir / "checkpoints" / result.client_ids[c]);
  auto cfg = config;
  cfg.out_dir = dir.string();
  write_text(dir / "summary.json", summary_json(cfg, result, baseline).dump(2) + "\n");
}

}  // namespace fedmri
