#pragma once

#include <filesystem>
#include <json.hpp>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include "fedmri/federated.hpp"

namespace fedmri {

inline constexpr const char* kMetricsHeader = "round,client_id,psnr,ssim,bytes_up,bytes_down,wall_ms";

/// One row per (round, client), rounds ascending, clients in config order.
std::string metrics_csv(const fed::ExperimentResult& result);
/// Final-round per-image scores: client_id,image,psnr,ssim (full precision).
std::string per_image_csv(const fed::ExperimentResult& result);

struct PerImageScores {
  std::vector<std::string> clients;  // first-seen order
  std::map<std::string, std::vector<double>> psnr;
  std::map<std::string, std::vector<double>> ssim;
};
PerImageScores read_per_image(const std::filesystem::path& run_dir);

/// Paired t-tests of final per-image PSNR, client by client:
/// {"clients": [{"client_id", "t", "p", "n", "mean_a", "mean_b"}]}.
nlohmann::json compare_runs(const std::filesystem::path& a, const std::filesystem::path& b);

nlohmann::json summary_json(const fed::ExperimentConfig& config, const fed::ExperimentResult& result,
                            const std::optional<std::filesystem::path>& baseline);

/// Writes metrics.csv, per_image.csv, summary.json, config.json and
/// checkpoints/<client_id>/ under dir.
void write_run_output(const std::filesystem::path& dir, const fed::ExperimentConfig& config,
                      const fed::ExperimentResult& result,
                      const std::optional<std::filesystem::path>& baseline = std::nullopt);

}  // namespace fedmri
