#include <CLI11.hpp>

#include <cstdio>
#include <fstream>
#include <iostream>
#include <optional>
#include <sstream>

#include "fedmri/runtime.hpp"
#include "fedmri/config.hpp"
#include "fedmri/errors.hpp"
#include "fedmri/grad_suite.hpp"
#include "fedmri/json_io.hpp"
#include "fedmri/run_output.hpp"
#include "fedmri/tensor_io.hpp"

using namespace fedmri;
using fedmri::ConfigError;

namespace {

nlohmann::json read_json_arg(const std::string& arg) {
  if (!arg.empty() && arg.front() == '{') return nlohmann::json::parse(arg);
  std::ifstream in(arg);
  if (!in) throw ConfigError("cannot read " + arg);
  std::stringstream ss;
  ss << in.rdbuf();
  return nlohmann::json::parse(ss.str());
}

int cmd_run(const std::string& config_path, const std::string& preset_name, std::optional<std::uint64_t> seed,
            const std::string& out, const std::string& algorithm, std::optional<double> mu,
            const std::string& baseline, std::size_t jobs, bool timing) {
  fed::ExperimentConfig config;
  if (!config_path.empty() == !preset_name.empty()) throw ConfigError("give exactly one of --config or --preset");
  config = config_path.empty() ? preset(preset_name) : parse_config(config_path);
  if (seed) config.fl.seed = *seed;
  if (!out.empty()) config.out_dir = out;
  if (!algorithm.empty()) config.fl.algorithm = fed::algorithm_from_string(algorithm);
  if (mu) config.fl.mu = *mu;
  fed::validate(config);

  fed::RunOptions options;
  options.jobs = jobs;
  options.record_wall_time = timing;
  auto result = fed::run_experiment(config, options);
  std::optional<std::filesystem::path> base;
  if (!baseline.empty()) base = baseline;
  write_run_output(config.out_dir, config, result, base);
  std::printf("%s: %zu rounds, %zu clients, mean PSNR %.4f dB, mean SSIM %.4f -> %s\n",
              fed::to_string(config.fl.algorithm).c_str(), result.rounds.size(), result.client_ids.size(),
              result.mean_psnr, result.mean_ssim, config.out_dir.c_str());
  return 0;
}

int cmd_gradcheck(std::uint64_t seed) {
  double worst = 0.0;
  bool ok = true;
  for (const auto& c : ad::gradient_suite(seed)) {
    std::printf("%-10s coords=%zu max_rel_error=%.3e tol=%.0e %s\n", c.name.c_str(), c.coords, c.max_rel_error,
                c.tolerance, c.passed() ? "ok" : "FAIL");
    worst = std::max(worst, c.max_rel_error);
    ok = ok && c.passed();
  }
  std::printf("worst relative error: %.3e\n", worst);
  return ok ? 0 : 1;
}

int cmd_masks(const std::string& spec_arg, const std::string& out, std::uint64_t seed) {
  auto spec = mask_spec_from_json(read_json_arg(spec_arg), "mask");
  auto mask = sim::make_mask(spec, seed);
  save_tensor(mask.bits, out);
  std::printf("%s R=%g: sampled fraction %.4f -> %s\n", sim::to_string(spec.kind).c_str(), spec.acceleration,
              mask.sampled_fraction(), out.c_str());
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  fedmri::tune_allocator();
  CLI::App app{"federated MRI reconstruction simulator"};
  app.require_subcommand(1);

  std::string config_path, preset_name, out, algorithm, baseline;
  std::optional<std::uint64_t> seed;
  std::optional<double> mu;
  std::size_t jobs = 1;
  bool timing = false;
  auto* run = app.add_subcommand("run", "run an experiment and write metrics.csv, summary.json, checkpoints/");
  run->add_option("--config", config_path, "experiment JSON");
  run->add_option("--preset", preset_name, "scenario1 | scenario2 | scenario3");
  run->add_option("--seed", seed, "override the seed");
  run->add_option("--out", out, "override out_dir");
  run->add_option("--algorithm", algorithm, "override the algorithm");
  run->add_option("--mu", mu, "override mu");
  run->add_option("--baseline", baseline, "run directory to t-test against");
  run->add_option("--jobs", jobs, "client threads")->check(CLI::PositiveNumber);
  run->add_flag("--time", timing, "record wall_ms (makes metrics.csv nondeterministic)");

  std::uint64_t gseed = 0;
  auto* grad = app.add_subcommand("gradcheck", "finite-difference check of the model gradients");
  grad->add_option("--seed", gseed);

  std::string spec_arg, mask_out;
  std::uint64_t mseed = 0;
  auto* masks = app.add_subcommand("masks", "write a sampling mask as a TensorFile");
  masks->add_option("--spec", spec_arg, "mask spec JSON (inline or path)")->required();
  masks->add_option("--out", mask_out, "output path")->required();
  masks->add_option("--seed", mseed);

  std::string dir_a, dir_b;
  auto* compare = app.add_subcommand("compare", "paired t-test of final per-image PSNR between two runs");
  compare->add_option("--a", dir_a)->required();
  compare->add_option("--b", dir_b)->required();

  std::string pname, pout;
  auto* pre = app.add_subcommand("preset", "print or write a preset config");
  pre->add_option("name", pname)->required();
  pre->add_option("--out", pout);

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    return app.exit(e) == 0 ? 0 : 1;
  }

  try {
    if (*run) return cmd_run(config_path, preset_name, seed, out, algorithm, mu, baseline, jobs, timing);
    if (*grad) return cmd_gradcheck(gseed);
    if (*masks) return cmd_masks(spec_arg, mask_out, mseed);
    if (*compare) {
      std::cout << compare_runs(dir_a, dir_b).dump(2) << "\n";
      return 0;
    }
    if (*pre) {
      auto text = config_to_json(preset(pname)).dump(2) + "\n";
      if (pout.empty()) {
        std::cout << text;
      } else {
        std::ofstream(pout) << text;
      }
      return 0;
    }
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  }
  return 1;
}
