#pragma once

#include <cstdint>
#include <functional>
#include <span>
#include <string>
#include <vector>

#include "fedmri/contrastive.hpp"
#include "fedmri/message.hpp"
#include "fedmri/metrics.hpp"
#include "fedmri/mri_sim.hpp"
#include "fedmri/optim.hpp"
#include "fedmri/recon.hpp"

namespace fedmri::fed {

enum class Algorithm { fedmri, fedavg, fedprox, singleset, transfer_site };
enum class Aggregation { uniform, data_proportion };

std::string to_string(Algorithm a);
std::string to_string(Aggregation a);
Algorithm algorithm_from_string(const std::string& s);
Aggregation aggregation_from_string(const std::string& s);

struct FLConfig {
  Algorithm algorithm = Algorithm::fedmri;
  std::size_t rounds = 50;       // Z
  std::size_t local_epochs = 10; // T
  double lr = 1e-4;              // η
  std::size_t batch = 8;
  double mu = 100.0;             // contrastive weight
  double mu_prox = 0.01;         // FedProx proximal weight
  recon::PartitionMode partition_mode = recon::PartitionMode::encoder_shared;
  ContrastiveKind contrastive_kind = ContrastiveKind::l1;
  Aggregation aggregation = Aggregation::uniform;
  bool joint_local_update = false;
  std::uint64_t seed = 0;

  friend bool operator==(const FLConfig&, const FLConfig&) = default;
};

struct ExperimentConfig {
  FLConfig fl;
  std::vector<sim::ClientProfile> clients;
  bool use_data_consistency = true;
  double noise_sigma = 0.0;
  std::string out_dir = "runs/latest";

  std::size_t num_clients() const { return clients.size(); }
  friend bool operator==(const ExperimentConfig&, const ExperimentConfig&) = default;
};

// Throws ConfigError when an invariant of the configuration is violated.
void validate(const ExperimentConfig& config);

/// fedmri honours partition_mode; the baselines move the whole model.
recon::PartitionMode effective_partition(const FLConfig& fl);

struct ClientState {
  std::string client_id;
  recon::ParameterSet params;
  sim::ClientDataset data;
  ad::Optimizer optimizer;
};

struct ServerState {
  std::vector<float> global_shared;                           // Θ_Ge at the current round
  std::vector<std::vector<float>> prev_round_client_shared;   // uploads of round z-1
  std::size_t round = 1;
};

/// Previous-round encoders and the current global encoder for the
/// contrastive term.
struct ContrastiveInputs {
  VectorView positive;
  std::vector<VectorView> negatives;
};

/// Merges global_shared into the client's SHARED partition, then runs
/// `epochs` epochs of minibatch L1 training on the LOCAL partition (both
/// partitions when joint_local_update is set, with the contrastive term
/// folded in when `contrastive` is given). Returns the mean training loss.
double client_local_update(ClientState& client, std::span<const float> global_shared, std::size_t epochs,
                           const ExperimentConfig& config, sim::Rng& rng,
                           const ContrastiveInputs* contrastive = nullptr);

/// One epoch over the SHARED partition of L_rec + μ·L_con. The contrastive
/// anchor is the live SHARED vector, the positive global_shared, and the
/// negatives the server's previous-round uploads; the term is skipped at
/// round 1. Returns the updated SHARED vector.
std::vector<float> client_encoder_update(ClientState& client, std::span<const float> global_shared,
                                         const ServerState& server, const ExperimentConfig& config, sim::Rng& rng);

/// Full-model training epochs for the baselines; mu_prox > 0 adds the
/// FedProx term (mu_prox/2)·‖w − anchor‖² against `prox_anchor`.
double train_full_model(ClientState& client, std::size_t epochs, const ExperimentConfig& config, sim::Rng& rng,
                        std::span<const float> prox_anchor = {}, double mu_prox = 0.0);

/// Elementwise weighted average. Weights must sum to 1 within 1e-9.
std::vector<float> server_aggregate(const std::vector<std::vector<float>>& vectors, std::span<const double> weights);

std::vector<double> aggregation_weights(Aggregation kind, const std::vector<ClientState>& clients);

// Hooks observe the protocol; with jobs > 1 client hooks run on worker
// threads (one client per thread at a time).
struct RoundHooks {
  std::function<void(const ClientState&, std::size_t round)> before_local_update;
  std::function<void(const ClientState&, std::size_t round)> after_local_update;
  std::function<void(const ClientState&, std::size_t round)> before_encoder_update;
  std::function<void(const ClientState&, std::size_t round)> after_encoder_update;
  std::function<void(const ClientState&, std::size_t round, const ContrastiveInputs&)> on_contrastive_inputs;
  std::function<void(const ServerState&)> after_aggregate;
};

struct RunOptions {
  RoundHooks hooks;
  std::size_t jobs = 1;
  bool record_wall_time = false;
};

struct ClientEvaluation {
  std::vector<double> psnr;  // per test image
  std::vector<double> ssim;
  double mean_psnr = 0.0;
  double mean_ssim = 0.0;
};

ClientEvaluation evaluate(const recon::ParameterSet& params, const sim::ClientDataset& data, bool use_data_consistency);

struct RoundReport {
  std::size_t round = 0;
  std::vector<metrics::MetricsRecord> records;  // one per client
  std::vector<ClientEvaluation> evaluations;    // one per client
  std::vector<MessageRecord> messages;
  std::vector<std::vector<float>> uploads;      // per client, as decoded by the server
  std::vector<float> global_after;              // global vector after aggregation
  std::vector<double> train_loss;               // per client
};

/// Initial state: one model built from the seed, copied to every client,
/// with the algorithm's partition applied; datasets generated per client.
std::vector<ClientState> init_clients(const ExperimentConfig& config);
ServerState init_server(const std::vector<ClientState>& clients);

RoundReport run_round(ServerState& server, std::vector<ClientState>& clients, const ExperimentConfig& config,
                      const RunOptions& options = {});

/// Parameters used to evaluate client `index` after a round.
recon::ParameterSet evaluation_model(const ServerState& server, const ClientState& client, const FLConfig& fl);

struct ExperimentResult {
  std::vector<RoundReport> rounds;
  std::vector<std::string> client_ids;
  std::vector<ClientEvaluation> final_evaluations;
  double mean_psnr = 0.0;
  double mean_ssim = 0.0;
  metrics::CommReport comm;
  std::vector<recon::ParameterSet> final_models;
  std::size_t shared_elements = 0;
  std::size_t total_elements = 0;
};

ExperimentResult run_experiment(const ExperimentConfig& config, const RunOptions& options = {});

// Deterministic per-purpose RNG streams.
std::uint64_t stable_hash(const std::string& s);
sim::Rng client_round_rng(std::uint64_t seed, const std::string& client_id, std::size_t round);
std::uint64_t dataset_seed(std::uint64_t seed, const std::string& client_id);

}  // namespace fedmri::fed
