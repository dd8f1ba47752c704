#include "fedmri/federated.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <exception>
#include <numeric>
#include <set>
#include <thread>

#include "fedmri/errors.hpp"
#include "fedmri/layers.hpp"

namespace fedmri::fed {

using recon::GradScope;
using recon::Partition;

std::string to_string(Algorithm a) {
  switch (a) {
    case Algorithm::fedmri: return "fedmri";
    case Algorithm::fedavg: return "fedavg";
    case Algorithm::fedprox: return "fedprox";
    case Algorithm::singleset: return "singleset";
    case Algorithm::transfer_site: return "transfer_site";
  }
  return "?";
}

std::string to_string(Aggregation a) { return a == Aggregation::uniform ? "uniform" : "data_proportion"; }

Algorithm algorithm_from_string(const std::string& s) {
  for (auto a : {Algorithm::fedmri, Algorithm::fedavg, Algorithm::fedprox, Algorithm::singleset,
                 Algorithm::transfer_site})
    if (to_string(a) == s) return a;
  throw ConfigError("unknown algorithm '" + s + "'");
}

Aggregation aggregation_from_string(const std::string& s) {
  if (s == "uniform") return Aggregation::uniform;
  if (s == "data_proportion") return Aggregation::data_proportion;
  throw ConfigError("unknown aggregation '" + s + "'");
}

void validate(const ExperimentConfig& config) {
  const auto& fl = config.fl;
  if (config.clients.empty()) throw ConfigError("at least one client is required");
  if (fl.rounds < 1) throw ConfigError("rounds must be >= 1");
  if (fl.local_epochs < 1) throw ConfigError("local_epochs must be >= 1");
  if (!(fl.lr > 0.0) || !std::isfinite(fl.lr)) throw ConfigError("lr must be > 0");
  if (!(fl.mu >= 0.0) || !std::isfinite(fl.mu)) throw ConfigError("mu must be >= 0");
  if (!(fl.mu_prox >= 0.0) || !std::isfinite(fl.mu_prox)) throw ConfigError("mu_prox must be >= 0");
  if (fl.batch < 1) throw ConfigError("batch must be >= 1");
  if (!(config.noise_sigma >= 0.0)) throw ConfigError("noise_sigma must be >= 0");
  std::set<std::string> ids;
  for (const auto& c : config.clients) {
    if (!ids.insert(c.client_id).second) throw ConfigError("duplicate client_id '" + c.client_id + "'");
    if (c.n_train == 0) throw ConfigError("client '" + c.client_id + "' has an empty train set");
  }
}

recon::PartitionMode effective_partition(const FLConfig& fl) {
  return fl.algorithm == Algorithm::fedmri ? fl.partition_mode : recon::PartitionMode::all_shared;
}

std::uint64_t stable_hash(const std::string& s) {
  std::uint64_t h = 0xcbf29ce484222325ULL;  // FNV-1a
  for (unsigned char c : s) {
    h ^= c;
    h *= 0x100000001b3ULL;
  }
  return h;
}

static std::uint64_t mix(std::initializer_list<std::uint64_t> parts) {
  std::vector<std::uint32_t> words;
  for (auto p : parts) {
    words.push_back(static_cast<std::uint32_t>(p));
    words.push_back(static_cast<std::uint32_t>(p >> 32));
  }
  std::seed_seq seq(words.begin(), words.end());
  std::uint32_t out[2];
  seq.generate(out, out + 2);
  return (static_cast<std::uint64_t>(out[1]) << 32) | out[0];
}

sim::Rng client_round_rng(std::uint64_t seed, const std::string& client_id, std::size_t round) {
  return sim::Rng(mix({seed, stable_hash(client_id), round, 0x7472}));
}

std::uint64_t dataset_seed(std::uint64_t seed, const std::string& client_id) {
  return mix({seed, stable_hash(client_id), 0x64617461});
}

static std::uint64_t init_seed(std::uint64_t seed) { return mix({seed, 0x696e6974}); }
static std::uint64_t order_seed(std::uint64_t seed, std::size_t round) { return mix({seed, round, 0x6f726472}); }

// ---------------------------------------------------------------------------
// local training

namespace {

// Called after the minibatch gradients are in place and before the step.
using ExtraGrad = std::function<void(recon::ParameterSet&)>;

std::vector<ad::Parameter*> scope_params(recon::ParameterSet& params, GradScope scope) {
  switch (scope) {
    case GradScope::shared: return params.parameters(Partition::shared);
    case GradScope::local: return params.parameters(Partition::local);
    case GradScope::all: return params.parameters();
    case GradScope::none: break;
  }
  return {};
}

// Mean per-sample L1 over the epoch.
double train_epoch(ClientState& client, GradScope scope, const ExperimentConfig& config, sim::Rng& rng,
                   const ExtraGrad& extra) {
  const auto& train = client.data.train;
  if (train.empty()) throw ConfigError("client '" + client.client_id + "' has an empty train set");
  std::vector<std::size_t> order(train.size());
  std::iota(order.begin(), order.end(), std::size_t{0});
  std::shuffle(order.begin(), order.end(), rng);

  auto active = scope_params(client.params, scope);
  const auto& mask = client.data.mask.bits;
  double total = 0.0;
  client.params.zero_grads();
  for (std::size_t start = 0; start < order.size(); start += config.fl.batch) {
    std::size_t end = std::min(order.size(), start + config.fl.batch);
    float inv = 1.0f / static_cast<float>(end - start);
    for (std::size_t i = start; i < end; ++i) {
      const auto& s = train[order[i]];
      ad::Tape tape;
      auto loss = recon::reconstruction_loss(tape, client.params, s.k_meas, mask, s.y, config.use_data_consistency,
                                             scope);
      total += tape.scalar(loss);
      tape.backward(ad::scale(tape, loss, inv));
    }
    if (extra) extra(client.params);
    client.optimizer.step(active);
  }
  return total / static_cast<double>(order.size());
}

double train_epochs(ClientState& client, GradScope scope, std::size_t epochs, const ExperimentConfig& config,
                    sim::Rng& rng, const ExtraGrad& extra) {
  double last = 0.0;
  for (std::size_t e = 0; e < epochs; ++e) last = train_epoch(client, scope, config, rng, extra);
  return last;
}

void check_length(std::size_t got, std::size_t want, const char* what) {
  if (got != want)
    throw DimensionError(std::string(what) + " has " + std::to_string(got) + " elements, expected " +
                         std::to_string(want));
}

// Adds mu * d L_con / d anchor to the SHARED grads, with the live SHARED
// vector as anchor.
ExtraGrad contrastive_extra(const ContrastiveInputs& inputs, double mu, ContrastiveKind kind) {
  return [&inputs, mu, kind](recon::ParameterSet& params) {
    auto anchor = params.flatten(Partition::shared);
    auto g = contrastive_grad(anchor, inputs.positive, inputs.negatives, kind);
    std::size_t off = 0;
    for (auto* p : params.parameters(Partition::shared)) {
      for (float& v : p->grad.data()) v += static_cast<float>(mu * g[off++]);
    }
  };
}

bool contrastive_active(const FLConfig& fl, std::size_t round, std::size_t n_negatives) {
  return fl.algorithm == Algorithm::fedmri && fl.mu > 0.0 && fl.contrastive_kind != ContrastiveKind::off &&
         round > 1 && n_negatives > 0;
}

}  // namespace

double client_local_update(ClientState& client, std::span<const float> global_shared, std::size_t epochs,
                           const ExperimentConfig& config, sim::Rng& rng, const ContrastiveInputs* contrastive) {
  if (epochs < 1) throw ConfigError("local_epochs must be >= 1");
  if (client.data.train.empty()) throw ConfigError("client '" + client.client_id + "' has an empty train set");
  recon::merge_params(client.params, global_shared);
  if (!config.fl.joint_local_update) return train_epochs(client, GradScope::local, epochs, config, rng, {});
  ExtraGrad extra;
  if (contrastive) {
    check_length(contrastive->positive.size(), global_shared.size(), "positive");
    extra = contrastive_extra(*contrastive, config.fl.mu, config.fl.contrastive_kind);
  }
  return train_epochs(client, GradScope::all, epochs, config, rng, extra);
}

std::vector<float> client_encoder_update(ClientState& client, std::span<const float> global_shared,
                                         const ServerState& server, const ExperimentConfig& config, sim::Rng& rng) {
  std::size_t n = client.params.element_count(Partition::shared);
  check_length(global_shared.size(), n, "global shared vector");
  for (const auto& v : server.prev_round_client_shared) check_length(v.size(), n, "previous-round vector");

  ContrastiveInputs inputs{global_shared, {}};
  for (const auto& v : server.prev_round_client_shared) inputs.negatives.emplace_back(v);
  ExtraGrad extra;
  if (contrastive_active(config.fl, server.round, inputs.negatives.size()))
    extra = contrastive_extra(inputs, config.fl.mu, config.fl.contrastive_kind);
  train_epochs(client, GradScope::shared, 1, config, rng, extra);
  return client.params.flatten(Partition::shared);
}

double train_full_model(ClientState& client, std::size_t epochs, const ExperimentConfig& config, sim::Rng& rng,
                        std::span<const float> prox_anchor, double mu_prox) {
  if (epochs < 1) throw ConfigError("local_epochs must be >= 1");
  ExtraGrad extra;
  if (mu_prox > 0.0) {
    check_length(prox_anchor.size(), client.params.element_count(), "proximal anchor");
    // d/dw (mu/2)·‖w − w_g‖² = mu·(w − w_g)
    extra = [prox_anchor, mu_prox](recon::ParameterSet& params) {
      std::size_t off = 0;
      for (auto* p : params.parameters()) {
        auto v = p->value.data();
        auto g = p->grad.data();
        for (std::size_t i = 0; i < v.size(); ++i, ++off)
          g[i] += static_cast<float>(mu_prox * (static_cast<double>(v[i]) - prox_anchor[off]));
      }
    };
  }
  return train_epochs(client, GradScope::all, epochs, config, rng, extra);
}

// ---------------------------------------------------------------------------
// server

std::vector<float> server_aggregate(const std::vector<std::vector<float>>& vectors, std::span<const double> weights) {
  if (vectors.empty()) throw ConfigError("nothing to aggregate");
  if (weights.size() != vectors.size())
    throw ConfigError("got " + std::to_string(weights.size()) + " weights for " + std::to_string(vectors.size()) +
                      " vectors");
  double wsum = 0.0;
  for (double w : weights) wsum += w;
  if (!(std::abs(wsum - 1.0) <= 1e-9)) throw ConfigError("aggregation weights sum to " + std::to_string(wsum));
  std::size_t n = vectors.front().size();
  for (const auto& v : vectors) check_length(v.size(), n, "client vector");

  bool uniform = std::all_of(weights.begin(), weights.end(), [&](double w) { return w == weights[0]; });
  std::vector<double> acc(n, 0.0);
  if (uniform) {
    // plain sum then one scale, so the result does not depend on client order
    for (const auto& v : vectors)
      for (std::size_t i = 0; i < n; ++i) acc[i] += v[i];
    for (auto& a : acc) a /= static_cast<double>(vectors.size());
  } else {
    for (std::size_t s = 0; s < vectors.size(); ++s)
      for (std::size_t i = 0; i < n; ++i) acc[i] += weights[s] * vectors[s][i];
  }
  return {acc.begin(), acc.end()};
}

std::vector<double> aggregation_weights(Aggregation kind, const std::vector<ClientState>& clients) {
  std::vector<double> w(clients.size(), 1.0 / static_cast<double>(clients.size()));
  if (kind == Aggregation::data_proportion) {
    double total = 0.0;
    for (const auto& c : clients) total += static_cast<double>(c.data.train.size());
    if (total <= 0.0) throw ConfigError("data_proportion weights need training data");
    for (std::size_t s = 0; s < clients.size(); ++s) w[s] = static_cast<double>(clients[s].data.train.size()) / total;
  }
  return w;
}

// ---------------------------------------------------------------------------
// evaluation

ClientEvaluation evaluate(const recon::ParameterSet& params, const sim::ClientDataset& data,
                          bool use_data_consistency) {
  ClientEvaluation ev;
  for (const auto& s : data.test) {
    Tensor out = recon::reconstruct(params, s.k_meas, data.mask.bits, use_data_consistency);
    ev.psnr.push_back(metrics::psnr(out, s.y));
    ev.ssim.push_back(metrics::ssim(out, s.y));
  }
  if (!ev.psnr.empty()) {
    ev.mean_psnr = std::accumulate(ev.psnr.begin(), ev.psnr.end(), 0.0) / static_cast<double>(ev.psnr.size());
    ev.mean_ssim = std::accumulate(ev.ssim.begin(), ev.ssim.end(), 0.0) / static_cast<double>(ev.ssim.size());
  }
  return ev;
}

recon::ParameterSet evaluation_model(const ServerState& server, const ClientState& client, const FLConfig& fl) {
  recon::ParameterSet params = client.params;
  if (fl.algorithm != Algorithm::singleset) recon::merge_params(params, server.global_shared);
  return params;
}

// ---------------------------------------------------------------------------
// orchestration

std::vector<ClientState> init_clients(const ExperimentConfig& config) {
  validate(config);
  sim::Rng init_rng(init_seed(config.fl.seed));
  recon::KINetSpec spec;
  spec.use_data_consistency = config.use_data_consistency;
  auto model = recon::build_kinet(spec, init_rng);
  recon::apply_partition_mode(model, effective_partition(config.fl));

  ad::OptimizerOptions opt;
  opt.lr = config.fl.lr;
  std::vector<ClientState> clients;
  for (const auto& profile : config.clients) {
    ClientState c{profile.client_id, model,
                  sim::build_client_dataset(profile, dataset_seed(config.fl.seed, profile.client_id),
                                            config.noise_sigma),
                  ad::Optimizer(opt)};
    if (c.data.train.empty()) throw ConfigError("client '" + c.client_id + "' has an empty train set");
    clients.push_back(std::move(c));
  }
  return clients;
}

ServerState init_server(const std::vector<ClientState>& clients) {
  ServerState s;
  s.global_shared = clients.front().params.flatten(Partition::shared);
  return s;
}

namespace {

std::vector<Segment> shared_layout(const recon::ParameterSet& params) {
  std::vector<Segment> segs;
  for (const auto& e : params.entries())
    if (e.partition == Partition::shared) segs.push_back({e.param.name, e.param.value.numel()});
  return segs;
}

RoundMessage make_message(Direction dir, PayloadClass cls, std::size_t round, const std::string& client,
                          std::vector<Segment> segs, std::vector<float> payload, std::size_t vectors = 1) {
  RoundMessage m;
  m.direction = dir;
  m.payload_class = cls;
  m.round = round;
  m.client_id = client;
  m.segments = std::move(segs);
  m.vectors = vectors;
  m.payload = std::move(payload);
  return m;
}

// Serializes, then decodes on the receiving side.
RoundMessage transmit(const RoundMessage& m, std::vector<MessageRecord>& log) {
  auto bytes = m.encode();
  log.push_back(make_record(m));
  return RoundMessage::decode(bytes);
}

template <typename Fn>
void parallel_for(std::size_t n, std::size_t jobs, Fn fn) {
  if (jobs <= 1 || n <= 1) {
    for (std::size_t i = 0; i < n; ++i) fn(i);
    return;
  }
  std::vector<std::exception_ptr> errors(n);
  std::vector<std::thread> pool;
  std::size_t workers = std::min(jobs, n);
  for (std::size_t t = 0; t < workers; ++t) {
    pool.emplace_back([&, t] {
      for (std::size_t i = t; i < n; i += workers) {
        try {
          fn(i);
        } catch (...) {
          errors[i] = std::current_exception();
        }
      }
    });
  }
  for (auto& th : pool) th.join();
  for (auto& e : errors)
    if (e) std::rethrow_exception(e);
}

struct ClientRoundOutput {
  std::vector<MessageRecord> log;
  std::vector<float> upload;
  double loss = 0.0;
  double wall_ms = 0.0;
};

void call(const std::function<void(const ClientState&, std::size_t)>& hook, const ClientState& c, std::size_t z) {
  if (hook) hook(c, z);
}

ClientRoundOutput fedmri_client(const ServerState& server, ClientState& client, const ExperimentConfig& config,
                                const RunOptions& options) {
  ClientRoundOutput out;
  const std::size_t z = server.round;
  const auto& hooks = options.hooks;
  auto layout = shared_layout(client.params);
  auto rng = client_round_rng(config.fl.seed, client.client_id, z);

  auto down = transmit(make_message(Direction::server_to_client, PayloadClass::model, z, client.client_id, layout,
                                    server.global_shared),
                       out.log);
  std::vector<float> global(down.payload.begin(), down.payload.end());

  // negatives travel as one message holding every previous-round vector
  bool use_con = contrastive_active(config.fl, z, server.prev_round_client_shared.size());
  ServerState view;
  view.round = z;
  view.global_shared = global;
  if (use_con) {
    std::vector<float> packed;
    for (const auto& v : server.prev_round_client_shared) packed.insert(packed.end(), v.begin(), v.end());
    auto neg = transmit(make_message(Direction::server_to_client, PayloadClass::negatives, z, client.client_id,
                                     layout, std::move(packed), server.prev_round_client_shared.size()),
                        out.log);
    for (std::size_t i = 0; i < neg.vectors; ++i) {
      auto v = neg.vector(i);
      view.prev_round_client_shared.emplace_back(v.begin(), v.end());
    }
  }
  ContrastiveInputs inputs{global, {}};
  for (const auto& v : view.prev_round_client_shared) inputs.negatives.emplace_back(v);

  auto t0 = std::chrono::steady_clock::now();
  recon::merge_params(client.params, global);
  call(hooks.before_local_update, client, z);
  if (use_con && hooks.on_contrastive_inputs) hooks.on_contrastive_inputs(client, z, inputs);
  const ContrastiveInputs* joint_con = (config.fl.joint_local_update && use_con) ? &inputs : nullptr;
  out.loss = client_local_update(client, global, config.fl.local_epochs, config, rng, joint_con);
  call(hooks.after_local_update, client, z);
  std::vector<float> shared;
  if (config.fl.joint_local_update) {
    shared = client.params.flatten(Partition::shared);
  } else {
    call(hooks.before_encoder_update, client, z);
    shared = client_encoder_update(client, global, view, config, rng);
    call(hooks.after_encoder_update, client, z);
  }
  auto t1 = std::chrono::steady_clock::now();
  if (options.record_wall_time) out.wall_ms = std::chrono::duration<double, std::milli>(t1 - t0).count();

  auto up = transmit(make_message(Direction::client_to_server, PayloadClass::model, z, client.client_id, layout,
                                  std::move(shared)),
                     out.log);
  out.upload.assign(up.payload.begin(), up.payload.end());
  return out;
}

ClientRoundOutput fedavg_client(const ServerState& server, ClientState& client, const ExperimentConfig& config,
                                const RunOptions& options) {
  ClientRoundOutput out;
  const std::size_t z = server.round;
  auto layout = shared_layout(client.params);
  auto rng = client_round_rng(config.fl.seed, client.client_id, z);
  auto down = transmit(make_message(Direction::server_to_client, PayloadClass::model, z, client.client_id, layout,
                                    server.global_shared),
                       out.log);
  std::vector<float> global(down.payload.begin(), down.payload.end());

  auto t0 = std::chrono::steady_clock::now();
  recon::merge_params(client.params, global);
  call(options.hooks.before_local_update, client, z);
  double mu_prox = config.fl.algorithm == Algorithm::fedprox ? config.fl.mu_prox : 0.0;
  out.loss = train_full_model(client, config.fl.local_epochs, config, rng, global, mu_prox);
  call(options.hooks.after_local_update, client, z);
  auto t1 = std::chrono::steady_clock::now();
  if (options.record_wall_time) out.wall_ms = std::chrono::duration<double, std::milli>(t1 - t0).count();

  auto up = transmit(make_message(Direction::client_to_server, PayloadClass::model, z, client.client_id, layout,
                                  client.params.flatten(Partition::shared)),
                     out.log);
  out.upload.assign(up.payload.begin(), up.payload.end());
  return out;
}

ClientRoundOutput singleset_client(const ServerState& server, ClientState& client, const ExperimentConfig& config,
                                   const RunOptions& options) {
  ClientRoundOutput out;
  const std::size_t z = server.round;
  auto rng = client_round_rng(config.fl.seed, client.client_id, z);
  auto t0 = std::chrono::steady_clock::now();
  call(options.hooks.before_local_update, client, z);
  out.loss = train_full_model(client, config.fl.local_epochs, config, rng);
  call(options.hooks.after_local_update, client, z);
  auto t1 = std::chrono::steady_clock::now();
  if (options.record_wall_time) out.wall_ms = std::chrono::duration<double, std::milli>(t1 - t0).count();
  return out;
}

}  // namespace

RoundReport run_round(ServerState& server, std::vector<ClientState>& clients, const ExperimentConfig& config,
                      const RunOptions& options) {
  if (server.round < 1) throw ConfigError("round index must be >= 1");
  if (clients.empty()) throw ConfigError("no clients");
  const auto& fl = config.fl;
  const std::size_t S = clients.size();
  const std::size_t z = server.round;
  std::vector<ClientRoundOutput> outputs(S);

  RoundReport report;
  report.round = z;

  switch (fl.algorithm) {
    case Algorithm::fedmri:
      parallel_for(S, options.jobs, [&](std::size_t i) { outputs[i] = fedmri_client(server, clients[i], config, options); });
      break;
    case Algorithm::fedavg:
    case Algorithm::fedprox:
      parallel_for(S, options.jobs, [&](std::size_t i) { outputs[i] = fedavg_client(server, clients[i], config, options); });
      break;
    case Algorithm::singleset:
      parallel_for(S, options.jobs,
                   [&](std::size_t i) { outputs[i] = singleset_client(server, clients[i], config, options); });
      break;
    case Algorithm::transfer_site: {
      std::vector<std::size_t> order(S);
      std::iota(order.begin(), order.end(), std::size_t{0});
      sim::Rng orng(order_seed(fl.seed, z));
      std::shuffle(order.begin(), order.end(), orng);
      std::vector<float> current = server.global_shared;
      for (std::size_t i : order) {
        ServerState hop;
        hop.round = z;
        hop.global_shared = std::move(current);
        outputs[i] = fedavg_client(hop, clients[i], config, options);
        current = outputs[i].upload;
      }
      server.global_shared = std::move(current);
      break;
    }
  }

  for (std::size_t i = 0; i < S; ++i) {
    report.messages.insert(report.messages.end(), outputs[i].log.begin(), outputs[i].log.end());
    report.train_loss.push_back(outputs[i].loss);
  }

  if (fl.algorithm == Algorithm::fedmri || fl.algorithm == Algorithm::fedavg || fl.algorithm == Algorithm::fedprox) {
    for (auto& o : outputs) report.uploads.push_back(o.upload);
    auto weights = aggregation_weights(fl.aggregation, clients);
    server.global_shared = server_aggregate(report.uploads, weights);
    server.prev_round_client_shared = report.uploads;
  } else if (fl.algorithm == Algorithm::transfer_site) {
    for (auto& o : outputs) report.uploads.push_back(o.upload);
  }
  report.global_after = server.global_shared;
  if (options.hooks.after_aggregate) options.hooks.after_aggregate(server);

  report.evaluations.resize(S);
  parallel_for(S, options.jobs, [&](std::size_t i) {
    report.evaluations[i] = evaluate(evaluation_model(server, clients[i], fl), clients[i].data,
                                     config.use_data_consistency);
  });

  for (std::size_t i = 0; i < S; ++i) {
    metrics::MetricsRecord r;
    r.round = z;
    r.client_id = clients[i].client_id;
    r.psnr = report.evaluations[i].mean_psnr;
    r.ssim = report.evaluations[i].mean_ssim;
    for (const auto& m : outputs[i].log) {
      if (m.direction == Direction::client_to_server)
        r.bytes_up += m.byte_count();
      else
        r.bytes_down += m.byte_count();
    }
    r.wall_ms = outputs[i].wall_ms;
    report.records.push_back(std::move(r));
  }
  server.round = z + 1;
  return report;
}

ExperimentResult run_experiment(const ExperimentConfig& config, const RunOptions& options) {
  auto clients = init_clients(config);
  auto server = init_server(clients);

  ExperimentResult result;
  result.shared_elements = clients.front().params.element_count(Partition::shared);
  result.total_elements = clients.front().params.element_count();
  for (const auto& c : clients) result.client_ids.push_back(c.client_id);

  std::vector<MessageRecord> all_messages;
  for (std::size_t z = 0; z < config.fl.rounds; ++z) {
    result.rounds.push_back(run_round(server, clients, config, options));
    const auto& m = result.rounds.back().messages;
    all_messages.insert(all_messages.end(), m.begin(), m.end());
  }
  result.comm = metrics::comm_report(all_messages);
  result.final_evaluations = result.rounds.back().evaluations;
  for (const auto& ev : result.final_evaluations) {
    result.mean_psnr += ev.mean_psnr;
    result.mean_ssim += ev.mean_ssim;
  }
  result.mean_psnr /= static_cast<double>(clients.size());
  result.mean_ssim /= static_cast<double>(clients.size());
  for (const auto& c : clients) result.final_models.push_back(evaluation_model(server, c, config.fl));
  return result;
}

}  // namespace fedmri::fed
