#include <doctest.h>

#include <algorithm>
#include <numeric>
#include <random>

#include "fedmri/config.hpp"
#include "fedmri/errors.hpp"
#include "fedmri/federated.hpp"
#include "fedmri/layers.hpp"

using namespace fedmri;
using namespace fedmri::fed;

namespace {

const sim::MaskKind kKinds[] = {sim::MaskKind::uniform1d, sim::MaskKind::cartesian1d, sim::MaskKind::radial2d,
                                sim::MaskKind::random2d};

ExperimentConfig small_config(std::size_t clients, Algorithm alg = Algorithm::fedmri) {
  ExperimentConfig c;
  c.fl.algorithm = alg;
  c.fl.rounds = 2;
  c.fl.local_epochs = 1;
  c.fl.lr = 1e-3;
  c.fl.batch = 2;
  c.fl.seed = 3;
  for (std::size_t i = 0; i < clients; ++i) {
    sim::ClientProfile p;
    p.client_id = "c" + std::to_string(i);
    p.intensity_mean = 0.3 + 0.1 * double(i);
    p.mask_spec.kind = kKinds[i % 4];
    p.mask_spec.acceleration = 3.0 + double(i);
    p.mask_spec.height = p.mask_spec.width = 16;
    p.n_train = 4;
    p.n_test = 2;
    c.clients.push_back(p);
  }
  return c;
}

std::vector<float> flat(const recon::ParameterSet& p, recon::Partition part) { return p.flatten(part); }

double l1_dist(std::span<const float> a, std::span<const float> b) {
  double s = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) s += std::abs(double(a[i]) - b[i]);
  return s;
}

// Replace every target by the model's own output, so the reconstruction loss is exactly 0.
void make_targets_fixed_point(ClientState& c, bool dc) {
  for (auto& s : c.data.train) s.y = recon::reconstruct(c.params, s.k_meas, c.data.mask.bits, dc);
}

double train_loss(ClientState& c, bool dc) {
  double total = 0.0;
  for (const auto& s : c.data.train) {
    ad::Tape tape;
    total += tape.scalar(recon::reconstruction_loss(tape, c.params, s.k_meas, c.data.mask.bits, s.y, dc,
                                                    recon::GradScope::none));
  }
  return total / double(c.data.train.size());
}

std::vector<std::string> csv_rows(const ExperimentResult& r) {
  std::vector<std::string> rows;
  for (const auto& rep : r.rounds)
    for (const auto& m : rep.records) {
      char buf[256];
      std::snprintf(buf, sizeof buf, "%zu,%s,%.17g,%.17g,%llu,%llu", m.round, m.client_id.c_str(), m.psnr, m.ssim,
                    (unsigned long long)m.bytes_up, (unsigned long long)m.bytes_down);
      rows.push_back(buf);
    }
  return rows;
}

}  // namespace

TEST_CASE("aggregate examples") {
  std::vector<std::vector<float>> v{{2.0f}, {4.0f}};
  std::vector<double> uni{0.5, 0.5}, skew{0.25, 0.75};
  CHECK(server_aggregate(v, uni) == std::vector<float>{3.0f});
  CHECK(server_aggregate(v, skew) == std::vector<float>{3.5f});
  std::vector<double> bad{0.5, 0.5 + 1e-8};
  CHECK_THROWS_AS(server_aggregate(v, bad), ConfigError);
  std::vector<double> close{0.5, 0.5 + 1e-10};
  CHECK_NOTHROW(server_aggregate(v, close));
  std::vector<std::vector<float>> ragged{{1.0f}, {1.0f, 2.0f}};
  CHECK_THROWS_AS(server_aggregate(ragged, uni), DimensionError);
}

TEST_CASE("aggregate matches an independent summation") {
  std::mt19937_64 rng(7);
  std::normal_distribution<float> n(0.0f, 3.0f);
  std::vector<std::vector<float>> v(5, std::vector<float>(100));
  for (auto& x : v)
    for (float& e : x) e = n(rng);
  std::vector<double> w(5, 0.2);
  auto got = server_aggregate(v, w);
  for (std::size_t i = 0; i < 100; ++i) {
    long double acc = 0.0L;
    for (std::size_t s = 5; s-- > 0;) acc += (long double)v[s][i] / 5.0L;
    CHECK(std::abs(double(got[i]) - double(acc)) <= 1e-7 * std::max(1.0, std::abs(double(acc))) + 5e-7);
  }

  auto perm = v;
  std::reverse(perm.begin(), perm.end());
  std::swap(perm[0], perm[2]);
  CHECK(server_aggregate(perm, w) == got);
}

TEST_CASE("aggregation weights") {
  auto cfg = small_config(3);
  cfg.clients[1].n_train = 8;
  auto clients = init_clients(cfg);
  auto uni = aggregation_weights(Aggregation::uniform, clients);
  CHECK(uni == std::vector<double>(3, 1.0 / 3.0));
  auto prop = aggregation_weights(Aggregation::data_proportion, clients);
  CHECK(prop[0] == doctest::Approx(0.25));
  CHECK(prop[1] == doctest::Approx(0.5));
  CHECK(std::abs(std::accumulate(prop.begin(), prop.end(), 0.0) - 1.0) < 1e-12);
}

TEST_CASE("config validation") {
  auto ok = small_config(2);
  CHECK_NOTHROW(validate(ok));
  auto bad = ok;
  bad.fl.rounds = 0;
  CHECK_THROWS_AS(validate(bad), ConfigError);
  bad = ok;
  bad.fl.local_epochs = 0;
  CHECK_THROWS_AS(validate(bad), ConfigError);
  bad = ok;
  bad.fl.lr = 0.0;
  CHECK_THROWS_AS(validate(bad), ConfigError);
  bad = ok;
  bad.fl.mu = -1.0;
  CHECK_THROWS_AS(validate(bad), ConfigError);
  bad = ok;
  bad.fl.batch = 0;
  CHECK_THROWS_AS(validate(bad), ConfigError);
  bad = ok;
  bad.clients.clear();
  CHECK_THROWS_AS(validate(bad), ConfigError);
  bad = ok;
  bad.clients[1].client_id = "c0";
  CHECK_THROWS_AS(validate(bad), ConfigError);
  CHECK(effective_partition(small_config(1, Algorithm::fedavg).fl) == recon::PartitionMode::all_shared);
  for (auto a : {Algorithm::fedmri, Algorithm::fedavg, Algorithm::fedprox, Algorithm::singleset, Algorithm::transfer_site})
    CHECK(algorithm_from_string(to_string(a)) == a);
}

TEST_CASE("local update freezes the shared partition") {
  auto cfg = small_config(1);
  auto clients = init_clients(cfg);
  auto& c = clients[0];
  const auto global = flat(c.params, recon::Partition::shared);
  const auto local = flat(c.params, recon::Partition::local);
  auto rng = client_round_rng(cfg.fl.seed, c.client_id, 1);
  client_local_update(c, global, 2, cfg, rng);
  CHECK(flat(c.params, recon::Partition::shared) == global);
  CHECK(flat(c.params, recon::Partition::local) != local);

  ServerState server = init_server(clients);
  const auto local_after = flat(c.params, recon::Partition::local);
  auto up = client_encoder_update(c, server.global_shared, server, cfg, rng);
  CHECK(flat(c.params, recon::Partition::local) == local_after);
  CHECK(up == flat(c.params, recon::Partition::shared));
  CHECK(up != global);

  CHECK_THROWS_AS(client_local_update(c, global, 0, cfg, rng), ConfigError);
  std::vector<float> short_vec(global.size() - 1);
  CHECK_THROWS_AS(client_local_update(c, short_vec, 1, cfg, rng), DimensionError);
  c.data.train.clear();
  CHECK_THROWS_AS(client_local_update(c, global, 1, cfg, rng), ConfigError);
}

TEST_CASE("zero gradient is a fixed point") {
  auto cfg = small_config(1);
  auto clients = init_clients(cfg);
  auto& c = clients[0];
  make_targets_fixed_point(c, cfg.use_data_consistency);
  const auto before = c.params.flatten_all();
  auto rng = client_round_rng(0, c.client_id, 1);
  client_local_update(c, c.params.flatten(recon::Partition::shared), 1, cfg, rng);
  CHECK(c.params.flatten_all() == before);
}

TEST_CASE("encoder update moves toward the positive") {
  auto cfg = small_config(1);
  cfg.fl.mu = 1.0;
  cfg.fl.lr = 1e-6;
  cfg.fl.batch = 4;
  auto clients = init_clients(cfg);
  auto& c = clients[0];
  const auto anchor = flat(c.params, recon::Partition::shared);
  std::mt19937_64 g(1);
  std::normal_distribution<float> n(0.0f, 0.05f);
  std::vector<float> positive = anchor;
  for (float& v : positive) v += n(g);
  std::vector<float> far_up = anchor, far_down = anchor;
  for (float& v : far_up) v += 10.0f;
  for (float& v : far_down) v -= 10.0f;
  make_targets_fixed_point(c, cfg.use_data_consistency);

  ServerState server;
  server.round = 2;
  server.global_shared = positive;
  server.prev_round_client_shared = {far_up, far_down};
  auto rng = client_round_rng(0, c.client_id, 2);
  auto moved = client_encoder_update(c, positive, server, cfg, rng);
  CHECK(l1_dist(moved, positive) < l1_dist(anchor, positive));
}

TEST_CASE("contrastive term removal and first-round skip") {
  auto run = [](double mu, std::size_t round) {
    auto cfg = small_config(2);
    cfg.fl.mu = mu;
    auto clients = init_clients(cfg);
    ServerState server = init_server(clients);
    server.round = round;
    std::vector<float> other = server.global_shared;
    for (float& v : other) v *= 0.5f;
    if (round > 1) server.prev_round_client_shared = {other, server.global_shared};
    auto rng = client_round_rng(cfg.fl.seed, clients[0].client_id, round);
    auto& c = clients[0];
    client_local_update(c, server.global_shared, 1, cfg, rng);
    return client_encoder_update(c, server.global_shared, server, cfg, rng);
  };
  CHECK(run(100.0, 1) == run(0.0, 1));
  CHECK(run(100.0, 2) != run(0.0, 2));

  // mu = 0 matches an encoder epoch with the term switched off
  auto off = [](ContrastiveKind kind, double mu) {
    auto cfg = small_config(2);
    cfg.fl.mu = mu;
    cfg.fl.contrastive_kind = kind;
    auto clients = init_clients(cfg);
    ServerState server = init_server(clients);
    server.round = 2;
    server.prev_round_client_shared = {server.global_shared, server.global_shared};
    for (float& v : server.prev_round_client_shared[0]) v += 0.1f;
    auto rng = client_round_rng(cfg.fl.seed, clients[0].client_id, 2);
    return client_encoder_update(clients[0], server.global_shared, server, cfg, rng);
  };
  CHECK(off(ContrastiveKind::l1, 0.0) == off(ContrastiveKind::off, 100.0));
}

TEST_CASE("more local epochs lower the training loss") {
  auto presets = preset("scenario2");
  int wins = 0;
  for (std::uint64_t seed = 0; seed < 5; ++seed) {
    ExperimentConfig cfg = presets;
    cfg.fl.seed = seed;
    cfg.clients.resize(1);
    auto run = [&](std::size_t epochs) {
      auto clients = init_clients(cfg);
      auto& c = clients[0];
      auto rng = client_round_rng(seed, c.client_id, 1);
      client_local_update(c, c.params.flatten(recon::Partition::shared), epochs, cfg, rng);
      return train_loss(c, cfg.use_data_consistency);
    };
    const double l5 = run(5), l1 = run(1);
    INFO("seed " << seed << " T=1 " << l1 << " T=5 " << l5);
    wins += l5 <= l1;
  }
  CHECK(wins >= 4);
}

TEST_CASE("single client aggregation is the identity") {
  auto cfg = small_config(1);
  auto clients = init_clients(cfg);
  ServerState server = init_server(clients);
  auto rep = run_round(server, clients, cfg);
  REQUIRE(rep.uploads.size() == 1);
  CHECK(rep.global_after == rep.uploads[0]);
  CHECK(server.global_shared == rep.uploads[0]);
  CHECK(server.round == 2);
}

TEST_CASE("fedavg on identical clients") {
  auto cfg = small_config(1, Algorithm::fedavg);
  auto clients = init_clients(cfg);
  clients.push_back(clients[0]);
  ServerState server = init_server(clients);
  auto before = server.global_shared;
  auto rep = run_round(server, clients, cfg);
  REQUIRE(rep.uploads.size() == 2);
  CHECK(rep.uploads[0] == rep.uploads[1]);
  CHECK(rep.global_after == rep.uploads[0]);
  CHECK(rep.global_after != before);
}

TEST_CASE("fedmri sends the shared fraction of fedavg") {
  auto bytes = [](Algorithm alg) {
    auto cfg = small_config(2, alg);
    auto clients = init_clients(cfg);
    ServerState server = init_server(clients);
    std::uint64_t up = 0, down = 0, neg = 0;
    for (int z = 0; z < 2; ++z) {
      auto rep = run_round(server, clients, cfg);
      for (const auto& m : rep.messages) {
        if (m.payload_class == PayloadClass::negatives) neg += m.payload_bytes;
        else if (m.direction == Direction::client_to_server) up += m.payload_bytes;
        else down += m.payload_bytes;
      }
    }
    return std::tuple{up, down, neg};
  };
  auto [mu, md, mn] = bytes(Algorithm::fedmri);
  auto [au, ad_, an] = bytes(Algorithm::fedavg);
  CHECK(mu * 13043 == au * 8376);
  CHECK(md * 13043 == ad_ * 8376);
  CHECK(an == 0);
  // round 2 only: S clients each receive S vectors
  CHECK(mn == 2 * 2 * 8376 * 4);
}

TEST_CASE("negatives are last round's uploads") {
  auto cfg = small_config(3);
  auto clients = init_clients(cfg);
  ServerState server = init_server(clients);
  std::vector<std::vector<std::vector<float>>> seen(3);
  std::vector<std::vector<float>> positives(3);
  RunOptions opts;
  opts.hooks.on_contrastive_inputs = [&](const ClientState& c, std::size_t round, const ContrastiveInputs& in) {
    CHECK(round == 2);
    const std::size_t i = std::size_t(c.client_id[1] - '0');
    for (auto v : in.negatives) seen[i].emplace_back(v.begin(), v.end());
    positives[i].assign(in.positive.begin(), in.positive.end());
  };
  auto r1 = run_round(server, clients, cfg, opts);
  CHECK(server.prev_round_client_shared == r1.uploads);
  run_round(server, clients, cfg, opts);
  for (std::size_t i = 0; i < 3; ++i) {
    CHECK(seen[i] == r1.uploads);
    CHECK(positives[i] == r1.global_after);
  }
}

TEST_CASE("worker count does not change results") {
  auto cfg = small_config(3);
  RunOptions one, two;
  two.jobs = 2;
  auto a = run_experiment(cfg, one);
  auto b = run_experiment(cfg, two);
  CHECK(csv_rows(a) == csv_rows(b));
  for (std::size_t z = 0; z < a.rounds.size(); ++z) CHECK(a.rounds[z].global_after == b.rounds[z].global_after);
}

TEST_CASE("experiment round count and determinism") {
  auto cfg = small_config(2);
  cfg.fl.rounds = 1;
  auto a = run_experiment(cfg);
  CHECK(a.rounds.size() == 1);
  CHECK(a.final_evaluations.size() == 2);
  CHECK(a.shared_elements == 8376);
  CHECK(a.total_elements == 13043);
  CHECK(csv_rows(a) == csv_rows(run_experiment(cfg)));
  cfg.fl.rounds = 0;
  CHECK_THROWS_AS(run_experiment(cfg), ConfigError);
}

TEST_CASE("fedmri reduces to fedavg") {
  auto cfg = small_config(3);
  cfg.fl.partition_mode = recon::PartitionMode::all_shared;
  cfg.fl.mu = 0.0;
  cfg.fl.joint_local_update = true;
  auto avg = cfg;
  avg.fl.algorithm = Algorithm::fedavg;
  auto a = run_experiment(cfg);
  auto b = run_experiment(avg);
  REQUIRE(a.rounds.size() == b.rounds.size());
  for (std::size_t z = 0; z < a.rounds.size(); ++z) {
    CHECK(a.rounds[z].uploads == b.rounds[z].uploads);
    CHECK(a.rounds[z].global_after == b.rounds[z].global_after);
  }
}

TEST_CASE("fedprox with zero weight is fedavg") {
  auto cfg = small_config(2, Algorithm::fedprox);
  cfg.fl.mu_prox = 0.0;
  auto avg = cfg;
  avg.fl.algorithm = Algorithm::fedavg;
  auto a = run_experiment(cfg);
  CHECK(a.rounds.back().global_after == run_experiment(avg).rounds.back().global_after);
  cfg.fl.mu_prox = 1.0;
  CHECK(run_experiment(cfg).rounds.back().global_after != a.rounds.back().global_after);
}

TEST_CASE("singleset and transfer-site") {
  auto cfg = small_config(3, Algorithm::singleset);
  auto s = run_experiment(cfg);
  for (const auto& rep : s.rounds) CHECK(rep.messages.empty());
  CHECK(s.comm.total_up() + s.comm.total_down() == 0);

  cfg.fl.algorithm = Algorithm::transfer_site;
  auto clients = init_clients(cfg);
  ServerState server = init_server(clients);
  auto rep = run_round(server, clients, cfg);
  // every client sees the travelling model once
  CHECK(rep.messages.size() >= 3);
  CHECK(rep.records.size() == 3);
  CHECK(csv_rows(run_experiment(cfg)) == csv_rows(run_experiment(cfg)));
}

TEST_CASE("rng streams are keyed by purpose") {
  CHECK(stable_hash("site1") == stable_hash("site1"));
  CHECK(stable_hash("site1") != stable_hash("site2"));
  auto a = client_round_rng(1, "x", 1), b = client_round_rng(1, "x", 1), c = client_round_rng(1, "x", 2);
  const auto va = a();
  CHECK(va == b());
  CHECK(va != c());
  CHECK(dataset_seed(1, "x") != dataset_seed(1, "y"));
}
