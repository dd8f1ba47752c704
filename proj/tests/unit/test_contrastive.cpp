#include <doctest.h>

#include <cmath>
#include <random>

#include "fedmri/contrastive.hpp"
#include "fedmri/errors.hpp"
#include "fedmri/message.hpp"

using namespace fedmri;
using namespace fedmri::fed;

namespace {

std::vector<float> rand_vec(std::size_t n, std::mt19937_64& rng) {
  std::uniform_real_distribution<float> u(-1.0f, 1.0f);
  std::vector<float> v(n);
  for (float& x : v) x = u(rng);
  return v;
}

std::vector<VectorView> views(const std::vector<std::vector<float>>& vs) {
  return {vs.begin(), vs.end()};
}

// Central differences in double, perturbing one coordinate of a float anchor.
double numeric_partial(std::vector<float> a, std::size_t i, VectorView p, const std::vector<VectorView>& q,
                       ContrastiveKind kind, double h) {
  const float x = a[i];
  a[i] = static_cast<float>(x + h);
  const double hp = double(a[i]) - x;
  const double up = contrastive_loss(a, p, q, kind).value;
  a[i] = static_cast<float>(x - h);
  const double hm = x - double(a[i]);
  const double dn = contrastive_loss(a, p, q, kind).value;
  return (up - dn) / (hp + hm);
}

}  // namespace

TEST_CASE("contrastive examples") {
  std::vector<float> a{1.0f}, p{0.0f}, q1{2.0f}, q2{0.0f};
  std::vector<VectorView> negs{q1, q2};
  CHECK(contrastive_loss(a, p, negs, ContrastiveKind::l1).value == doctest::Approx(0.5));
  auto g = contrastive_grad_l1(a, p, negs);
  REQUIRE(g.size() == 1);
  CHECK(g[0] == doctest::Approx(0.5));

  for (auto kind : {ContrastiveKind::l1, ContrastiveKind::l2}) {
    CHECK(contrastive_loss(a, a, negs, kind).value == 0.0);
  }
  for (double v : contrastive_grad_l1(a, a, negs)) CHECK(v == 0.0);
}

TEST_CASE("contrastive errors and skips") {
  std::vector<float> a{1.0f, 2.0f}, p{0.0f, 1.0f}, bad{1.0f};
  CHECK_THROWS_AS(contrastive_loss(a, p, {}, ContrastiveKind::l1), ConfigError);
  CHECK_THROWS_AS(contrastive_loss(a, bad, {a}, ContrastiveKind::l1), DimensionError);
  CHECK_THROWS_AS(contrastive_loss(a, p, {bad}, ContrastiveKind::l2), DimensionError);
  CHECK_THROWS_AS(contrastive_grad_l1(a, p, {bad}), DimensionError);

  auto degenerate = contrastive_loss(a, p, {a, a}, ContrastiveKind::l1);
  CHECK(degenerate.skipped);
  CHECK(degenerate.value == 0.0);
  for (double v : contrastive_grad_l1(a, p, {a, a})) CHECK(v == 0.0);

  auto off = contrastive_loss(a, p, {p}, ContrastiveKind::off);
  CHECK(off.skipped);
  for (double v : contrastive_grad(a, p, {p}, ContrastiveKind::off)) CHECK(v == 0.0);

  for (auto k : {ContrastiveKind::l1, ContrastiveKind::l2, ContrastiveKind::ntxent, ContrastiveKind::off})
    CHECK(contrastive_kind_from_string(to_string(k)) == k);
  CHECK_THROWS_AS(contrastive_kind_from_string("cosine"), ConfigError);
}

TEST_CASE("contrastive ratio is scale invariant") {
  std::mt19937_64 rng(1);
  auto a = rand_vec(30, rng), p = rand_vec(30, rng);
  std::vector<std::vector<float>> q{rand_vec(30, rng), rand_vec(30, rng), rand_vec(30, rng)};
  auto sc = [](std::vector<float> v) {
    for (float& x : v) x *= 3.7f;
    return v;
  };
  std::vector<std::vector<float>> qs;
  for (auto& v : q) qs.push_back(sc(v));
  for (auto kind : {ContrastiveKind::l1, ContrastiveKind::l2}) {
    const double base = contrastive_loss(a, p, views(q), kind).value;
    const double scaled = contrastive_loss(sc(a), sc(p), views(qs), kind).value;
    CHECK(std::abs(scaled - base) <= 1e-6 * std::abs(base));
  }
}

TEST_CASE("l1 gradient matches finite differences") {
  std::mt19937_64 rng(2);
  auto a = rand_vec(50, rng), p = rand_vec(50, rng);
  std::vector<std::vector<float>> q{rand_vec(50, rng), rand_vec(50, rng), rand_vec(50, rng), rand_vec(50, rng)};
  auto negs = views(q);
  auto g = contrastive_grad_l1(a, p, negs);
  const double h = 1e-3;
  for (std::size_t i = 0; i < 50; ++i) {
    // skip coordinates within h of a kink
    bool near = std::abs(a[i] - p[i]) < 2 * h;
    for (auto& v : q) near |= std::abs(a[i] - v[i]) < 2 * h;
    if (near) continue;
    const double num = numeric_partial(a, i, p, negs, ContrastiveKind::l1, h);
    CHECK(std::abs(g[i] - num) <= 1e-4 * std::max(std::abs(num), 1e-3));
  }
  auto gk = contrastive_grad(a, p, negs, ContrastiveKind::l1);
  CHECK(gk == g);
}

TEST_CASE("l2 and ntxent gradients match finite differences") {
  std::mt19937_64 rng(3);
  auto a = rand_vec(20, rng), p = rand_vec(20, rng);
  std::vector<std::vector<float>> q{rand_vec(20, rng), rand_vec(20, rng)};
  auto negs = views(q);
  for (auto kind : {ContrastiveKind::l2, ContrastiveKind::ntxent}) {
    auto g = contrastive_grad(a, p, negs, kind);
    for (std::size_t i = 0; i < 20; ++i) {
      const double num = numeric_partial(a, i, p, negs, kind, 1e-2);
      CHECK(std::abs(g[i] - num) <= 1e-3 * std::max(std::abs(num), 1e-2));
    }
  }
}

TEST_CASE("ntxent value") {
  std::vector<float> a{1.0f, 0.0f}, p{1.0f, 0.0f}, q{0.0f, 1.0f};
  // cos(a,p)=1, cos(a,q)=0, tau 0.5
  const double expected = -std::log(std::exp(2.0) / (std::exp(2.0) + std::exp(0.0)));
  CHECK(contrastive_loss(a, p, {q}, ContrastiveKind::ntxent).value == doctest::Approx(expected));
}

TEST_CASE("round message wire format") {
  RoundMessage m;
  m.direction = Direction::client_to_server;
  m.payload_class = PayloadClass::negatives;
  m.round = 3;
  m.client_id = "site2";
  m.segments = {{"a.w", 3}, {"b.w", 2}};
  m.vectors = 2;
  m.payload = {1, 2, 3, 4, 5, 6, 7, 8, 9, 10};
  auto bytes = m.encode();
  CHECK(bytes.size() == m.byte_count());
  CHECK(m.byte_count() == m.manifest().size() + 40);
  CHECK(m.manifest().back() == '\n');
  auto back = RoundMessage::decode(bytes);
  CHECK(back == m);
  CHECK(back.vector(1)[0] == 6.0f);
  auto rec = make_record(m);
  CHECK(rec.payload_bytes == 40);
  CHECK(rec.byte_count() == m.byte_count());

  bytes.pop_back();
  CHECK_THROWS_AS(RoundMessage::decode(bytes), FormatError);
  std::vector<std::uint8_t> junk{'{', 'x'};
  CHECK_THROWS_AS(RoundMessage::decode(junk), FormatError);
}
