#include <doctest.h>

#include <boost/math/distributions/students_t.hpp>
#include <cmath>
#include <random>

#include "fedmri/errors.hpp"
#include "fedmri/message.hpp"
#include "fedmri/metrics.hpp"

using namespace fedmri;
using namespace fedmri::metrics;

namespace {

Tensor rand_img(std::size_t n, std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<float> u(0.0f, 1.0f);
  Tensor t({n, n});
  for (float& v : t.data()) v = u(rng);
  return t;
}

// window-by-window, straight from the definition
double ssim_oracle(const Tensor& x, const Tensor& y, std::size_t win) {
  const std::size_t h = x.dim(0), w = x.dim(1);
  const double c1 = 0.01 * 0.01, c2 = 0.03 * 0.03, n = double(win * win);
  double total = 0.0;
  std::size_t count = 0;
  for (std::size_t i = 0; i + win <= h; ++i)
    for (std::size_t j = 0; j + win <= w; ++j) {
      double mx = 0, my = 0;
      for (std::size_t a = 0; a < win; ++a)
        for (std::size_t b = 0; b < win; ++b) {
          mx += x[(i + a) * w + j + b];
          my += y[(i + a) * w + j + b];
        }
      mx /= n;
      my /= n;
      double vx = 0, vy = 0, cxy = 0;
      for (std::size_t a = 0; a < win; ++a)
        for (std::size_t b = 0; b < win; ++b) {
          const double dx = x[(i + a) * w + j + b] - mx, dy = y[(i + a) * w + j + b] - my;
          vx += dx * dx;
          vy += dy * dy;
          cxy += dx * dy;
        }
      vx /= n;
      vy /= n;
      cxy /= n;
      total += (2 * mx * my + c1) * (2 * cxy + c2) / ((mx * mx + my * my + c1) * (vx + vy + c2));
      ++count;
    }
  return total / double(count);
}

}  // namespace

TEST_CASE("psnr examples") {
  Tensor y = rand_img(8, 1);
  CHECK(psnr(y, y) == kPsnrCap);
  CHECK(psnr(Tensor::filled({4, 4}, 0.1f), Tensor::zeros({4, 4})) == doctest::Approx(20.0).epsilon(1e-6));
  CHECK_THROWS_AS(psnr(y, Tensor::zeros({4, 4})), DimensionError);

  Tensor x = rand_img(8, 2);
  double mse = 0.0;
  for (std::size_t i = 0; i < 64; ++i) mse += (double(x[i]) - y[i]) * (double(x[i]) - y[i]);
  mse /= 64.0;
  CHECK(std::abs(psnr(x, y) - 10.0 * std::log10(1.0 / mse)) < 1e-9);
  CHECK(psnr(x, y, 2.0) == doctest::Approx(10.0 * std::log10(4.0 / mse)));
}

TEST_CASE("psnr ignores a common offset") {
  Tensor x({4}, {0.0f, 0.25f, 0.5f, 0.75f}), y({4}, {0.25f, 0.25f, 0.5f, 0.5f});
  Tensor xs = x, ys = y;
  for (std::size_t i = 0; i < 4; ++i) {
    xs[i] += 2.0f;
    ys[i] += 2.0f;
  }
  CHECK(psnr(xs, ys) == psnr(x, y));
}

TEST_CASE("ssim examples") {
  Tensor y = rand_img(16, 4);
  CHECK(ssim(y, y) == 1.0);
  Tensor inv = y;
  for (float& v : inv.data()) v = 1.0f - v;
  CHECK(ssim(inv, y) < 1.0);
  CHECK_THROWS_AS(ssim(Tensor::zeros({6, 6}), Tensor::zeros({6, 6})), DimensionError);
  CHECK_THROWS_AS(ssim(y, Tensor::zeros({8, 8})), DimensionError);
  Tensor flat = Tensor::filled({8, 8}, 0.3f);
  CHECK(ssim(flat, flat) == 1.0);
}

TEST_CASE("ssim matches a direct window computation") {
  Tensor x = rand_img(12, 5), y = rand_img(12, 6);
  CHECK(std::abs(ssim(x, y) - ssim_oracle(x, y, 7)) < 1e-9);
}

TEST_CASE("ssim frozen value") {
  std::mt19937_64 rng(3);
  std::uniform_real_distribution<float> u(0.0f, 1.0f);
  Tensor x({16, 16}), y({16, 16});
  for (std::size_t i = 0; i < 256; ++i) x[i] = u(rng);
  for (std::size_t i = 0; i < 256; ++i) y[i] = 0.5f * x[i] + 0.5f * u(rng);
  CHECK(std::abs(ssim(x, y) - 0.667618968) <= 1e-6);
}

TEST_CASE("paired t-test examples") {
  std::vector<double> a{1.0, 2.0, 3.0}, b = a;
  auto same = paired_ttest(a, b);
  CHECK(same.t == 0.0);
  CHECK(same.p == 1.0);

  std::vector<double> z(4, 0.0), ones(4, 1.0);
  CHECK(paired_ttest(ones, z).p == 0.0);

  std::vector<double> d{1, -1, 2, 0, 3}, zero(5, 0.0);
  auto r = paired_ttest(d, zero);
  // mean 1, sample sd sqrt(2.5)
  const double t = 1.0 / (std::sqrt(2.5) / std::sqrt(5.0));
  CHECK(std::abs(r.t - t) < 1e-9);
  boost::math::students_t dist(4.0);
  CHECK(std::abs(r.p - 2.0 * boost::math::cdf(boost::math::complement(dist, t))) < 1e-6);

  auto flipped = paired_ttest(zero, d);
  CHECK(flipped.t == -r.t);
  CHECK(flipped.p == r.p);

  std::vector<double> one{1.0};
  CHECK_THROWS_AS(paired_ttest(one, one), ConfigError);
  CHECK_THROWS_AS(paired_ttest(a, ones), DimensionError);
}

TEST_CASE("t tail probability agrees with boost") {
  for (double df : {1.0, 2.0, 4.0, 11.0, 30.0, 200.0})
    for (double t : {0.0, 0.1, 0.7, 1.5, 2.3, 4.0, 9.0, -3.0}) {
      boost::math::students_t dist(df);
      const double ref = 2.0 * boost::math::cdf(boost::math::complement(dist, std::abs(t)));
      CHECK(std::abs(student_t_two_sided_p(t, df) - ref) < 1e-6);
    }
  CHECK(incomplete_beta(2.0, 3.0, 0.0) == 0.0);
  CHECK(incomplete_beta(2.0, 3.0, 1.0) == 1.0);
  // I_x(1, 1) = x
  CHECK(incomplete_beta(1.0, 1.0, 0.37) == doctest::Approx(0.37).epsilon(1e-12));
}

TEST_CASE("comm report") {
  std::vector<fed::MessageRecord> none;
  auto empty = comm_report(std::span<const fed::MessageRecord>(none));
  CHECK(empty.total_up() == 0);
  CHECK(empty.total_down() == 0);

  fed::RoundMessage m;
  m.direction = fed::Direction::client_to_server;
  m.client_id = "a";
  m.segments = {{"w", 10}};
  m.payload.assign(10, 1.0f);
  std::vector<fed::RoundMessage> ms{m};
  auto r = comm_report(std::span<const fed::RoundMessage>(ms));
  CHECK(r.model_payload_up == 40);
  CHECK(r.manifest_up == m.manifest_bytes());
  CHECK(r.total_up() == 40 + m.manifest_bytes());
  CHECK(r.total_down() == 0);

  m.direction = fed::Direction::server_to_client;
  m.payload_class = fed::PayloadClass::negatives;
  ms.push_back(m);
  r = comm_report(std::span<const fed::RoundMessage>(ms));
  CHECK(r.negatives_payload_down == 40);
  CHECK(r.model_payload_down == 0);
}
