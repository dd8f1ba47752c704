#pragma once

#include <cstdint>
#include <span>
#include <string>
#include <vector>

#include "fedmri/message.hpp"
#include "fedmri/tensor.hpp"

namespace fedmri::metrics {

inline constexpr double kPsnrCap = 100.0;

struct MetricsRecord {
  std::size_t round = 0;
  std::string client_id;
  double psnr = 0.0;  // dB, capped at 100
  double ssim = 0.0;
  std::uint64_t bytes_up = 0;
  std::uint64_t bytes_down = 0;
  double wall_ms = 0.0;
};

/// 10·log10(range² / MSE), 100 dB when MSE = 0.
double psnr(const Tensor& x, const Tensor& y, double data_range = 1.0);

struct SsimOptions {
  std::size_t window = 7;
  double k1 = 0.01;
  double k2 = 0.03;
  double data_range = 1.0;
};

/// Mean SSIM over all valid positions of a uniform window (no padding),
/// using population statistics inside each window.
double ssim(const Tensor& x, const Tensor& y, const SsimOptions& options = {});

struct TTestResult {
  double t = 0.0;
  double p = 1.0;
};

/// Paired two-sided Student's t-test on a − b. With zero-variance
/// differences p is 1 when the mean difference is 0 and 0 otherwise.
TTestResult paired_ttest(std::span<const double> a, std::span<const double> b);

/// Regularized incomplete beta I_x(a, b) via Lentz's continued fraction.
double incomplete_beta(double a, double b, double x);
/// Two-sided tail probability P(|T| ≥ |t|) for Student's t with df degrees of freedom.
double student_t_two_sided_p(double t, double df);

struct CommReport {
  std::uint64_t model_payload_up = 0;
  std::uint64_t model_payload_down = 0;
  std::uint64_t negatives_payload_down = 0;
  std::uint64_t negatives_payload_up = 0;
  std::uint64_t manifest_up = 0;
  std::uint64_t manifest_down = 0;

  std::uint64_t total_up() const { return model_payload_up + negatives_payload_up + manifest_up; }
  std::uint64_t total_down() const { return model_payload_down + negatives_payload_down + manifest_down; }
  std::uint64_t model_payload() const { return model_payload_up + model_payload_down; }
};

CommReport comm_report(std::span<const fed::MessageRecord> records);
CommReport comm_report(std::span<const fed::RoundMessage> messages);

}  // namespace fedmri::metrics
