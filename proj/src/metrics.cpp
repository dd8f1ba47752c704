#include "fedmri/metrics.hpp"

#include <cmath>
#include <limits>
#include <numeric>

#include "fedmri/errors.hpp"

namespace fedmri::metrics {

double psnr(const Tensor& x, const Tensor& y, double data_range) {
  require_same_shape(x, y, "psnr");
  if (x.is_complex() || y.is_complex()) throw DtypeError("psnr expects real32 images");
  double sse = 0.0;
  for (std::size_t i = 0; i < x.numel(); ++i) {
    const double d = static_cast<double>(x[i]) - static_cast<double>(y[i]);
    sse += d * d;
  }
  const double mse = sse / static_cast<double>(x.numel());
  if (mse == 0.0) return kPsnrCap;
  return std::min(kPsnrCap, 10.0 * std::log10(data_range * data_range / mse));
}

double ssim(const Tensor& x, const Tensor& y, const SsimOptions& o) {
  require_same_shape(x, y, "ssim");
  if (x.is_complex() || x.rank() != 2) throw DimensionError("ssim expects real32 H×W images");
  const std::size_t h = x.dim(0), w = x.dim(1), k = o.window;
  if (h < k || w < k)
    throw DimensionError("ssim: image " + shape_string(x.shape()) + " is smaller than the " + std::to_string(k) +
                         "×" + std::to_string(k) + " window");
  const double c1 = (o.k1 * o.data_range) * (o.k1 * o.data_range);
  const double c2 = (o.k2 * o.data_range) * (o.k2 * o.data_range);
  const double count = static_cast<double>(k * k);

  double total = 0.0;
  std::size_t windows = 0;
  for (std::size_t r = 0; r + k <= h; ++r) {
    for (std::size_t c = 0; c + k <= w; ++c) {
      double sx = 0, sy = 0, sxx = 0, syy = 0, sxy = 0;
      for (std::size_t i = 0; i < k; ++i) {
        for (std::size_t j = 0; j < k; ++j) {
          const double a = x[(r + i) * w + c + j];
          const double b = y[(r + i) * w + c + j];
          sx += a;
          sy += b;
          sxx += a * a;
          syy += b * b;
          sxy += a * b;
        }
      }
      const double mx = sx / count, my = sy / count;
      const double vx = sxx / count - mx * mx;
      const double vy = syy / count - my * my;
      const double cxy = sxy / count - mx * my;
      const double num = (2.0 * (mx * my) + c1) * (2.0 * cxy + c2);
      const double den = ((mx * mx) + (my * my) + c1) * (vx + vy + c2);
      total += num / den;
      ++windows;
    }
  }
  return total / static_cast<double>(windows);
}

double incomplete_beta(double a, double b, double x) {
  if (x < 0.0 || x > 1.0) throw ConfigError("incomplete_beta: x must lie in [0, 1]");
  if (x == 0.0 || x == 1.0) return x;
  const double ln_front = std::lgamma(a + b) - std::lgamma(a) - std::lgamma(b) + a * std::log(x) + b * std::log1p(-x);

  // Continued fraction converges quickly for x < (a+1)/(a+b+2); use the
  // symmetry I_x(a,b) = 1 - I_{1-x}(b,a) otherwise.
  auto cf = [](double a, double b, double x) {
    constexpr double tiny = 1e-300;
    constexpr double eps = 1e-15;
    const double qab = a + b, qap = a + 1.0, qam = a - 1.0;
    double c = 1.0;
    double d = 1.0 - qab * x / qap;
    if (std::abs(d) < tiny) d = tiny;
    d = 1.0 / d;
    double h = d;
    for (int m = 1; m <= 10000; ++m) {
      const double m2 = 2.0 * m;
      double aa = m * (b - m) * x / ((qam + m2) * (a + m2));
      d = 1.0 + aa * d;
      if (std::abs(d) < tiny) d = tiny;
      c = 1.0 + aa / c;
      if (std::abs(c) < tiny) c = tiny;
      d = 1.0 / d;
      h *= d * c;
      aa = -(a + m) * (qab + m) * x / ((a + m2) * (qap + m2));
      d = 1.0 + aa * d;
      if (std::abs(d) < tiny) d = tiny;
      c = 1.0 + aa / c;
      if (std::abs(c) < tiny) c = tiny;
      d = 1.0 / d;
      const double del = d * c;
      h *= del;
      if (std::abs(del - 1.0) < eps) break;
    }
    return h;
  };

  if (x < (a + 1.0) / (a + b + 2.0)) return std::exp(ln_front) * cf(a, b, x) / a;
  return 1.0 - std::exp(ln_front) * cf(b, a, 1.0 - x) / b;
}

double student_t_two_sided_p(double t, double df) {
  if (!(df > 0.0)) throw ConfigError("student_t_two_sided_p: df must be positive");
  if (std::isinf(t)) return 0.0;
  return incomplete_beta(0.5 * df, 0.5, df / (df + t * t));
}

TTestResult paired_ttest(std::span<const double> a, std::span<const double> b) {
  if (a.size() != b.size()) throw DimensionError("paired_ttest: samples differ in length");
  if (a.size() < 2) throw ConfigError("paired_ttest needs at least two pairs");
  const auto n = static_cast<double>(a.size());
  std::vector<double> d(a.size());
  for (std::size_t i = 0; i < a.size(); ++i) d[i] = a[i] - b[i];
  const double mean = std::accumulate(d.begin(), d.end(), 0.0) / n;
  double ss = 0.0;
  for (double v : d) ss += (v - mean) * (v - mean);
  const double var = ss / (n - 1.0);
  if (var == 0.0) {
    if (mean == 0.0) return {0.0, 1.0};
    return {mean > 0.0 ? std::numeric_limits<double>::infinity() : -std::numeric_limits<double>::infinity(), 0.0};
  }
  const double t = mean / std::sqrt(var / n);
  return {t, student_t_two_sided_p(t, n - 1.0)};
}

CommReport comm_report(std::span<const fed::MessageRecord> records) {
  CommReport r;
  for (const auto& m : records) {
    const bool up = m.direction == fed::Direction::client_to_server;
    if (m.payload_class == fed::PayloadClass::model)
      (up ? r.model_payload_up : r.model_payload_down) += m.payload_bytes;
    else
      (up ? r.negatives_payload_up : r.negatives_payload_down) += m.payload_bytes;
    (up ? r.manifest_up : r.manifest_down) += m.manifest_bytes;
  }
  return r;
}

CommReport comm_report(std::span<const fed::RoundMessage> messages) {
  std::vector<fed::MessageRecord> records;
  records.reserve(messages.size());
  for (const auto& m : messages) records.push_back(fed::make_record(m));
  return comm_report(records);
}

}  // namespace fedmri::metrics
