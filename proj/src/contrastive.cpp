#include "fedmri/contrastive.hpp"

#include <cmath>

#include "fedmri/errors.hpp"

namespace fedmri::fed {

std::string to_string(ContrastiveKind k) {
  switch (k) {
    case ContrastiveKind::l1: return "l1";
    case ContrastiveKind::l2: return "l2";
    case ContrastiveKind::ntxent: return "ntxent";
    case ContrastiveKind::off: return "off";
  }
  return "?";
}

ContrastiveKind contrastive_kind_from_string(const std::string& s) {
  for (auto k : {ContrastiveKind::l1, ContrastiveKind::l2, ContrastiveKind::ntxent, ContrastiveKind::off})
    if (to_string(k) == s) return k;
  throw ConfigError("unknown contrastive_kind '" + s + "'");
}

namespace {

void check(VectorView a, VectorView p, const std::vector<VectorView>& negatives) {
  if (negatives.empty()) throw ConfigError("contrastive loss needs at least one negative");
  if (p.size() != a.size()) throw DimensionError("contrastive: positive length differs from anchor");
  for (const auto& q : negatives)
    if (q.size() != a.size()) throw DimensionError("contrastive: negative length differs from anchor");
}

double sign(double v) { return v > 0.0 ? 1.0 : (v < 0.0 ? -1.0 : 0.0); }

double l1_dist(VectorView a, VectorView b) {
  double s = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) s += std::abs(static_cast<double>(a[i]) - static_cast<double>(b[i]));
  return s;
}

double l2_dist(VectorView a, VectorView b) {
  double s = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) {
    const double d = static_cast<double>(a[i]) - static_cast<double>(b[i]);
    s += d * d;
  }
  return std::sqrt(s);
}

double dot(VectorView a, VectorView b) {
  double s = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) s += static_cast<double>(a[i]) * static_cast<double>(b[i]);
  return s;
}

struct NtXentTerms {
  double anchor_norm = 0.0;
  std::vector<double> norms;  // positive first, then negatives
  std::vector<double> cos;    // same order
  bool degenerate = false;
};

NtXentTerms ntxent_terms(VectorView a, VectorView p, const std::vector<VectorView>& negatives) {
  NtXentTerms t;
  t.anchor_norm = std::sqrt(dot(a, a));
  auto push = [&](VectorView v) {
    const double n = std::sqrt(dot(v, v));
    t.norms.push_back(n);
    if (n < kDenominatorGuard || t.anchor_norm < kDenominatorGuard) {
      t.degenerate = true;
      t.cos.push_back(0.0);
    } else {
      t.cos.push_back(dot(a, v) / (t.anchor_norm * n));
    }
  };
  push(p);
  for (const auto& q : negatives) push(q);
  return t;
}

// Softmax weights over {positive, negatives} of cos/τ.
std::vector<double> softmax_weights(const std::vector<double>& cos) {
  double top = cos[0];
  for (double c : cos) top = std::max(top, c);
  std::vector<double> w(cos.size());
  double z = 0.0;
  for (std::size_t i = 0; i < cos.size(); ++i) {
    w[i] = std::exp((cos[i] - top) / kNtXentTemperature);
    z += w[i];
  }
  for (auto& v : w) v /= z;
  return w;
}

}  // namespace

ContrastiveValue contrastive_loss(VectorView a, VectorView p, const std::vector<VectorView>& negatives,
                                  ContrastiveKind kind) {
  check(a, p, negatives);
  switch (kind) {
    case ContrastiveKind::off: return {0.0, true};
    case ContrastiveKind::l1:
    case ContrastiveKind::l2: {
      auto dist = kind == ContrastiveKind::l1 ? l1_dist : l2_dist;
      double denom = 0.0;
      for (const auto& q : negatives) denom += dist(q, a);
      if (denom < kDenominatorGuard) return {0.0, true};
      return {dist(a, p) / denom, false};
    }
    case ContrastiveKind::ntxent: {
      const auto t = ntxent_terms(a, p, negatives);
      if (t.degenerate) return {0.0, true};
      const auto w = softmax_weights(t.cos);
      return {-std::log(w[0]), false};
    }
  }
  return {0.0, true};
}

std::vector<double> contrastive_grad_l1(VectorView a, VectorView p, const std::vector<VectorView>& negatives) {
  check(a, p, negatives);
  std::vector<double> grad(a.size(), 0.0);
  double denom = 0.0;
  for (const auto& q : negatives) denom += l1_dist(q, a);
  if (denom < kDenominatorGuard) return grad;
  const double numer = l1_dist(a, p);
  for (std::size_t i = 0; i < a.size(); ++i) {
    const double ai = a[i];
    double neg_signs = 0.0;
    for (const auto& q : negatives) neg_signs += sign(ai - static_cast<double>(q[i]));
    grad[i] = (sign(ai - static_cast<double>(p[i])) * denom - numer * neg_signs) / (denom * denom);
  }
  return grad;
}

std::vector<double> contrastive_grad(VectorView a, VectorView p, const std::vector<VectorView>& negatives,
                                     ContrastiveKind kind) {
  check(a, p, negatives);
  std::vector<double> grad(a.size(), 0.0);
  switch (kind) {
    case ContrastiveKind::off: return grad;
    case ContrastiveKind::l1: return contrastive_grad_l1(a, p, negatives);
    case ContrastiveKind::l2: {
      double denom = 0.0;
      std::vector<double> neg_dist;
      for (const auto& q : negatives) {
        neg_dist.push_back(l2_dist(q, a));
        denom += neg_dist.back();
      }
      if (denom < kDenominatorGuard) return grad;
      const double numer = l2_dist(a, p);
      for (std::size_t i = 0; i < a.size(); ++i) {
        const double ai = a[i];
        const double dn = numer > 0.0 ? (ai - static_cast<double>(p[i])) / numer : 0.0;
        double dd = 0.0;
        for (std::size_t k = 0; k < negatives.size(); ++k)
          if (neg_dist[k] > 0.0) dd += (ai - static_cast<double>(negatives[k][i])) / neg_dist[k];
        grad[i] = (dn * denom - numer * dd) / (denom * denom);
      }
      return grad;
    }
    case ContrastiveKind::ntxent: {
      const auto t = ntxent_terms(a, p, negatives);
      if (t.degenerate) return grad;
      const auto w = softmax_weights(t.cos);
      // dL/da = Σⱼ (wⱼ − [j = positive]) / τ · d cos(a, vⱼ)/da
      // d cos(a, v)/da = v / (|a||v|) − cos(a, v)·a / |a|²
      const double an = t.anchor_norm;
      for (std::size_t j = 0; j < w.size(); ++j) {
        const double coeff = (w[j] - (j == 0 ? 1.0 : 0.0)) / kNtXentTemperature;
        VectorView v = j == 0 ? p : negatives[j - 1];
        const double c1 = coeff / (an * t.norms[j]);
        const double c2 = coeff * t.cos[j] / (an * an);
        for (std::size_t i = 0; i < a.size(); ++i) grad[i] += c1 * v[i] - c2 * a[i];
      }
      return grad;
    }
  }
  return grad;
}

}  // namespace fedmri::fed
