#pragma once

#include <span>
#include <string>
#include <vector>

namespace fedmri::fed {

enum class ContrastiveKind { l1, l2, ntxent, off };

std::string to_string(ContrastiveKind k);
ContrastiveKind contrastive_kind_from_string(const std::string& s);

inline constexpr double kNtXentTemperature = 0.5;
inline constexpr double kDenominatorGuard = 1e-12;

using VectorView = std::span<const float>;

struct ContrastiveValue {
  double value = 0.0;
  bool skipped = false;  // degenerate denominator, or kind == off
};

/// Weighted contrastive regularizer on parameter vectors.
///   l1/l2:  ‖a − p‖ / Σᵢ ‖qᵢ − a‖
///   ntxent: −log softmax of cos(a, p)/τ against {cos(a, qᵢ)/τ}, τ = 0.5
/// Throws DimensionError on length mismatch, ConfigError on no negatives.
ContrastiveValue contrastive_loss(VectorView anchor, VectorView positive, const std::vector<VectorView>& negatives,
                                  ContrastiveKind kind);

/// Gradient of the l1 ratio w.r.t. the anchor:
///   (sign(a − p)·D − N·Σᵢ sign(a − qᵢ)) / D²,  sign(0) = 0,
/// and the zero vector when D < 1e-12.
std::vector<double> contrastive_grad_l1(VectorView anchor, VectorView positive, const std::vector<VectorView>& negatives);

/// Anchor gradient for any kind (zero vector for off or a skipped term).
std::vector<double> contrastive_grad(VectorView anchor, VectorView positive, const std::vector<VectorView>& negatives,
                                     ContrastiveKind kind);

}  // namespace fedmri::fed
