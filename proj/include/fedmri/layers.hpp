#pragma once

#include <vector>

#include "fedmri/autodiff.hpp"

namespace fedmri::ad {

// All image-shaped values are C×H×W real32 tensors.

/// Stride-1 cross-correlation with "same" padding (k-1)/2 plus bias.
/// weight is Cout×Cin×k×k with k odd; bias is Cout.
Var conv2d(Tape& tape, Var input, Var weight, Var bias);

Var relu(Tape& tape, Var x);
Var avgpool2(Tape& tape, Var x);
Var upsample_nearest2(Tape& tape, Var x);
Var concat_channels(Tape& tape, Var a, Var b);
Var add(Tape& tape, Var a, Var b);
Var scale(Tape& tape, Var x, float factor);

enum class LayerKind { relu, avgpool2, upsample_nearest2, concat_channels, add };
Var apply_layer(Tape& tape, LayerKind kind, const std::vector<Var>& inputs);

/// Mean absolute error; subgradient sign(pred - target) / count, sign(0) = 0.
Var l1_loss(Tape& tape, Var pred, Var target);

// Complex-valued images travel as 2×H×W (real, imaginary) channel pairs.
Var fft2(Tape& tape, Var x);
Var ifft2(Tape& tape, Var x);
/// 2×H×W complex pair -> 1×H×W modulus; subgradient 0 where the modulus is 0.
Var complex_abs(Tape& tape, Var x);

}  // namespace fedmri::ad
