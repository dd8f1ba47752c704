#include "fedmri/layers.hpp"

#include <Eigen/Core>
#include <cmath>
#include <memory>

#include "fedmri/errors.hpp"
#include "fedmri/fft.hpp"

namespace fedmri::ad {

namespace {

using RowMat = Eigen::Matrix<float, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;
using MatMap = Eigen::Map<RowMat>;
using ConstMatMap = Eigen::Map<const RowMat>;
using Eigen::Index;

void require_image(const Tensor& t, const char* op) {
  if (t.is_complex() || t.rank() != 3)
    throw DimensionError(std::string(op) + ": expected real32 C×H×W, got " + shape_string(t.shape()));
}

struct ConvGeometry {
  std::size_t cin, cout, k, h, w, pad;
  std::size_t hw() const { return h * w; }
  std::size_t patch() const { return cin * k * k; }
};

// col[(c, ky, kx), (y, x)] = in[c, y + ky - pad, x + kx - pad], zero outside.
void im2col(const float* in, const ConvGeometry& g, float* col) {
  const auto h = static_cast<std::ptrdiff_t>(g.h), w = static_cast<std::ptrdiff_t>(g.w);
  const auto pad = static_cast<std::ptrdiff_t>(g.pad);
  std::size_t row = 0;
  for (std::size_t c = 0; c < g.cin; ++c) {
    const float* plane = in + c * g.hw();
    for (std::ptrdiff_t ky = 0; ky < static_cast<std::ptrdiff_t>(g.k); ++ky) {
      for (std::ptrdiff_t kx = 0; kx < static_cast<std::ptrdiff_t>(g.k); ++kx, ++row) {
        float* dst = col + row * g.hw();
        const std::ptrdiff_t dx = kx - pad;
        const std::ptrdiff_t x0 = std::max<std::ptrdiff_t>(0, -dx);
        const std::ptrdiff_t x1 = std::min<std::ptrdiff_t>(w, w - dx);
        for (std::ptrdiff_t y = 0; y < h; ++y) {
          float* out_row = dst + y * w;
          const std::ptrdiff_t sy = y + ky - pad;
          if (sy < 0 || sy >= h) {
            std::fill(out_row, out_row + w, 0.0f);
            continue;
          }
          const float* src_row = plane + sy * w;
          std::fill(out_row, out_row + x0, 0.0f);
          for (std::ptrdiff_t x = x0; x < x1; ++x) out_row[x] = src_row[x + dx];
          std::fill(out_row + x1, out_row + w, 0.0f);
        }
      }
    }
  }
}

void col2im_add(const float* col, const ConvGeometry& g, float* in_grad) {
  const auto h = static_cast<std::ptrdiff_t>(g.h), w = static_cast<std::ptrdiff_t>(g.w);
  const auto pad = static_cast<std::ptrdiff_t>(g.pad);
  std::size_t row = 0;
  for (std::size_t c = 0; c < g.cin; ++c) {
    float* plane = in_grad + c * g.hw();
    for (std::ptrdiff_t ky = 0; ky < static_cast<std::ptrdiff_t>(g.k); ++ky) {
      for (std::ptrdiff_t kx = 0; kx < static_cast<std::ptrdiff_t>(g.k); ++kx, ++row) {
        const float* src = col + row * g.hw();
        const std::ptrdiff_t dx = kx - pad;
        const std::ptrdiff_t x0 = std::max<std::ptrdiff_t>(0, -dx);
        const std::ptrdiff_t x1 = std::min<std::ptrdiff_t>(w, w - dx);
        for (std::ptrdiff_t y = 0; y < h; ++y) {
          const std::ptrdiff_t sy = y + ky - pad;
          if (sy < 0 || sy >= h) continue;
          const float* src_row = src + y * w;
          float* dst_row = plane + sy * w;
          for (std::ptrdiff_t x = x0; x < x1; ++x) dst_row[x + dx] += src_row[x];
        }
      }
    }
  }
}

void accumulate(Tensor& dst, const Tensor& src) {
  auto d = dst.data();
  auto s = src.data();
  for (std::size_t i = 0; i < d.size(); ++i) d[i] += s[i];
}

}  // namespace

Var conv2d(Tape& tape, Var input, Var weight, Var bias) {
  const Tensor& in = tape.value(input);
  const Tensor& wt = tape.value(weight);
  const Tensor& bs = tape.value(bias);
  require_image(in, "conv2d");
  if (wt.rank() != 4 || wt.dim(2) != wt.dim(3) || wt.dim(2) % 2 == 0)
    throw DimensionError("conv2d: weight must be Cout×Cin×k×k with odd k, got " + shape_string(wt.shape()));
  if (wt.dim(1) != in.dim(0))
    throw DimensionError("conv2d: weight expects " + std::to_string(wt.dim(1)) + " input channels, input has " +
                         std::to_string(in.dim(0)));
  if (bs.shape() != Shape{wt.dim(0)}) throw DimensionError("conv2d: bias must have shape [Cout]");

  const ConvGeometry g{in.dim(0), wt.dim(0), wt.dim(2), in.dim(1), in.dim(2), (wt.dim(2) - 1) / 2};
  const auto hw = static_cast<Index>(g.hw());
  const auto patch = static_cast<Index>(g.patch());

  // 1×1 kernels read the input directly; larger kernels go through im2col.
  auto col = std::make_shared<std::vector<float>>();
  const float* col_ptr = in.data().data();
  if (g.k > 1) {
    col->resize(g.patch() * g.hw());
    im2col(in.data().data(), g, col->data());
    col_ptr = col->data();
  }

  Tensor out({g.cout, g.h, g.w});
  MatMap o(out.data().data(), static_cast<Index>(g.cout), hw);
  ConstMatMap W(wt.data().data(), static_cast<Index>(g.cout), patch);
  ConstMatMap C(col_ptr, patch, hw);
  o.noalias() = W * C;
  for (std::size_t c = 0; c < g.cout; ++c) o.row(static_cast<Index>(c)).array() += bs[c];

  return tape.record(std::move(out), {input, weight, bias}, [input, weight, bias, g, col](Tape& t, std::size_t self) {
    const auto hw = static_cast<Index>(g.hw());
    const auto patch = static_cast<Index>(g.patch());
    const auto cout = static_cast<Index>(g.cout);
    const Tensor& gout_t = t.grad(self);
    ConstMatMap gout(gout_t.data().data(), cout, hw);
    const float* col_ptr = g.k > 1 ? col->data() : t.value(input).data().data();
    ConstMatMap C(col_ptr, patch, hw);

    if (t.requires_grad(weight)) {
      MatMap dw(t.grad(weight.id).data().data(), cout, patch);
      dw.noalias() += gout * C.transpose();
    }
    if (t.requires_grad(bias)) {
      auto db = t.grad(bias.id).data();
      for (Index c = 0; c < cout; ++c) db[static_cast<std::size_t>(c)] += gout.row(c).sum();
    }
    if (t.requires_grad(input)) {
      ConstMatMap W(t.value(weight).data().data(), cout, patch);
      float* din = t.grad(input.id).data().data();
      if (g.k == 1) {
        MatMap di(din, patch, hw);
        di.noalias() += W.transpose() * gout;
      } else {
        RowMat dcol = W.transpose() * gout;
        col2im_add(dcol.data(), g, din);
      }
    }
  });
}

Var relu(Tape& tape, Var x) {
  const Tensor& in = tape.value(x);
  Tensor out(in.shape());
  for (std::size_t i = 0; i < in.numel(); ++i) {
    out[i] = in[i] > 0.0f ? in[i] : 0.0f;
    tape.note_branch(in[i] > 0.0f);
  }
  return tape.record(std::move(out), {x}, [x](Tape& t, std::size_t self) {
    const Tensor& g = t.grad(self);
    const Tensor& in = t.value(x);
    Tensor& dx = t.grad(x.id);
    for (std::size_t i = 0; i < in.numel(); ++i)
      if (in[i] > 0.0f) dx[i] += g[i];
  });
}

Var avgpool2(Tape& tape, Var x) {
  const Tensor& in = tape.value(x);
  require_image(in, "avgpool2");
  const std::size_t c = in.dim(0), h = in.dim(1), w = in.dim(2);
  if (h % 2 != 0 || w % 2 != 0) throw DimensionError("avgpool2: spatial dims must be even, got " + shape_string(in.shape()));
  const std::size_t oh = h / 2, ow = w / 2;
  Tensor out({c, oh, ow});
  for (std::size_t ch = 0; ch < c; ++ch)
    for (std::size_t y = 0; y < oh; ++y)
      for (std::size_t xx = 0; xx < ow; ++xx) {
        const float* p = in.data().data() + ch * h * w + 2 * y * w + 2 * xx;
        out[(ch * oh + y) * ow + xx] = 0.25f * (p[0] + p[1] + p[w] + p[w + 1]);
      }
  return tape.record(std::move(out), {x}, [x, c, h, w](Tape& t, std::size_t self) {
    const Tensor& g = t.grad(self);
    Tensor& dx = t.grad(x.id);
    const std::size_t oh = h / 2, ow = w / 2;
    for (std::size_t ch = 0; ch < c; ++ch)
      for (std::size_t y = 0; y < oh; ++y)
        for (std::size_t xx = 0; xx < ow; ++xx) {
          const float v = 0.25f * g[(ch * oh + y) * ow + xx];
          float* p = dx.data().data() + ch * h * w + 2 * y * w + 2 * xx;
          p[0] += v;
          p[1] += v;
          p[w] += v;
          p[w + 1] += v;
        }
  });
}

Var upsample_nearest2(Tape& tape, Var x) {
  const Tensor& in = tape.value(x);
  require_image(in, "upsample_nearest2");
  const std::size_t c = in.dim(0), h = in.dim(1), w = in.dim(2);
  const std::size_t oh = 2 * h, ow = 2 * w;
  Tensor out({c, oh, ow});
  for (std::size_t ch = 0; ch < c; ++ch)
    for (std::size_t y = 0; y < oh; ++y)
      for (std::size_t xx = 0; xx < ow; ++xx) out[(ch * oh + y) * ow + xx] = in[(ch * h + y / 2) * w + xx / 2];
  return tape.record(std::move(out), {x}, [x, c, h, w](Tape& t, std::size_t self) {
    const Tensor& g = t.grad(self);
    Tensor& dx = t.grad(x.id);
    const std::size_t oh = 2 * h, ow = 2 * w;
    for (std::size_t ch = 0; ch < c; ++ch)
      for (std::size_t y = 0; y < oh; ++y)
        for (std::size_t xx = 0; xx < ow; ++xx) dx[(ch * h + y / 2) * w + xx / 2] += g[(ch * oh + y) * ow + xx];
  });
}

Var concat_channels(Tape& tape, Var a, Var b) {
  const Tensor& ta = tape.value(a);
  const Tensor& tb = tape.value(b);
  require_image(ta, "concat_channels");
  require_image(tb, "concat_channels");
  if (ta.dim(1) != tb.dim(1) || ta.dim(2) != tb.dim(2))
    throw DimensionError("concat_channels: spatial mismatch " + shape_string(ta.shape()) + " vs " +
                         shape_string(tb.shape()));
  const std::size_t na = ta.numel();
  std::vector<float> data(ta.data().begin(), ta.data().end());
  data.insert(data.end(), tb.data().begin(), tb.data().end());
  Tensor out({ta.dim(0) + tb.dim(0), ta.dim(1), ta.dim(2)}, std::move(data));
  return tape.record(std::move(out), {a, b}, [a, b, na](Tape& t, std::size_t self) {
    const Tensor& g = t.grad(self);
    if (t.requires_grad(a)) {
      Tensor& da = t.grad(a.id);
      for (std::size_t i = 0; i < na; ++i) da[i] += g[i];
    }
    if (t.requires_grad(b)) {
      Tensor& db = t.grad(b.id);
      for (std::size_t i = 0; i < db.numel(); ++i) db[i] += g[na + i];
    }
  });
}

Var add(Tape& tape, Var a, Var b) {
  const Tensor& ta = tape.value(a);
  const Tensor& tb = tape.value(b);
  require_same_shape(ta, tb, "add");
  Tensor out(ta.shape());
  for (std::size_t i = 0; i < ta.numel(); ++i) out[i] = ta[i] + tb[i];
  return tape.record(std::move(out), {a, b}, [a, b](Tape& t, std::size_t self) {
    const Tensor& g = t.grad(self);
    if (t.requires_grad(a)) accumulate(t.grad(a.id), g);
    if (t.requires_grad(b)) accumulate(t.grad(b.id), g);
  });
}

Var scale(Tape& tape, Var x, float factor) {
  const Tensor& in = tape.value(x);
  Tensor out(in.shape());
  for (std::size_t i = 0; i < in.numel(); ++i) out[i] = in[i] * factor;
  const bool one = in.numel() == 1;
  const double s = one ? tape.scalar(x) * factor : 0.0;
  Var v = tape.record(std::move(out), {x}, [x, factor](Tape& t, std::size_t self) {
    const Tensor& g = t.grad(self);
    Tensor& dx = t.grad(x.id);
    for (std::size_t i = 0; i < g.numel(); ++i) dx[i] += g[i] * factor;
  });
  if (one) tape.set_scalar(v, s);  // record() may move `in`
  return v;
}

Var apply_layer(Tape& tape, LayerKind kind, const std::vector<Var>& inputs) {
  const std::size_t arity =
      (kind == LayerKind::concat_channels || kind == LayerKind::add) ? 2 : 1;
  if (inputs.size() != arity)
    throw DimensionError("apply_layer: expected " + std::to_string(arity) + " inputs, got " +
                         std::to_string(inputs.size()));
  switch (kind) {
    case LayerKind::relu: return relu(tape, inputs[0]);
    case LayerKind::avgpool2: return avgpool2(tape, inputs[0]);
    case LayerKind::upsample_nearest2: return upsample_nearest2(tape, inputs[0]);
    case LayerKind::concat_channels: return concat_channels(tape, inputs[0], inputs[1]);
    case LayerKind::add: return add(tape, inputs[0], inputs[1]);
  }
  throw std::logic_error("apply_layer: unknown kind");
}

Var l1_loss(Tape& tape, Var pred, Var target) {
  const Tensor& p = tape.value(pred);
  const Tensor& y = tape.value(target);
  require_same_shape(p, y, "l1_loss");
  double sum = 0.0;
  for (std::size_t i = 0; i < p.numel(); ++i) {
    sum += std::abs(static_cast<double>(p[i]) - static_cast<double>(y[i]));
    tape.note_branch(p[i] > y[i]);
  }
  const double mean = sum / static_cast<double>(p.numel());
  Var v = tape.record(Tensor({1}, {static_cast<float>(mean)}), {pred, target}, [pred, target](Tape& t, std::size_t self) {
    const float g = t.grad(self)[0];
    const Tensor& p = t.value(pred);
    const Tensor& y = t.value(target);
    const float per = g / static_cast<float>(p.numel());
    auto push = [&](Var which, float sign_of_pred) {
      Tensor& d = t.grad(which.id);
      for (std::size_t i = 0; i < p.numel(); ++i) {
        const float r = p[i] - y[i];
        if (r > 0.0f) d[i] += sign_of_pred * per;
        else if (r < 0.0f) d[i] -= sign_of_pred * per;
      }
    };
    if (t.requires_grad(pred)) push(pred, 1.0f);
    if (t.requires_grad(target)) push(target, -1.0f);
  });
  tape.set_scalar(v, mean);
  return v;
}

namespace {

void require_complex_pair(const Tensor& t, const char* op) {
  if (t.is_complex() || t.rank() != 3 || t.dim(0) != 2)
    throw DimensionError(std::string(op) + ": expected 2×H×W (real, imaginary) channels, got " +
                         shape_string(t.shape()));
  if (!is_power_of_two(t.dim(1)) || !is_power_of_two(t.dim(2)))
    throw DimensionError(std::string(op) + ": spatial dims must be powers of two");
}

// Applies the planar transform to a 2×H×W tensor; `gain` multiplies the result.
Tensor planar_transform(const Tensor& in, bool inverse, float gain) {
  const std::size_t h = in.dim(1), w = in.dim(2), n = h * w;
  Tensor out = in;
  auto d = out.data();
  fft2_planar(d.subspan(0, n), d.subspan(n, n), h, w, inverse);
  if (gain != 1.0f)
    for (auto& v : d) v *= gain;
  return out;
}

}  // namespace

// The DFT is complex-linear, so the adjoint of the unnormalized forward
// transform is H·W·ifft2 and the adjoint of ifft2 is fft2 / (H·W).
Var fft2(Tape& tape, Var x) {
  const Tensor& in = tape.value(x);
  require_complex_pair(in, "fft2");
  Tensor out = planar_transform(in, false, 1.0f);
  return tape.record(std::move(out), {x}, [x](Tape& t, std::size_t self) {
    const Tensor& g = t.grad(self);
    const auto n = static_cast<float>(g.dim(1) * g.dim(2));
    accumulate(t.grad(x.id), planar_transform(g, true, n));
  });
}

Var ifft2(Tape& tape, Var x) {
  const Tensor& in = tape.value(x);
  require_complex_pair(in, "ifft2");
  Tensor out = planar_transform(in, true, 1.0f);
  return tape.record(std::move(out), {x}, [x](Tape& t, std::size_t self) {
    const Tensor& g = t.grad(self);
    const auto n = static_cast<float>(g.dim(1) * g.dim(2));
    accumulate(t.grad(x.id), planar_transform(g, false, 1.0f / n));
  });
}

Var complex_abs(Tape& tape, Var x) {
  const Tensor& in = tape.value(x);
  if (in.is_complex() || in.rank() != 3 || in.dim(0) != 2)
    throw DimensionError("complex_abs: expected 2×H×W, got " + shape_string(in.shape()));
  const std::size_t n = in.dim(1) * in.dim(2);
  Tensor out({1, in.dim(1), in.dim(2)});
  for (std::size_t i = 0; i < n; ++i) {
    const double re = in[i], im = in[n + i];
    out[i] = static_cast<float>(std::sqrt(re * re + im * im));
  }
  return tape.record(std::move(out), {x}, [x, n](Tape& t, std::size_t self) {
    const Tensor& g = t.grad(self);
    const Tensor& in = t.value(x);
    const Tensor& mag = t.value(Var{self});
    Tensor& dx = t.grad(x.id);
    for (std::size_t i = 0; i < n; ++i) {
      if (mag[i] == 0.0f) continue;
      const float s = g[i] / mag[i];
      dx[i] += s * in[i];
      dx[n + i] += s * in[n + i];
    }
  });
}

}  // namespace fedmri::ad
