#include "fedmri/recon.hpp"

#include <algorithm>
#include <cmath>

#include "fedmri/errors.hpp"
#include "fedmri/layers.hpp"

namespace fedmri::recon {

std::string to_string(Partition p) { return p == Partition::shared ? "shared" : "local"; }
std::string to_string(PathRole r) { return r == PathRole::encoder ? "encoder" : "decoder"; }

std::string to_string(PartitionMode m) {
  switch (m) {
    case PartitionMode::encoder_shared: return "encoder_shared";
    case PartitionMode::all_shared: return "all_shared";
    case PartitionMode::all_but_last_shared: return "all_but_last_shared";
    case PartitionMode::first_layer_shared: return "first_layer_shared";
  }
  return "?";
}

Partition partition_from_string(const std::string& s) {
  if (s == "shared") return Partition::shared;
  if (s == "local") return Partition::local;
  throw ConfigError("unknown partition label '" + s + "'");
}

PathRole path_role_from_string(const std::string& s) {
  if (s == "encoder") return PathRole::encoder;
  if (s == "decoder") return PathRole::decoder;
  throw ConfigError("unknown path role '" + s + "'");
}

PartitionMode partition_mode_from_string(const std::string& s) {
  for (auto m : {PartitionMode::encoder_shared, PartitionMode::all_shared, PartitionMode::all_but_last_shared,
                 PartitionMode::first_layer_shared})
    if (to_string(m) == s) return m;
  throw ConfigError("unknown partition_mode '" + s + "'");
}

// ---------------------------------------------------------------------------
// ParameterSet

void ParameterSet::add(ParamEntry entry) {
  auto pos = std::lower_bound(entries_.begin(), entries_.end(), entry.param.name,
                              [](const ParamEntry& e, const std::string& n) { return e.param.name < n; });
  if (pos != entries_.end() && pos->param.name == entry.param.name)
    throw ConfigError("duplicate parameter name '" + entry.param.name + "'");
  entries_.insert(pos, std::move(entry));
}

const ParamEntry& ParameterSet::at(const std::string& name) const {
  auto pos = std::lower_bound(entries_.begin(), entries_.end(), name,
                              [](const ParamEntry& e, const std::string& n) { return e.param.name < n; });
  if (pos == entries_.end() || pos->param.name != name) throw ConfigError("no parameter named '" + name + "'");
  return *pos;
}

ParamEntry& ParameterSet::at(const std::string& name) {
  return const_cast<ParamEntry&>(std::as_const(*this).at(name));
}

std::size_t ParameterSet::element_count() const {
  std::size_t n = 0;
  for (const auto& e : entries_) n += e.param.value.numel();
  return n;
}

std::size_t ParameterSet::element_count(Partition p) const {
  std::size_t n = 0;
  for (const auto& e : entries_)
    if (e.partition == p) n += e.param.value.numel();
  return n;
}

std::vector<float> ParameterSet::flatten(Partition p) const {
  std::vector<float> out;
  out.reserve(element_count(p));
  for (const auto& e : entries_)
    if (e.partition == p) out.insert(out.end(), e.param.value.data().begin(), e.param.value.data().end());
  return out;
}

std::vector<float> ParameterSet::flatten_all() const {
  std::vector<float> out;
  out.reserve(element_count());
  for (const auto& e : entries_) out.insert(out.end(), e.param.value.data().begin(), e.param.value.data().end());
  return out;
}

void ParameterSet::assign(Partition p, std::span<const float> values) {
  if (values.size() != element_count(p))
    throw DimensionError("assign: expected " + std::to_string(element_count(p)) + " " + to_string(p) +
                         " elements, got " + std::to_string(values.size()));
  std::size_t at = 0;
  for (auto& e : entries_) {
    if (e.partition != p) continue;
    auto dst = e.param.value.data();
    std::copy_n(values.begin() + static_cast<std::ptrdiff_t>(at), dst.size(), dst.begin());
    at += dst.size();
  }
}

void ParameterSet::assign_all(std::span<const float> values) {
  if (values.size() != element_count())
    throw DimensionError("assign_all: expected " + std::to_string(element_count()) + " elements, got " +
                         std::to_string(values.size()));
  std::size_t at = 0;
  for (auto& e : entries_) {
    auto dst = e.param.value.data();
    std::copy_n(values.begin() + static_cast<std::ptrdiff_t>(at), dst.size(), dst.begin());
    at += dst.size();
  }
}

std::vector<ad::Parameter*> ParameterSet::parameters(Partition p) {
  std::vector<ad::Parameter*> out;
  for (auto& e : entries_)
    if (e.partition == p) out.push_back(&e.param);
  return out;
}

std::vector<ad::Parameter*> ParameterSet::parameters() {
  std::vector<ad::Parameter*> out;
  for (auto& e : entries_) out.push_back(&e.param);
  return out;
}

void ParameterSet::zero_grads() {
  for (auto& e : entries_) e.param.zero_grad();
}

SplitVectors split_params(const ParameterSet& params) {
  return {params.flatten(Partition::shared), params.flatten(Partition::local)};
}

void merge_params(ParameterSet& params, std::span<const float> shared) { params.assign(Partition::shared, shared); }

void apply_partition_mode(ParameterSet& params, PartitionMode mode) {
  // The cascade ends in the image network's 1×1 projection.
  std::string last_name;
  int last_stage = -1;
  for (const auto& e : params.entries())
    if (e.role == PathRole::decoder && e.subnet == "inet" && e.stage > last_stage) {
      last_stage = e.stage;
      last_name = e.param.name.substr(0, e.param.name.rfind('.'));
    }

  for (auto& e : params.entries()) {
    switch (mode) {
      case PartitionMode::encoder_shared:
        e.partition = e.role == PathRole::encoder ? Partition::shared : Partition::local;
        break;
      case PartitionMode::all_shared:
        e.partition = Partition::shared;
        break;
      case PartitionMode::all_but_last_shared: {
        const bool is_last = !last_name.empty() && e.param.name.rfind(last_name + ".", 0) == 0;
        e.partition = is_last ? Partition::local : Partition::shared;
        break;
      }
      case PartitionMode::first_layer_shared:
        // First down block: the two convolutions ahead of the first pool.
        e.partition = (e.role == PathRole::encoder && e.stage <= 1) ? Partition::shared : Partition::local;
        break;
    }
  }
}

// ---------------------------------------------------------------------------
// Construction

namespace {

struct ConvLayout {
  const char* name;
  PathRole role;
  int stage;
  std::size_t cin, cout, k;
};

std::vector<ConvLayout> tiny_unet_layout(const TinyUNetSpec& s) {
  const std::size_t c = s.base_channels;
  return {
      {"enc0", PathRole::encoder, 0, s.in_channels, c, 3},
      {"enc1", PathRole::encoder, 1, c, c, 3},
      {"enc2", PathRole::encoder, 2, c, 2 * c, 3},
      {"enc3", PathRole::encoder, 3, 2 * c, 2 * c, 3},
      {"dec0", PathRole::decoder, 0, 3 * c, c, 3},
      {"dec1", PathRole::decoder, 1, c, c, 3},
      {"dec2", PathRole::decoder, 2, c, s.out_channels, 1},
  };
}

void validate(const TinyUNetSpec& s) {
  if (s.in_channels == 0 || s.out_channels == 0 || s.base_channels == 0)
    throw ConfigError("TinyUNet channel counts must be positive");
}

}  // namespace

void add_tiny_unet(ParameterSet& params, const std::string& prefix, const TinyUNetSpec& spec, std::mt19937_64& rng) {
  validate(spec);
  for (const auto& l : tiny_unet_layout(spec)) {
    const std::size_t fan_in = l.cin * l.k * l.k;
    const double bound = std::sqrt(6.0 / static_cast<double>(fan_in));
    std::uniform_real_distribution<double> dist(-bound, bound);
    Tensor w({l.cout, l.cin, l.k, l.k});
    for (auto& v : w.data()) v = static_cast<float>(dist(rng));
    const Partition part = l.role == PathRole::encoder ? Partition::shared : Partition::local;
    const std::string base = prefix + "." + l.name;
    params.add({ad::Parameter(base + ".weight", std::move(w)), part, l.role, prefix, l.stage});
    params.add({ad::Parameter(base + ".bias", Tensor({l.cout})), part, l.role, prefix, l.stage});
  }
}

std::size_t tiny_unet_param_count(const TinyUNetSpec& spec) {
  std::size_t n = 0;
  for (const auto& l : tiny_unet_layout(spec)) n += l.cout * l.cin * l.k * l.k + l.cout;
  return n;
}

ParameterSet build_tiny_unet(const TinyUNetSpec& spec, std::mt19937_64& rng, const std::string& prefix) {
  ParameterSet ps;
  add_tiny_unet(ps, prefix, spec, rng);
  return ps;
}

ParameterSet build_kinet(const KINetSpec& spec, std::mt19937_64& rng) {
  if (spec.knet.in_channels != 2 || spec.knet.out_channels != 2)
    throw ConfigError("k-space network must map 2 channels to 2 channels");
  if (spec.inet.in_channels != 1 || spec.inet.out_channels != 1)
    throw ConfigError("image network must map 1 channel to 1 channel");
  ParameterSet ps;
  add_tiny_unet(ps, "knet", spec.knet, rng);
  add_tiny_unet(ps, "inet", spec.inet, rng);
  return ps;
}

// ---------------------------------------------------------------------------
// Forward

bool in_scope(GradScope scope, Partition p) {
  switch (scope) {
    case GradScope::none: return false;
    case GradScope::all: return true;
    case GradScope::shared: return p == Partition::shared;
    case GradScope::local: return p == Partition::local;
  }
  return false;
}

namespace {

using Binder = std::function<ad::Var(const std::string& name)>;

ad::Var conv_block(ad::Tape& tape, const Binder& bind, const std::string& layer, ad::Var x, bool with_relu) {
  ad::Var y = ad::conv2d(tape, x, bind(layer + ".weight"), bind(layer + ".bias"));
  return with_relu ? ad::relu(tape, y) : y;
}

ad::Var unet_impl(ad::Tape& tape, const Binder& bind, const std::string& prefix, ad::Var input) {
  const std::string p = prefix + ".";
  ad::Var e0 = conv_block(tape, bind, p + "enc0", input, true);
  ad::Var skip = conv_block(tape, bind, p + "enc1", e0, true);
  ad::Var pooled = ad::avgpool2(tape, skip);
  ad::Var e2 = conv_block(tape, bind, p + "enc2", pooled, true);
  ad::Var bottleneck = conv_block(tape, bind, p + "enc3", e2, true);

  ad::Var up = ad::upsample_nearest2(tape, bottleneck);
  ad::Var merged = ad::concat_channels(tape, up, skip);
  ad::Var d0 = conv_block(tape, bind, p + "dec0", merged, true);
  ad::Var d1 = conv_block(tape, bind, p + "dec1", d0, true);
  return conv_block(tape, bind, p + "dec2", d1, false);
}

Binder training_binder(ad::Tape& tape, ParameterSet& params, GradScope scope) {
  return [&tape, &params, scope](const std::string& name) {
    ParamEntry& e = params.at(name);
    return in_scope(scope, e.partition) ? tape.parameter(e.param) : tape.constant(e.param.value);
  };
}

Binder constant_binder(ad::Tape& tape, const ParameterSet& params) {
  return [&tape, &params](const std::string& name) { return tape.constant(params.at(name).param.value); };
}

void check_inputs(const Tensor& k_meas, const Tensor& mask) {
  if (!k_meas.is_complex() || k_meas.rank() != 2) throw DtypeError("forward_kinet: k_meas must be complex64 H×W");
  if (mask.is_complex() || mask.shape() != k_meas.shape())
    throw DimensionError("forward_kinet: mask shape " + shape_string(mask.shape()) + " does not match k-space " +
                         shape_string(k_meas.shape()));
}

KINetForward kinet_impl(ad::Tape& tape, const Binder& bind, const Tensor& k_meas, const Tensor& mask, bool use_dc) {
  check_inputs(k_meas, mask);
  const std::size_t h = k_meas.dim(0), w = k_meas.dim(1);
  const float s = static_cast<float>(std::sqrt(static_cast<double>(h * w)));

  Tensor measured = complex_to_channels(k_meas);
  Tensor normalized = measured;
  for (auto& v : normalized.data()) v /= s;

  ad::Var k_in = tape.constant(measured);
  ad::Var residual = unet_impl(tape, bind, "knet", tape.constant(std::move(normalized)));
  ad::Var k_pred = ad::add(tape, k_in, ad::scale(tape, residual, s));
  if (use_dc) k_pred = data_consistency(tape, k_pred, measured, mask);

  ad::Var x0 = ad::complex_abs(tape, ad::ifft2(tape, k_pred));
  ad::Var image = ad::add(tape, x0, unet_impl(tape, bind, "inet", x0));
  return {k_pred, image};
}

}  // namespace

ad::Var tiny_unet_forward(ad::Tape& tape, ParameterSet& params, GradScope scope, const std::string& prefix,
                          ad::Var input) {
  return unet_impl(tape, training_binder(tape, params, scope), prefix, input);
}

ad::Var data_consistency(ad::Tape& tape, ad::Var k_pred, const Tensor& k_meas_channels, const Tensor& mask) {
  const Tensor& pred = tape.value(k_pred);
  require_same_shape(pred, k_meas_channels, "data_consistency");
  if (pred.rank() != 3 || pred.dim(0) != 2 || mask.shape() != Shape{pred.dim(1), pred.dim(2)})
    throw DimensionError("data_consistency: mask " + shape_string(mask.shape()) + " does not match k-space " +
                         shape_string(pred.shape()));
  const std::size_t n = mask.numel();
  Tensor out = pred;
  for (std::size_t i = 0; i < n; ++i)
    if (mask[i] != 0.0f) {
      out[i] = k_meas_channels[i];
      out[n + i] = k_meas_channels[n + i];
    }
  return tape.record(std::move(out), {k_pred}, [k_pred, mask, n](ad::Tape& t, std::size_t self) {
    const Tensor& g = t.grad(self);
    Tensor& d = t.grad(k_pred.id);
    for (std::size_t i = 0; i < n; ++i)
      if (mask[i] == 0.0f) {
        d[i] += g[i];
        d[n + i] += g[n + i];
      }
  });
}

Tensor apply_data_consistency(const Tensor& k_pred, const Tensor& k_meas, const Tensor& mask) {
  if (!k_pred.is_complex() || !k_meas.is_complex()) throw DtypeError("apply_data_consistency: expected complex64");
  require_same_shape(k_pred, k_meas, "apply_data_consistency");
  require_same_shape(k_pred, mask, "apply_data_consistency");
  Tensor out = k_pred;
  for (std::size_t i = 0; i < mask.numel(); ++i)
    if (mask[i] != 0.0f) out.set_complex(i, k_meas.complex_at(i));
  return out;
}

KINetForward forward_kinet(ad::Tape& tape, ParameterSet& params, const Tensor& k_meas, const Tensor& mask,
                           bool use_data_consistency, GradScope scope) {
  return kinet_impl(tape, training_binder(tape, params, scope), k_meas, mask, use_data_consistency);
}

Tensor reconstruct(const ParameterSet& params, const Tensor& k_meas, const Tensor& mask, bool use_data_consistency) {
  ad::Tape tape;
  auto out = kinet_impl(tape, constant_binder(tape, params), k_meas, mask, use_data_consistency);
  return tape.value(out.image).reshaped({k_meas.dim(0), k_meas.dim(1)});
}

ad::Var reconstruction_loss(ad::Tape& tape, ParameterSet& params, const Tensor& k_meas, const Tensor& mask,
                            const Tensor& y, bool use_data_consistency, GradScope scope) {
  auto out = forward_kinet(tape, params, k_meas, mask, use_data_consistency, scope);
  ad::Var target = tape.constant(y.reshaped({1, y.dim(0), y.dim(1)}));
  return ad::l1_loss(tape, out.image, target);
}

}  // namespace fedmri::recon
