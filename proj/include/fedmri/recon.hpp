#pragma once

#include <cstdint>
#include <functional>
#include <random>
#include <span>
#include <string>
#include <vector>

#include "fedmri/autodiff.hpp"
#include "fedmri/tensor.hpp"

namespace fedmri::recon {

enum class Partition : std::uint8_t { shared, local };
// Which half of a U-Net a parameter sits in; encoder parameters are the
// ones eligible for sharing under the default partition.
enum class PathRole : std::uint8_t { encoder, decoder };

enum class PartitionMode { encoder_shared, all_shared, all_but_last_shared, first_layer_shared };

std::string to_string(Partition p);
std::string to_string(PathRole r);
std::string to_string(PartitionMode m);
Partition partition_from_string(const std::string& s);
PathRole path_role_from_string(const std::string& s);
PartitionMode partition_mode_from_string(const std::string& s);

struct ParamEntry {
  ad::Parameter param;
  Partition partition = Partition::shared;
  PathRole role = PathRole::encoder;
  std::string subnet;  // "knet" or "inet"
  int stage = 0;       // index along its path, in execution order
};

/// Model parameters kept in name order. Flattened partition vectors follow
/// that order, which makes them stable across clients and rounds.
class ParameterSet {
 public:
  void add(ParamEntry entry);

  const std::vector<ParamEntry>& entries() const noexcept { return entries_; }
  std::vector<ParamEntry>& entries() noexcept { return entries_; }

  const ParamEntry& at(const std::string& name) const;
  ParamEntry& at(const std::string& name);

  std::size_t element_count() const;
  std::size_t element_count(Partition p) const;

  std::vector<float> flatten(Partition p) const;
  std::vector<float> flatten_all() const;
  void assign(Partition p, std::span<const float> values);
  void assign_all(std::span<const float> values);

  std::vector<ad::Parameter*> parameters(Partition p);
  std::vector<ad::Parameter*> parameters();

  void zero_grads();

 private:
  std::vector<ParamEntry> entries_;
};

struct SplitVectors {
  std::vector<float> shared;
  std::vector<float> local;
};

SplitVectors split_params(const ParameterSet& params);
/// Overwrites exactly the SHARED parameters. Throws DimensionError on a
/// length mismatch.
void merge_params(ParameterSet& params, std::span<const float> shared);

void apply_partition_mode(ParameterSet& params, PartitionMode mode);

// encoder: conv(in→C)+relu, conv(C→C)+relu, avgpool2, conv(C→2C)+relu, conv(2C→2C)+relu
// decoder: upsample2, concat(pre-pool skip), conv(3C→C)+relu, conv(C→C)+relu, conv1×1(C→out)
struct TinyUNetSpec {
  std::size_t in_channels = 1;
  std::size_t out_channels = 1;
  std::size_t base_channels = 8;
};

struct KINetSpec {
  TinyUNetSpec knet{2, 2, 8};
  TinyUNetSpec inet{1, 1, 8};
  bool use_data_consistency = true;
};

/// Adds the parameters of one TinyUNet under `prefix` (He-style fan-in
/// uniform weights, zero biases). Labels follow the encoder_shared mode.
void add_tiny_unet(ParameterSet& params, const std::string& prefix, const TinyUNetSpec& spec, std::mt19937_64& rng);

/// Parameter count of one TinyUNet, in closed form.
std::size_t tiny_unet_param_count(const TinyUNetSpec& spec);

ParameterSet build_tiny_unet(const TinyUNetSpec& spec, std::mt19937_64& rng, const std::string& prefix = "unet");
ParameterSet build_kinet(const KINetSpec& spec, std::mt19937_64& rng);

// Which parameters record gradients during a forward pass.
enum class GradScope { none, shared, local, all };

bool in_scope(GradScope scope, Partition p);

ad::Var tiny_unet_forward(ad::Tape& tape, ParameterSet& params, GradScope scope, const std::string& prefix, ad::Var input);

/// Replaces predicted k-space by the measurement wherever mask == 1.
/// k values are 2×H×W channel pairs; mask is H×W with entries in {0, 1}.
ad::Var data_consistency(ad::Tape& tape, ad::Var k_pred, const Tensor& k_meas_channels, const Tensor& mask);
Tensor apply_data_consistency(const Tensor& k_pred, const Tensor& k_meas, const Tensor& mask);

struct KINetForward {
  ad::Var kspace;  // 2×H×W after the k-space stage (and data consistency)
  ad::Var image;   // 1×H×W reconstruction
};

/// Cascade forward pass:
///   k' = k_meas + s·knet(k_meas / s), s = sqrt(H·W)
///   k'[mask] = k_meas[mask]            (data consistency, optional)
///   x' = |ifft2(k')|
///   out = x' + inet(x')
/// k_meas is complex64 H×W, mask is real32 H×W.
KINetForward forward_kinet(ad::Tape& tape, ParameterSet& params, const Tensor& k_meas, const Tensor& mask,
                           bool use_data_consistency, GradScope scope);

/// Inference helper: H×W real32 reconstruction without gradient tracking.
Tensor reconstruct(const ParameterSet& params, const Tensor& k_meas, const Tensor& mask, bool use_data_consistency);

/// L1 reconstruction loss of one sample on `tape`. y is H×W.
ad::Var reconstruction_loss(ad::Tape& tape, ParameterSet& params, const Tensor& k_meas, const Tensor& mask,
                            const Tensor& y, bool use_data_consistency, GradScope scope);

}  // namespace fedmri::recon
