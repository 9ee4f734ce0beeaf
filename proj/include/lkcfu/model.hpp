#pragma once

#include <torch/torch.h>

#include <cstdint>

#include "lkcfu/config.hpp"

namespace lkcf {

enum class NormKind { kInstance, kBatch, kGroup, kNone };

/// Norm layer for `channels` features. kGroup uses `groups` (clamped to a divisor of channels).
torch::nn::AnyModule make_norm(NormKind kind, int64_t channels, int64_t groups);
NormKind init_norm_kind(InitNorm n);
NormKind body_norm_kind(BodyNorm n);
/// Largest divisor of `channels` not above `requested`.
int64_t effective_groups(int64_t channels, int64_t requested);

/// Conv(k, 2->C0) -> norm -> ReLU on the spliced source pair.
class InitBlockImpl : public torch::nn::Module {
 public:
  InitBlockImpl(const ModelConfig& cfg);
  torch::Tensor forward(const torch::Tensor& pair);
  /// Normalized features before the ReLU.
  torch::Tensor forward_pre_activation(const torch::Tensor& pair);

  torch::nn::Conv2d conv{nullptr};
  torch::nn::AnyModule norm;

 private:
  int kernel_;
};
TORCH_MODULE(InitBlock);

/// Two (norm -> ReLU -> dropout -> conv) sub-blocks with an identity residual.
class LkcBlockImpl : public torch::nn::Module {
 public:
  LkcBlockImpl(int64_t channels, int kernel, NormKind norm, int64_t groups, double dropout_p);
  torch::Tensor forward(const torch::Tensor& x);

  torch::nn::AnyModule norm1, norm2;
  torch::nn::Dropout drop1{nullptr}, drop2{nullptr};
  torch::nn::Conv2d conv1{nullptr}, conv2{nullptr};

 private:
  int kernel_;
};
TORCH_MODULE(LkcBlock);

/// Single-group norm -> 1x1 expand -> depthwise k x k -> ReLU -> 1x1 project, plus residual.
/// With a group-norm body the norm always has exactly one group.
class LkdcBlockImpl : public torch::nn::Module {
 public:
  static constexpr int64_t kExpansion = 2;

  LkdcBlockImpl(int64_t channels, int kernel, NormKind body_norm);
  torch::Tensor forward(const torch::Tensor& x);
  /// Group count of the internal norm, or 0 when it is not a group norm.
  int64_t norm_groups() const { return norm_groups_; }

  torch::nn::AnyModule norm;
  torch::nn::Conv2d expand{nullptr}, depthwise{nullptr}, project{nullptr};

 private:
  int kernel_;
  int64_t norm_groups_ = 0;
};
TORCH_MODULE(LkdcBlock);

/// Intermediate tensors of one MPAFM evaluation.
struct MpafmTrace {
  torch::Tensor a, b;          // refined weights
  torch::Tensor e_att, d_att;  // attended encoder / decoder features
  torch::Tensor f;             // bidirectional interaction
  torch::Tensor x;             // recalibrated output
};

/// Multipath adaptive fusion: recalibrates an encoder skip feature against the
/// decoder feature at the same resolution.
///
///   A, B  = split(sigmoid(refine(channel_att(e) + spatial_att(d))))
///   e_att = A * e,  d_att = B * d
///   f     = sigmoid(e_att) * d_att + sigmoid(d_att) * e_att
///   X     = f * sigmoid(recal(f))
///
/// channel_att is avg- and max-pooled features through a shared 1x1 bottleneck
/// (reduction 4), summed; spatial_att is a 7x7 conv over the channel mean and max maps.
class MpafmImpl : public torch::nn::Module {
 public:
  static constexpr int64_t kReduction = 4;

  explicit MpafmImpl(int64_t channels);
  torch::Tensor forward(const torch::Tensor& e, const torch::Tensor& d);
  MpafmTrace trace(const torch::Tensor& e, const torch::Tensor& d);

  torch::Tensor channel_attention(const torch::Tensor& e);
  torch::Tensor spatial_attention(const torch::Tensor& d);

  torch::nn::Conv2d mlp_reduce{nullptr}, mlp_expand{nullptr};
  torch::nn::Conv2d spatial{nullptr};
  torch::nn::Conv2d refine{nullptr};
  torch::nn::Conv2d recal{nullptr};
};
TORCH_MODULE(Mpafm);

/// f = sigmoid(e_att) * d_att + sigmoid(d_att) * e_att.
torch::Tensor bidirectional_interaction(const torch::Tensor& e_att, const torch::Tensor& d_att);

/// Encoder stage: LKCBlock followed (optionally) by an LKDCBlock.
class EncoderStageImpl : public torch::nn::Module {
 public:
  EncoderStageImpl(const ModelConfig& cfg, int stage);
  torch::Tensor forward(const torch::Tensor& x);

  LkcBlock lkc{nullptr};
  LkdcBlock lkdc{nullptr};
};
TORCH_MODULE(EncoderStage);

/// Decoder stage: bilinear x2 + 3x3 conv, skip integration (MPAFM or plain), 3x3 fusion conv, LKCBlock.
class DecoderStageImpl : public torch::nn::Module {
 public:
  DecoderStageImpl(const ModelConfig& cfg, int stage, int64_t in_channels);
  torch::Tensor forward(const torch::Tensor& below, const torch::Tensor& skip);

  torch::nn::Conv2d up_conv{nullptr};
  Mpafm mpafm{nullptr};
  torch::nn::Conv2d fuse{nullptr};
  LkcBlock lkc{nullptr};
};
TORCH_MODULE(DecoderStage);

/// UNet: InitBlock -> 4 encoder stages (stride-2 3x3 conv after each) -> 3x3 bottleneck
/// LKCBlock -> 4 decoder stages -> 1x1 conv -> sigmoid. Input (B,2,H,W), output (B,1,H,W).
class LkcFuNetImpl : public torch::nn::Module {
 public:
  static constexpr int kBottleneckKernel = 3;
  static constexpr int64_t kSpatialMultiple = 16;

  explicit LkcFuNetImpl(const ModelConfig& cfg);
  torch::Tensor forward(const torch::Tensor& pair);
  /// InitBlock output, the feature map used by the local-consistency analysis.
  torch::Tensor init_features(const torch::Tensor& pair);
  const ModelConfig& config() const { return cfg_; }

  InitBlock init{nullptr};
  torch::nn::ModuleList encoders, downs, decoders;
  LkcBlock bottleneck{nullptr};
  torch::nn::Conv2d head{nullptr};

 private:
  ModelConfig cfg_;
};
TORCH_MODULE(LkcFuNet);

/// Builds a model with deterministic initialization from `seed`
/// (Kaiming fan-in normal conv weights, zero biases, unit/zero norm affine).
LkcFuNet make_model(const ModelConfig& cfg, uint64_t seed);

/// Smallest multiple of 16 accepted by model_forward for this configuration.
int64_t minimum_input_size(const ModelConfig& cfg);

/// Validates (B,2,H,W), divisibility by 16 and finiteness; throws on violation.
void check_model_input(const torch::Tensor& pair, const ModelConfig& cfg);

}  // namespace lkcf
