#include "lkcfu/model.hpp"

#include <algorithm>
#include <string>

#include "lkcfu/error.hpp"

namespace lkcf {
namespace F = torch::nn::functional;
namespace {

torch::nn::Conv2d conv(int64_t in, int64_t out, int64_t k, int64_t stride = 1, bool bias = true,
                       int64_t groups = 1) {
  return torch::nn::Conv2d(
      torch::nn::Conv2dOptions(in, out, k).stride(stride).padding(k / 2).bias(bias).groups(groups));
}

void check_kernel_fits(const torch::Tensor& x, int kernel, const char* where) {
  if (x.size(2) < kernel || x.size(3) < kernel)
    throw RejectedInput(std::string(where) + ": spatial dims " + std::to_string(x.size(2)) + "x" +
                        std::to_string(x.size(3)) + " smaller than kernel " + std::to_string(kernel));
}

void check_channels(const torch::Tensor& x, int64_t channels, const char* where) {
  if (x.dim() != 4 || x.size(1) != channels)
    throw ContractViolation(std::string(where) + ": expected (B," + std::to_string(channels) +
                            ",H,W) input, got " + std::to_string(x.dim() == 4 ? x.size(1) : -1) +
                            " channels");
}

}  // namespace

int64_t effective_groups(int64_t channels, int64_t requested) {
  int64_t g = std::clamp<int64_t>(requested, 1, channels);
  while (channels % g != 0) --g;
  return g;
}

NormKind init_norm_kind(InitNorm n) {
  switch (n) {
    case InitNorm::kInstance: return NormKind::kInstance;
    case InitNorm::kBatch: return NormKind::kBatch;
    case InitNorm::kNone: return NormKind::kNone;
  }
  return NormKind::kNone;
}

NormKind body_norm_kind(BodyNorm n) {
  switch (n) {
    case BodyNorm::kGroup: return NormKind::kGroup;
    case BodyNorm::kBatch: return NormKind::kBatch;
    case BodyNorm::kNone: return NormKind::kNone;
  }
  return NormKind::kNone;
}

torch::nn::AnyModule make_norm(NormKind kind, int64_t channels, int64_t groups) {
  switch (kind) {
    case NormKind::kInstance:
      // Instance statistics in both train and eval mode.
      return torch::nn::AnyModule(torch::nn::InstanceNorm2d(
          torch::nn::InstanceNorm2dOptions(channels).affine(true).track_running_stats(false)));
    case NormKind::kBatch:
      return torch::nn::AnyModule(torch::nn::BatchNorm2d(channels));
    case NormKind::kGroup:
      return torch::nn::AnyModule(
          torch::nn::GroupNorm(torch::nn::GroupNormOptions(effective_groups(channels, groups), channels)));
    case NormKind::kNone:
      break;
  }
  return torch::nn::AnyModule(torch::nn::Identity());
}

// ---------------------------------------------------------------------------

InitBlockImpl::InitBlockImpl(const ModelConfig& cfg) : kernel_(cfg.init_kernel) {
  const auto kind = init_norm_kind(cfg.init_norm);
  // A following norm cancels a per-channel bias.
  conv = register_module("conv", lkcf::conv(2, cfg.channel_widths[0], cfg.init_kernel, 1, kind == NormKind::kNone));
  norm = make_norm(kind, cfg.channel_widths[0], 1);
  register_module("norm", norm.ptr());
}

torch::Tensor InitBlockImpl::forward_pre_activation(const torch::Tensor& pair) {
  check_channels(pair, 2, "init_block");
  check_kernel_fits(pair, kernel_, "init_block");
  return norm.forward(conv->forward(pair));
}

torch::Tensor InitBlockImpl::forward(const torch::Tensor& pair) {
  return torch::relu(forward_pre_activation(pair));
}

// ---------------------------------------------------------------------------

LkcBlockImpl::LkcBlockImpl(int64_t channels, int kernel, NormKind norm, int64_t groups, double dropout_p)
    : kernel_(kernel) {
  norm1 = make_norm(norm, channels, groups);
  norm2 = make_norm(norm, channels, groups);
  register_module("norm1", norm1.ptr());
  drop1 = register_module("drop1", torch::nn::Dropout(dropout_p));
  conv1 = register_module("conv1", conv(channels, channels, kernel));
  register_module("norm2", norm2.ptr());
  drop2 = register_module("drop2", torch::nn::Dropout(dropout_p));
  conv2 = register_module("conv2", conv(channels, channels, kernel));
}

torch::Tensor LkcBlockImpl::forward(const torch::Tensor& x) {
  check_kernel_fits(x, kernel_, "lkc_block");
  auto h = conv1->forward(drop1->forward(torch::relu(norm1.forward(x))));
  h = conv2->forward(drop2->forward(torch::relu(norm2.forward(h))));
  return x + h;
}

// ---------------------------------------------------------------------------

LkdcBlockImpl::LkdcBlockImpl(int64_t channels, int kernel, NormKind body_norm) : kernel_(kernel) {
  const int64_t hidden = channels * kExpansion;
  norm = make_norm(body_norm, channels, 1);
  if (body_norm == NormKind::kGroup) norm_groups_ = norm.get<torch::nn::GroupNorm>()->options.num_groups();
  register_module("norm", norm.ptr());
  expand = register_module("expand", conv(channels, hidden, 1));
  depthwise = register_module("depthwise", conv(hidden, hidden, kernel, 1, true, hidden));
  project = register_module("project", conv(hidden, channels, 1));
}

torch::Tensor LkdcBlockImpl::forward(const torch::Tensor& x) {
  check_kernel_fits(x, kernel_, "lkdc_block");
  auto h = depthwise->forward(expand->forward(norm.forward(x)));
  return x + project->forward(torch::relu(h));
}

// ---------------------------------------------------------------------------

torch::Tensor bidirectional_interaction(const torch::Tensor& e_att, const torch::Tensor& d_att) {
  return torch::sigmoid(e_att) * d_att + torch::sigmoid(d_att) * e_att;
}

MpafmImpl::MpafmImpl(int64_t channels) {
  const int64_t hidden = std::max<int64_t>(1, channels / kReduction);
  mlp_reduce = register_module("mlp_reduce", conv(channels, hidden, 1));
  mlp_expand = register_module("mlp_expand", conv(hidden, channels, 1));
  spatial = register_module("spatial", conv(2, 1, 7));
  refine = register_module("refine", conv(channels, 2 * channels, 3));
  recal = register_module("recal", conv(channels, channels, 3));
}

torch::Tensor MpafmImpl::channel_attention(const torch::Tensor& e) {
  auto mlp = [this](const torch::Tensor& v) { return mlp_expand->forward(torch::relu(mlp_reduce->forward(v))); };
  const auto avg = e.mean({2, 3}, /*keepdim=*/true);
  const auto mx = e.amax({2, 3}, /*keepdim=*/true);
  return mlp(avg) + mlp(mx);
}

torch::Tensor MpafmImpl::spatial_attention(const torch::Tensor& d) {
  const auto avg = d.mean(1, /*keepdim=*/true);
  const auto mx = d.amax(1, /*keepdim=*/true);
  return spatial->forward(torch::cat({avg, mx}, 1));
}

MpafmTrace MpafmImpl::trace(const torch::Tensor& e, const torch::Tensor& d) {
  if (e.sizes() != d.sizes())
    throw ContractViolation("mpafm: encoder and decoder features differ in shape");
  check_channels(e, mlp_reduce->options.in_channels(), "mpafm");
  MpafmTrace t;
  const auto weights = torch::sigmoid(refine->forward(channel_attention(e) + spatial_attention(d)));
  auto parts = weights.chunk(2, 1);
  t.a = parts[0];
  t.b = parts[1];
  t.e_att = t.a * e;
  t.d_att = t.b * d;
  t.f = bidirectional_interaction(t.e_att, t.d_att);
  t.x = t.f * torch::sigmoid(recal->forward(t.f));
  return t;
}

torch::Tensor MpafmImpl::forward(const torch::Tensor& e, const torch::Tensor& d) { return trace(e, d).x; }

// ---------------------------------------------------------------------------

EncoderStageImpl::EncoderStageImpl(const ModelConfig& cfg, int stage) {
  const auto c = cfg.channel_widths[static_cast<std::size_t>(stage)];
  const auto k = cfg.kernel_schedule[static_cast<std::size_t>(stage)];
  const auto kind = body_norm_kind(cfg.body_norm);
  lkc = register_module("lkc", LkcBlock(c, k, kind, cfg.gn_groups_body, cfg.dropout_p));
  if (cfg.use_lkdc) lkdc = register_module("lkdc", LkdcBlock(c, k, kind));
}

torch::Tensor EncoderStageImpl::forward(const torch::Tensor& x) {
  auto h = lkc->forward(x);
  return lkdc ? lkdc->forward(h) : h;
}

DecoderStageImpl::DecoderStageImpl(const ModelConfig& cfg, int stage, int64_t in_channels) {
  const auto c = cfg.channel_widths[static_cast<std::size_t>(stage)];
  const auto k = cfg.kernel_schedule[static_cast<std::size_t>(stage)];
  up_conv = register_module("up_conv", conv(in_channels, c, 3));
  if (cfg.use_mpafm) mpafm = register_module("mpafm", Mpafm(c));
  fuse = register_module("fuse", conv(2 * c, c, 3));
  lkc = register_module("lkc",
                        LkcBlock(c, k, body_norm_kind(cfg.body_norm), cfg.gn_groups_body, cfg.dropout_p));
}

torch::Tensor DecoderStageImpl::forward(const torch::Tensor& below, const torch::Tensor& skip) {
  auto d = F::interpolate(below, F::InterpolateFuncOptions()
                                     .size(std::vector<int64_t>{skip.size(2), skip.size(3)})
                                     .mode(torch::kBilinear)
                                     .align_corners(false));
  d = up_conv->forward(d);
  const auto x = mpafm ? mpafm->forward(skip, d) : skip;
  return lkc->forward(fuse->forward(torch::cat({d, x}, 1)));
}

// ---------------------------------------------------------------------------

LkcFuNetImpl::LkcFuNetImpl(const ModelConfig& cfg) : cfg_(cfg) {
  validate(cfg);
  const auto& w = cfg.channel_widths;
  init = register_module("init", InitBlock(cfg));
  for (int s = 0; s < 4; ++s) {
    encoders->push_back(EncoderStage(cfg, s));
    const auto next = w[static_cast<std::size_t>(std::min(s + 1, 3))];
    downs->push_back(conv(w[static_cast<std::size_t>(s)], next, 3, 2));
  }
  register_module("encoders", encoders);
  register_module("downs", downs);
  bottleneck = register_module(
      "bottleneck", LkcBlock(w[3], kBottleneckKernel, body_norm_kind(cfg.body_norm), cfg.gn_groups_body, cfg.dropout_p));
  // decoders[i] handles stage 3 - i.
  for (int s = 3; s >= 0; --s) {
    const auto in = w[static_cast<std::size_t>(std::min(s + 1, 3))];
    decoders->push_back(DecoderStage(cfg, s, in));
  }
  register_module("decoders", decoders);
  head = register_module("head", conv(w[0], 1, 1));
}

torch::Tensor LkcFuNetImpl::init_features(const torch::Tensor& pair) { return init->forward(pair); }

torch::Tensor LkcFuNetImpl::forward(const torch::Tensor& pair) {
  check_model_input(pair, cfg_);
  auto h = init->forward(pair);
  std::vector<torch::Tensor> skips;
  for (std::size_t s = 0; s < 4; ++s) {
    h = encoders[s]->as<EncoderStage>()->forward(h);
    skips.push_back(h);
    h = downs[s]->as<torch::nn::Conv2d>()->forward(h);
  }
  h = bottleneck->forward(h);
  for (std::size_t i = 0; i < 4; ++i) h = decoders[i]->as<DecoderStage>()->forward(h, skips[3 - i]);
  return torch::sigmoid(head->forward(h));
}

LkcFuNet make_model(const ModelConfig& cfg, uint64_t seed) {
  torch::manual_seed(seed);
  LkcFuNet net(cfg);
  torch::NoGradGuard no_grad;
  for (auto& m : net->modules(/*include_self=*/false)) {
    if (auto* c = m->as<torch::nn::Conv2d>()) {
      torch::nn::init::kaiming_normal_(c->weight, 0.0, torch::kFanIn, torch::kLinear);
      if (c->bias.defined()) c->bias.zero_();
    }
  }
  return net;
}

int64_t minimum_input_size(const ModelConfig& cfg) {
  for (int64_t m = LkcFuNetImpl::kSpatialMultiple;; m += LkcFuNetImpl::kSpatialMultiple) {
    bool ok = m >= cfg.init_kernel && m / 16 >= LkcFuNetImpl::kBottleneckKernel;
    for (int s = 0; s < 4; ++s) ok = ok && (m >> s) >= cfg.kernel_schedule[static_cast<std::size_t>(s)];
    if (ok) return m;
  }
}

void check_model_input(const torch::Tensor& pair, const ModelConfig& cfg) {
  if (pair.dim() != 4 || pair.size(1) != 2)
    throw ContractViolation("model_forward: expected (B,2,H,W) input");
  const auto h = pair.size(2), w = pair.size(3);
  constexpr auto m = LkcFuNetImpl::kSpatialMultiple;
  if (h % m != 0 || w % m != 0) {
    const auto ph = (h + m - 1) / m * m, pw = (w + m - 1) / m * m;
    throw RejectedInput("model_forward: H and W must be divisible by 16, got " + std::to_string(h) + "x" +
                        std::to_string(w) + "; reflect-pad to " + std::to_string(ph) + "x" + std::to_string(pw));
  }
  const auto min = minimum_input_size(cfg);
  if (h < min || w < min)
    throw RejectedInput("model_forward: input " + std::to_string(h) + "x" + std::to_string(w) +
                        " below the minimum " + std::to_string(min) + "x" + std::to_string(min) +
                        " for this kernel schedule");
  if (!torch::isfinite(pair).all().item<bool>()) throw ContractViolation("model_forward: non-finite input");
}

}  // namespace lkcf
