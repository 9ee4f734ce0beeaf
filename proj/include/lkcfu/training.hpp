#pragma once

#include <torch/torch.h>

#include <cstdint>
#include <functional>
#include <map>
#include <optional>
#include <ostream>
#include <string>
#include <vector>

#include "lkcfu/config.hpp"
#include "lkcfu/losses.hpp"
#include "lkcfu/metrics.hpp"
#include "lkcfu/model.hpp"
#include "lkcfu/pipeline.hpp"

namespace lkcf {

struct TrainConfig {
  int64_t epochs = 1000;
  double lr = 1e-4;
  int64_t batch = 32;
  int64_t crop = 64;
  uint64_t seed = 0;
  std::string optimizer = "Adam";
  int64_t checkpoint_every = 0;  // epochs; 0 = only at the end
  bool desk_scale = false;
  int64_t max_steps = 0;         // 0 = epochs * steps_per_epoch
  double clip_norm = 10.0;       // NaN guard only; triggers are logged

  bool operator==(const TrainConfig&) const = default;
};

inline constexpr int64_t kDeskScaleEpochs = 200;

TrainConfig default_train_config();
void validate(const TrainConfig& cfg);
/// With cfg.desk_scale set: desk channel widths and at most 200 epochs. No-op otherwise.
void apply_desk_scale(TrainConfig& tcfg, ModelConfig& mcfg);

std::string to_kv_text(const TrainConfig& cfg);
TrainConfig train_config_from_kv(std::string_view text);
/// Stable hash of the canonical model + train configuration.
std::string run_fingerprint(const ModelConfig& mcfg, const TrainConfig& tcfg);

/// Batches per epoch: ceil(sum over pairs of (H*W)/crop^2 / batch). A 256x256 pair
/// with 64x64 crops contributes 16 patches.
int64_t steps_per_epoch(const std::vector<ImagePair>& data, int64_t crop, int64_t batch);

struct StepRecord {
  int64_t step = 0;  // 1-based, strictly increasing
  int64_t epoch = 0;
  LossBreakdown loss;
  double grad_norm = 0;
  bool clipped = false;
  double wall_ms = 0;
};

struct EpochRecord {
  int64_t epoch = 0;
  int64_t steps = 0;
  LossBreakdown mean;
};

struct TrainLog {
  std::vector<StepRecord> steps;
  std::vector<EpochRecord> epochs;
};

// --- checkpoints ------------------------------------------------------------

struct AdamSlot {
  int64_t step = 0;
  torch::Tensor exp_avg;
  torch::Tensor exp_avg_sq;
};

/// File layout (little endian), version 1:
///   "LKCFCKPT" u8:version
///   str:model_config_kv str:train_config_kv str:model_fingerprint str:run_fingerprint
///   i64:step
///   u32:n {str:name tensor} parameters, u32:n {str:name tensor} buffers
///   u32:n {str:name i64:step tensor:exp_avg tensor:exp_avg_sq} optimizer state
///   u64:FNV-1a checksum of every preceding byte
/// str = u32 length + bytes; tensor = u8 dtype (0 f32, 1 i64) u32 ndim i64 dims[] raw data.
struct Checkpoint {
  static constexpr std::uint8_t kVersion = 1;

  ModelConfig model_config;
  TrainConfig train_config;
  std::string model_fingerprint;
  std::string run_fingerprint;
  int64_t step = 0;
  std::map<std::string, torch::Tensor> parameters;
  std::map<std::string, torch::Tensor> buffers;
  std::map<std::string, AdamSlot> optimizer;
};

Checkpoint make_checkpoint(LkcFuNet& model, const TrainConfig& tcfg, int64_t step,
                           const torch::optim::Adam* optimizer = nullptr);
/// Atomic: writes `path`.tmp then renames over `path`.
void save_checkpoint(const Checkpoint& ckpt, const std::string& path);
/// With `expected` set, a differing model fingerprint throws FingerprintMismatch listing the fields.
Checkpoint load_checkpoint(const std::string& path, const ModelConfig* expected = nullptr);
/// Model with the checkpoint's configuration and weights.
LkcFuNet instantiate(const Checkpoint& ckpt);
void restore_optimizer(torch::optim::Adam& optimizer, LkcFuNet& model, const Checkpoint& ckpt);

// --- training ---------------------------------------------------------------

struct TrainOutputs {
  std::ostream* log_stream = nullptr;  // line-delimited JSON
  std::string checkpoint_path;         // empty = keep in memory only
  bool log_wall_time = true;           // off for byte-reproducible logs
};

struct TrainResult {
  LkcFuNet model{nullptr};
  Checkpoint checkpoint;
  TrainLog log;
};

/// Adam with constant lr on loss_total(fused, modal_a, luminance of modal_b).
/// A non-finite loss or gradient throws TrainingDiverged; the last good state is
/// persisted to `<checkpoint_path>` first when a path is given.
TrainResult train(ModelConfig mcfg, TrainConfig tcfg, const std::vector<ImagePair>& data,
                  const TrainOutputs& out = {});

/// Fuses every pair with the model and scores it.
MetricReport evaluate_model(LkcFuNet& model, const std::vector<ImagePair>& eval_set, const std::string& dataset);

// --- ablation ---------------------------------------------------------------

struct AblationResult {
  AblationRow row;
  std::string config_fingerprint;
  std::optional<MetricReport> report;  // empty when the row failed
  std::string error;
  double final_loss = 0;
};

/// Trains one model per row (same data, same train config) and evaluates each on `eval_set`.
/// A failing row is recorded and the remaining rows still run.
std::vector<AblationResult> run_ablation_matrix(const std::vector<AblationRow>& rows, const TrainConfig& tcfg,
                                                const std::vector<ImagePair>& train_set,
                                                const std::vector<ImagePair>& eval_set,
                                                std::ostream* progress = nullptr);

/// One line per row: row,config,SD,AG,SF,SCD,VIFF,SSIM (aggregate means per row).
std::string ablation_csv(const std::vector<AblationResult>& results);

}  // namespace lkcf
