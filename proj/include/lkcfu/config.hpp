#pragma once

#include <array>
#include <cstdint>
#include <string>
#include <string_view>
#include <vector>

namespace lkcf {

enum class InitNorm { kInstance, kBatch, kNone };
enum class BodyNorm { kGroup, kBatch, kNone };

/// Declarative architecture description. One record per ablation row.
struct ModelConfig {
  InitNorm init_norm = InitNorm::kInstance;
  BodyNorm body_norm = BodyNorm::kGroup;
  int gn_groups_body = 8;
  int init_kernel = 15;
  std::array<int, 4> kernel_schedule{15, 7, 5, 5};
  std::array<int, 4> channel_widths{32, 64, 128, 256};
  bool use_mpafm = true;
  bool use_lkdc = true;
  double dropout_p = 0.0;

  bool operator==(const ModelConfig&) const = default;
};

inline constexpr std::array<int, 4> kDeskScaleWidths{8, 16, 32, 64};

ModelConfig default_model_config();
ModelConfig desk_scale(ModelConfig cfg);

/// Throws InvalidArgument on any violated field constraint.
void validate(const ModelConfig& cfg);

enum class AblationRow { kI, kII, kIII, kIV, kV, kVI, kOurs };

inline constexpr std::array<AblationRow, 7> kAllAblationRows{
    AblationRow::kI,  AblationRow::kII, AblationRow::kIII, AblationRow::kIV,
    AblationRow::kV,  AblationRow::kVI, AblationRow::kOurs};

ModelConfig ablation_config(AblationRow row);
AblationRow parse_ablation_row(std::string_view tag);
std::string to_string(AblationRow row);
/// Human-readable description in the ablation table's wording, e.g. "all BN+3*3 Conv".
std::string describe(AblationRow row);

std::string to_string(InitNorm n);
std::string to_string(BodyNorm n);

// Flat key-value file: one `key = value` per line, `#` starts a comment,
// lists are comma separated. Keys are emitted in a fixed canonical order.
std::string to_kv_text(const ModelConfig& cfg);
ModelConfig model_config_from_kv(std::string_view text);
void save_model_config(const ModelConfig& cfg, const std::string& path);
ModelConfig load_model_config(const std::string& path);

/// FNV-1a 64 of arbitrary text, rendered as 16 lowercase hex digits.
std::string stable_hash(std::string_view text);
std::string fingerprint(const ModelConfig& cfg);

/// Names of the fields that differ, with both values: "channel_widths: expected 8,16,32,64, got 32,64,128,256".
std::vector<std::string> diff_fields(const ModelConfig& expected, const ModelConfig& actual);

}  // namespace lkcf
