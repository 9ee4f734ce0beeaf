#pragma once

#include <torch/torch.h>

#include <cstdint>
#include <optional>
#include <random>
#include <string>
#include <vector>

#include "lkcfu/image.hpp"
#include "lkcfu/model.hpp"

namespace lkcf {

enum class Task { kMedical, kInfraredVisible };

struct ImagePair {
  std::string id;
  Image modal_a;  // grayscale (MRI or IR)
  Image modal_b;  // grayscale or RGB (CT/PET/SPECT or VIS)
  Task task = Task::kMedical;

  /// I_B^Y: luminance of modal_b, or modal_b itself when it is grayscale.
  Image luminance_b() const;
};

/// Throws ContractViolation unless both modalities share H x W and modal_a is single-channel.
void check_pair(const ImagePair& pair);

struct YCbCr {
  Image y, cb, cr;
};

/// Full-range BT.601. Cb and Cr are offset so the gray axis sits at 0.5.
YCbCr to_luminance(const Image& rgb);
/// Inverse of to_luminance, clamped to [0,1].
Image from_luminance(const Image& y, const Image& cb, const Image& cr);

/// Two parallel folders with filename-matched images. Any file without a
/// partner is a hard error.
std::vector<ImagePair> load_pair_directory(const std::string& dir_a, const std::string& dir_b,
                                           Task task = Task::kMedical);
/// Two whitespace-separated relative paths per line, resolved against the manifest's folder.
std::vector<ImagePair> load_manifest(const std::string& path, Task task = Task::kMedical);

struct CropOrigin {
  std::size_t pair = 0;
  int64_t y = 0;
  int64_t x = 0;
};

/// Uniform random pair + crop-origin sampler. Each (seed, worker) owns an independent stream.
class BatchSampler {
 public:
  BatchSampler(const std::vector<ImagePair>& pairs, int64_t crop, uint64_t seed, uint64_t worker = 0);

  CropOrigin next_origin();
  /// (batch,2,crop,crop) float tensor: channel 0 = modal_a, channel 1 = luminance of modal_b.
  torch::Tensor next_batch(int64_t batch);
  /// Batch and the origins it was cut from.
  torch::Tensor next_batch(int64_t batch, std::vector<CropOrigin>& origins);

 private:
  std::vector<Image> a_;
  std::vector<Image> b_;
  int64_t crop_;
  std::mt19937_64 rng_;
};

inline constexpr int64_t kDefaultCrop = 64;
inline constexpr int64_t kDefaultBatch = 32;

torch::Tensor sample_training_batch(const std::vector<ImagePair>& pairs, int64_t crop = kDefaultCrop,
                                    int64_t batch = kDefaultBatch, uint64_t rng_seed = 0);

struct CropBack {
  int64_t height = 0;  // original dims
  int64_t width = 0;
};

struct PaddedInput {
  torch::Tensor tensor;  // (1,2,H',W')
  CropBack crop_back;
};

/// Reflect-pads the pair on the bottom/right to the next multiple of 16 (and at
/// least `min_size` per side). Reflection is periodic, so any pad amount works.
PaddedInput pad_for_inference(const ImagePair& pair, int64_t min_size = 0);
torch::Tensor crop_back(const torch::Tensor& fused, const CropBack& record);

/// (1,1,H,W) float tensor from a single-channel image.
torch::Tensor to_tensor(const Image& gray);
Image from_tensor(const torch::Tensor& t);

struct FusedResult {
  std::string pair_id;
  std::string config_fingerprint;
  Image fused_y;
  std::optional<Image> color;  // present iff modal_b was colour
};

/// Pads, runs the model in eval mode without gradients, crops back and reinjects colour.
FusedResult fuse_pair(LkcFuNet& model, const ImagePair& pair);

/// Synthetic structured pairs: modal A carries smooth bright blobs, modal B sharp
/// edges and stripes, so neither source alone holds all the content.
std::vector<ImagePair> make_synthetic_pairs(int count, int64_t size, uint64_t seed);

}  // namespace lkcf
