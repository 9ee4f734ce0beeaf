#include "lkcfu/pipeline.hpp"

#include <algorithm>
#include <filesystem>
#include <fstream>
#include <set>
#include <sstream>

#include "lkcfu/error.hpp"

namespace fs = std::filesystem;

namespace lkcf {
namespace {

Image crop_image(const Image& img, int64_t y0, int64_t x0, int64_t h, int64_t w) {
  Image out(h, w, img.channels);
  for (int64_t y = 0; y < h; ++y)
    for (int64_t x = 0; x < w; ++x)
      for (int64_t c = 0; c < img.channels; ++c) out.at(y, x, c) = img.at(y0 + y, x0 + x, c);
  return out;
}

// Mirror index without edge repetition, periodic with period 2(n-1).
int64_t reflect_index(int64_t i, int64_t n) {
  if (n == 1) return 0;
  const int64_t period = 2 * (n - 1);
  i %= period;
  if (i < 0) i += period;
  return i < n ? i : period - i;
}

int64_t round_up(int64_t v, int64_t m) { return (v + m - 1) / m * m; }

}  // namespace

void check_pair(const ImagePair& pair) {
  if (pair.modal_a.channels != 1) throw ContractViolation("pair '" + pair.id + "': modal_a must be grayscale");
  if (pair.modal_b.channels != 1 && pair.modal_b.channels != 3)
    throw ContractViolation("pair '" + pair.id + "': modal_b must have 1 or 3 channels");
  if (pair.modal_a.height != pair.modal_b.height || pair.modal_a.width != pair.modal_b.width)
    throw ContractViolation("pair '" + pair.id + "': modalities differ in size");
}

Image ImagePair::luminance_b() const { return modal_b.channels == 3 ? to_luminance(modal_b).y : modal_b; }

YCbCr to_luminance(const Image& rgb) {
  if (rgb.channels != 3) throw ContractViolation("to_luminance: expected 3 channels, got " + std::to_string(rgb.channels));
  YCbCr out{Image(rgb.height, rgb.width), Image(rgb.height, rgb.width), Image(rgb.height, rgb.width)};
  for (std::size_t i = 0; i < out.y.size(); ++i) {
    const double r = rgb.data[3 * i], g = rgb.data[3 * i + 1], b = rgb.data[3 * i + 2];
    out.y.data[i] = 0.299 * r + 0.587 * g + 0.114 * b;
    out.cb.data[i] = 0.5 - 0.168736 * r - 0.331264 * g + 0.5 * b;
    out.cr.data[i] = 0.5 + 0.5 * r - 0.418688 * g - 0.081312 * b;
  }
  return out;
}

Image from_luminance(const Image& y, const Image& cb, const Image& cr) {
  auto same = [&](const Image& o) { return o.height == y.height && o.width == y.width && o.channels == 1; };
  if (y.channels != 1 || !same(cb) || !same(cr)) throw ContractViolation("from_luminance: shape mismatch");
  Image out(y.height, y.width, 3);
  for (std::size_t i = 0; i < y.size(); ++i) {
    const double l = y.data[i], u = cb.data[i] - 0.5, v = cr.data[i] - 0.5;
    out.data[3 * i] = std::clamp(l + 1.402 * v, 0.0, 1.0);
    out.data[3 * i + 1] = std::clamp(l - 0.344136 * u - 0.714136 * v, 0.0, 1.0);
    out.data[3 * i + 2] = std::clamp(l + 1.772 * u, 0.0, 1.0);
  }
  return out;
}

std::vector<ImagePair> load_pair_directory(const std::string& dir_a, const std::string& dir_b, Task task) {
  for (const auto& d : {dir_a, dir_b})
    if (!fs::is_directory(d)) throw IoError("not a directory: '" + d + "'");
  auto list = [](const std::string& dir) {
    std::set<std::string> names;
    for (const auto& e : fs::directory_iterator(dir))
      if (e.is_regular_file() && has_image_extension(e.path().string())) names.insert(e.path().filename().string());
    return names;
  };
  const auto names_a = list(dir_a);
  const auto names_b = list(dir_b);
  for (const auto& n : names_a)
    if (!names_b.count(n)) throw IoError("'" + n + "' in '" + dir_a + "' has no partner in '" + dir_b + "'");
  for (const auto& n : names_b)
    if (!names_a.count(n)) throw IoError("'" + n + "' in '" + dir_b + "' has no partner in '" + dir_a + "'");
  if (names_a.empty()) throw IoError("no images in '" + dir_a + "'");
  std::vector<ImagePair> pairs;
  for (const auto& n : names_a) {
    ImagePair p{fs::path(n).stem().string(), read_image((fs::path(dir_a) / n).string()),
                read_image((fs::path(dir_b) / n).string()), task};
    check_pair(p);
    pairs.push_back(std::move(p));
  }
  return pairs;
}

std::vector<ImagePair> load_manifest(const std::string& path, Task task) {
  std::ifstream in(path);
  if (!in) throw IoError("cannot open manifest '" + path + "'");
  const auto base = fs::path(path).parent_path();
  std::vector<ImagePair> pairs;
  std::string line;
  while (std::getline(in, line)) {
    std::istringstream ls(line);
    std::string a, b;
    if (!(ls >> a)) continue;
    if (a[0] == '#') continue;
    if (!(ls >> b)) throw IoError("manifest '" + path + "': line needs two paths: '" + line + "'");
    ImagePair p{fs::path(a).stem().string(), read_image((base / a).string()), read_image((base / b).string()), task};
    check_pair(p);
    pairs.push_back(std::move(p));
  }
  if (pairs.empty()) throw IoError("manifest '" + path + "' lists no pairs");
  return pairs;
}

// ---------------------------------------------------------------------------

BatchSampler::BatchSampler(const std::vector<ImagePair>& pairs, int64_t crop, uint64_t seed, uint64_t worker)
    : crop_(crop) {
  if (pairs.empty()) throw InvalidArgument("sample_training_batch: empty pair list");
  if (crop < 1) throw InvalidArgument("sample_training_batch: crop must be positive");
  for (const auto& p : pairs) {
    check_pair(p);
    if (crop > p.modal_a.height || crop > p.modal_a.width)
      throw InvalidArgument("sample_training_batch: crop " + std::to_string(crop) + " exceeds pair '" + p.id +
                            "' (" + std::to_string(p.modal_a.height) + "x" + std::to_string(p.modal_a.width) + ")");
    a_.push_back(p.modal_a);
    b_.push_back(p.luminance_b());
  }
  std::seed_seq seq{static_cast<std::uint32_t>(seed), static_cast<std::uint32_t>(seed >> 32),
                    static_cast<std::uint32_t>(worker), static_cast<std::uint32_t>(worker >> 32)};
  rng_.seed(seq);
}

CropOrigin BatchSampler::next_origin() {
  std::uniform_int_distribution<std::size_t> pick(0, a_.size() - 1);
  CropOrigin o;
  o.pair = pick(rng_);
  const auto& img = a_[o.pair];
  o.y = std::uniform_int_distribution<int64_t>(0, img.height - crop_)(rng_);
  o.x = std::uniform_int_distribution<int64_t>(0, img.width - crop_)(rng_);
  return o;
}

torch::Tensor BatchSampler::next_batch(int64_t batch) {
  std::vector<CropOrigin> ignored;
  return next_batch(batch, ignored);
}

torch::Tensor BatchSampler::next_batch(int64_t batch, std::vector<CropOrigin>& origins) {
  if (batch < 1) throw InvalidArgument("sample_training_batch: batch must be positive");
  auto out = torch::empty({batch, 2, crop_, crop_}, torch::kFloat32);
  auto acc = out.accessor<float, 4>();
  origins.clear();
  for (int64_t n = 0; n < batch; ++n) {
    const auto o = next_origin();
    origins.push_back(o);
    const auto& a = a_[o.pair];
    const auto& b = b_[o.pair];
    for (int64_t y = 0; y < crop_; ++y)
      for (int64_t x = 0; x < crop_; ++x) {
        acc[n][0][y][x] = static_cast<float>(a.at(o.y + y, o.x + x));
        acc[n][1][y][x] = static_cast<float>(b.at(o.y + y, o.x + x));
      }
  }
  return out;
}

torch::Tensor sample_training_batch(const std::vector<ImagePair>& pairs, int64_t crop, int64_t batch,
                                    uint64_t rng_seed) {
  BatchSampler sampler(pairs, crop, rng_seed);
  return sampler.next_batch(batch);
}

// ---------------------------------------------------------------------------

PaddedInput pad_for_inference(const ImagePair& pair, int64_t min_size) {
  check_pair(pair);
  const auto h = pair.modal_a.height, w = pair.modal_a.width;
  const auto ph = std::max(round_up(h, 16), round_up(min_size, 16));
  const auto pw = std::max(round_up(w, 16), round_up(min_size, 16));
  const auto lum = pair.luminance_b();
  auto t = torch::empty({1, 2, ph, pw}, torch::kFloat32);
  auto acc = t.accessor<float, 4>();
  for (int64_t y = 0; y < ph; ++y) {
    const auto sy = reflect_index(y, h);
    for (int64_t x = 0; x < pw; ++x) {
      const auto sx = reflect_index(x, w);
      acc[0][0][y][x] = static_cast<float>(pair.modal_a.at(sy, sx));
      acc[0][1][y][x] = static_cast<float>(lum.at(sy, sx));
    }
  }
  return {t, CropBack{h, w}};
}

torch::Tensor crop_back(const torch::Tensor& fused, const CropBack& record) {
  return fused.index({torch::indexing::Slice(), torch::indexing::Slice(),
                      torch::indexing::Slice(0, record.height), torch::indexing::Slice(0, record.width)});
}

torch::Tensor to_tensor(const Image& gray) {
  if (gray.channels != 1) throw ContractViolation("to_tensor: expected a single-channel image");
  auto t = torch::empty({1, 1, gray.height, gray.width}, torch::kFloat32);
  auto* p = t.data_ptr<float>();
  for (std::size_t i = 0; i < gray.size(); ++i) p[i] = static_cast<float>(gray.data[i]);
  return t;
}

Image from_tensor(const torch::Tensor& t) {
  const auto c = t.detach().to(torch::kFloat64).contiguous();
  if (c.dim() != 4 || c.size(0) != 1 || c.size(1) != 1) throw ContractViolation("from_tensor: expected (1,1,H,W)");
  Image img(c.size(2), c.size(3));
  std::copy_n(c.data_ptr<double>(), img.size(), img.data.begin());
  return img;
}

FusedResult fuse_pair(LkcFuNet& model, const ImagePair& pair) {
  torch::NoGradGuard no_grad;
  const bool was_training = model->is_training();
  model->eval();
  const auto padded = pad_for_inference(pair, minimum_input_size(model->config()));
  const auto fused = crop_back(model->forward(padded.tensor), padded.crop_back);
  if (was_training) model->train();

  FusedResult r;
  r.pair_id = pair.id;
  r.config_fingerprint = fingerprint(model->config());
  r.fused_y = from_tensor(fused);
  if (pair.modal_b.channels == 3) {
    const auto ycc = to_luminance(pair.modal_b);
    r.color = from_luminance(r.fused_y, ycc.cb, ycc.cr);
  }
  return r;
}

}  // namespace lkcf
