#include <cstring>
#include <filesystem>
#include <fstream>
#include <sstream>

#include "lkcfu/error.hpp"
#include "lkcfu/training.hpp"

namespace lkcf {
namespace {

constexpr char kMagic[8] = {'L', 'K', 'C', 'F', 'C', 'K', 'P', 'T'};

class Writer {
 public:
  template <typename T>
  void pod(const T& v) {
    bytes(&v, sizeof v);
  }
  void str(const std::string& s) {
    pod(static_cast<std::uint32_t>(s.size()));
    bytes(s.data(), s.size());
  }
  void tensor(const torch::Tensor& t) {
    const auto c = t.detach().cpu().contiguous();
    std::uint8_t dtype = 0;
    if (c.scalar_type() == torch::kFloat32) dtype = 0;
    else if (c.scalar_type() == torch::kInt64) dtype = 1;
    else throw InvalidArgument("checkpoint: unsupported tensor dtype");
    pod(dtype);
    pod(static_cast<std::uint32_t>(c.dim()));
    for (auto d : c.sizes()) pod(static_cast<int64_t>(d));
    bytes(c.data_ptr(), c.nbytes());
  }
  void bytes(const void* p, std::size_t n) {
    const auto* b = static_cast<const char*>(p);
    buf_.insert(buf_.end(), b, b + n);
  }
  const std::string& buffer() const { return buf_; }

 private:
  std::string buf_;
};

class Reader {
 public:
  Reader(const std::string& data, std::string path) : data_(data), path_(std::move(path)) {}

  template <typename T>
  T pod() {
    T v;
    bytes(&v, sizeof v);
    return v;
  }
  std::string str() {
    const auto n = pod<std::uint32_t>();
    need(n);
    std::string s = data_.substr(pos_, n);
    pos_ += n;
    return s;
  }
  torch::Tensor tensor() {
    const auto dtype = pod<std::uint8_t>();
    if (dtype > 1) corrupt("unknown tensor dtype");
    const auto ndim = pod<std::uint32_t>();
    if (ndim > 8) corrupt("implausible tensor rank");
    std::vector<int64_t> dims(ndim);
    for (auto& d : dims) {
      d = pod<int64_t>();
      if (d < 0) corrupt("negative tensor dimension");
    }
    auto t = torch::empty(dims, dtype == 0 ? torch::kFloat32 : torch::kInt64);
    bytes(t.data_ptr(), t.nbytes());
    return t;
  }
  void bytes(void* p, std::size_t n) {
    need(n);
    std::memcpy(p, data_.data() + pos_, n);
    pos_ += n;
  }
  std::size_t pos() const { return pos_; }
  [[noreturn]] void corrupt(const std::string& why) const {
    throw CorruptFile("checkpoint '" + path_ + "' is corrupt: " + why);
  }

 private:
  void need(std::size_t n) const {
    if (pos_ + n > data_.size()) corrupt("truncated");
  }
  const std::string& data_;
  std::string path_;
  std::size_t pos_ = 0;
};

std::uint64_t fnv1a(const char* p, std::size_t n) {
  std::uint64_t h = 14695981039346656037ULL;
  for (std::size_t i = 0; i < n; ++i) {
    h ^= static_cast<unsigned char>(p[i]);
    h *= 1099511628211ULL;
  }
  return h;
}

std::map<std::string, AdamSlot> adam_state(const torch::optim::Adam& opt, LkcFuNet& model) {
  std::map<std::string, AdamSlot> out;
  const auto& state = opt.state();
  for (const auto& item : model->named_parameters()) {
    auto it = state.find(item.value().unsafeGetTensorImpl());
    if (it == state.end()) continue;
    const auto& s = static_cast<const torch::optim::AdamParamState&>(*it->second);
    out[item.key()] = AdamSlot{s.step(), s.exp_avg().clone(), s.exp_avg_sq().clone()};
  }
  return out;
}

}  // namespace

Checkpoint make_checkpoint(LkcFuNet& model, const TrainConfig& tcfg, int64_t step,
                           const torch::optim::Adam* optimizer) {
  Checkpoint c;
  c.model_config = model->config();
  c.train_config = tcfg;
  c.model_fingerprint = fingerprint(c.model_config);
  c.run_fingerprint = run_fingerprint(c.model_config, tcfg);
  c.step = step;
  for (const auto& p : model->named_parameters()) c.parameters[p.key()] = p.value().detach().clone();
  for (const auto& b : model->named_buffers()) c.buffers[b.key()] = b.value().detach().clone();
  if (optimizer) c.optimizer = adam_state(*optimizer, model);
  return c;
}

void save_checkpoint(const Checkpoint& ckpt, const std::string& path) {
  Writer w;
  w.bytes(kMagic, sizeof kMagic);
  w.pod(Checkpoint::kVersion);
  w.str(to_kv_text(ckpt.model_config));
  w.str(to_kv_text(ckpt.train_config));
  w.str(ckpt.model_fingerprint);
  w.str(ckpt.run_fingerprint);
  w.pod(ckpt.step);
  for (const auto* group : {&ckpt.parameters, &ckpt.buffers}) {
    w.pod(static_cast<std::uint32_t>(group->size()));
    for (const auto& [name, t] : *group) {
      w.str(name);
      w.tensor(t);
    }
  }
  w.pod(static_cast<std::uint32_t>(ckpt.optimizer.size()));
  for (const auto& [name, slot] : ckpt.optimizer) {
    w.str(name);
    w.pod(slot.step);
    w.tensor(slot.exp_avg);
    w.tensor(slot.exp_avg_sq);
  }
  w.pod(fnv1a(w.buffer().data(), w.buffer().size()));

  const auto parent = std::filesystem::path(path).parent_path();
  if (!parent.empty()) std::filesystem::create_directories(parent);
  const std::string tmp = path + ".tmp";
  {
    std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
    if (!out) throw IoError("cannot open '" + tmp + "' for writing");
    out.write(w.buffer().data(), static_cast<std::streamsize>(w.buffer().size()));
    if (!out) throw IoError("write failed: '" + tmp + "'");
  }
  std::filesystem::rename(tmp, path);
}

Checkpoint load_checkpoint(const std::string& path, const ModelConfig* expected) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot open checkpoint '" + path + "'");
  std::stringstream ss;
  ss << in.rdbuf();
  const std::string data = ss.str();
  Reader r(data, path);

  char magic[sizeof kMagic];
  r.bytes(magic, sizeof magic);
  if (std::memcmp(magic, kMagic, sizeof kMagic) != 0) r.corrupt("bad magic");
  if (data.size() < sizeof(std::uint64_t) + sizeof kMagic) r.corrupt("truncated");
  std::uint64_t stored = 0;
  std::memcpy(&stored, data.data() + data.size() - sizeof stored, sizeof stored);
  if (stored != fnv1a(data.data(), data.size() - sizeof stored)) r.corrupt("checksum mismatch");
  const auto version = r.pod<std::uint8_t>();
  if (version != Checkpoint::kVersion) r.corrupt("unsupported version " + std::to_string(version));

  Checkpoint c;
  c.model_config = model_config_from_kv(r.str());
  c.train_config = train_config_from_kv(r.str());
  c.model_fingerprint = r.str();
  c.run_fingerprint = r.str();
  if (c.model_fingerprint != fingerprint(c.model_config)) r.corrupt("fingerprint does not match stored config");
  c.step = r.pod<int64_t>();
  for (auto* group : {&c.parameters, &c.buffers}) {
    const auto n = r.pod<std::uint32_t>();
    for (std::uint32_t i = 0; i < n; ++i) {
      auto name = r.str();
      (*group)[name] = r.tensor();
    }
  }
  const auto n_opt = r.pod<std::uint32_t>();
  for (std::uint32_t i = 0; i < n_opt; ++i) {
    auto name = r.str();
    AdamSlot s;
    s.step = r.pod<int64_t>();
    s.exp_avg = r.tensor();
    s.exp_avg_sq = r.tensor();
    c.optimizer[name] = std::move(s);
  }
  if (r.pos() + sizeof(std::uint64_t) != data.size()) r.corrupt("trailing bytes");

  if (expected && fingerprint(*expected) != c.model_fingerprint) {
    std::string msg = "checkpoint '" + path + "' config fingerprint " + c.model_fingerprint +
                      " does not match expected " + fingerprint(*expected) + ":";
    for (const auto& d : diff_fields(*expected, c.model_config)) msg += " [" + d + "]";
    throw FingerprintMismatch(msg);
  }
  return c;
}

LkcFuNet instantiate(const Checkpoint& ckpt) {
  auto model = make_model(ckpt.model_config, 0);
  torch::NoGradGuard no_grad;
  auto copy_into = [&](const std::map<std::string, torch::Tensor>& src, auto named) {
    if (named.size() != src.size()) throw CorruptFile("checkpoint tensor count does not match the model");
    for (auto& item : named) {
      auto it = src.find(item.key());
      if (it == src.end()) throw CorruptFile("checkpoint lacks tensor '" + item.key() + "'");
      if (it->second.sizes() != item.value().sizes())
        throw CorruptFile("checkpoint tensor '" + item.key() + "' has the wrong shape");
      item.value().copy_(it->second);
    }
  };
  copy_into(ckpt.parameters, model->named_parameters());
  copy_into(ckpt.buffers, model->named_buffers());
  return model;
}

void restore_optimizer(torch::optim::Adam& optimizer, LkcFuNet& model, const Checkpoint& ckpt) {
  auto& state = optimizer.state();
  for (const auto& item : model->named_parameters()) {
    auto it = ckpt.optimizer.find(item.key());
    if (it == ckpt.optimizer.end()) continue;
    auto s = std::make_unique<torch::optim::AdamParamState>();
    s->step(it->second.step);
    s->exp_avg(it->second.exp_avg.clone());
    s->exp_avg_sq(it->second.exp_avg_sq.clone());
    state[item.value().unsafeGetTensorImpl()] = std::move(s);
  }
}

}  // namespace lkcf
