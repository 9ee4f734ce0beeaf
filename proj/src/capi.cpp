#include "lkcfu/lkcfu.h"

#include <algorithm>
#include <atomic>
#include <cstdlib>
#include <exception>
#include <thread>
#include <cstring>
#include <filesystem>
#include <fstream>
#include <sstream>

#include "lkcfu/analysis.hpp"
#include "lkcfu/error.hpp"
#include "lkcfu/training.hpp"

namespace fs = std::filesystem;

struct lkcf_config {
  lkcf::ModelConfig cfg;
};

struct lkcf_model {
  lkcf::LkcFuNet net{nullptr};
  lkcf::TrainConfig train_config;
  int64_t step = 0;
};

struct lkcf_dataset {
  std::vector<lkcf::ImagePair> pairs;
};

namespace {

thread_local std::string g_last_error;

lkcf_status to_status(lkcf::ErrorCode code) {
  switch (code) {
    case lkcf::ErrorCode::kInvalidArgument: return LKCF_ERR_INVALID_ARGUMENT;
    case lkcf::ErrorCode::kRejectedInput: return LKCF_ERR_REJECTED_INPUT;
    case lkcf::ErrorCode::kContractViolation: return LKCF_ERR_CONTRACT;
    case lkcf::ErrorCode::kIo: return LKCF_ERR_IO;
    case lkcf::ErrorCode::kFingerprintMismatch: return LKCF_ERR_FINGERPRINT;
    case lkcf::ErrorCode::kDegenerateMetric: return LKCF_ERR_DEGENERATE;
    case lkcf::ErrorCode::kTrainingDiverged: return LKCF_ERR_DIVERGED;
    case lkcf::ErrorCode::kCorruptFile: return LKCF_ERR_CORRUPT;
    case lkcf::ErrorCode::kInternal: break;
  }
  return LKCF_ERR_INTERNAL;
}

template <typename Fn>
lkcf_status guard(Fn&& fn) {
  try {
    g_last_error.clear();
    fn();
    return LKCF_OK;
  } catch (const lkcf::Error& e) {
    g_last_error = e.what();
    return to_status(e.code());
  } catch (const fs::filesystem_error& e) {
    g_last_error = e.what();
    return LKCF_ERR_IO;
  } catch (const c10::Error& e) {
    g_last_error = e.what_without_backtrace();
    return LKCF_ERR_INTERNAL;
  } catch (const std::exception& e) {
    g_last_error = e.what();
    return LKCF_ERR_INTERNAL;
  } catch (...) {
    g_last_error = "unknown error";
    return LKCF_ERR_INTERNAL;
  }
}

template <typename T>
T& need(T* p, const char* what) {
  if (!p) throw lkcf::InvalidArgument(std::string(what) + " is NULL");
  return *p;
}

const char* need_str(const char* s, const char* what) {
  if (!s || !*s) throw lkcf::InvalidArgument(std::string(what) + " is empty");
  return s;
}

// Only the CPU backend is built in; LKCF_DEVICE is accepted for forward compatibility.
void check_device() {
  const char* dev = std::getenv("LKCF_DEVICE");
  if (dev && *dev && std::strcmp(dev, "cpu") != 0)
    throw lkcf::InvalidArgument(std::string("LKCF_DEVICE='") + dev + "' is not available (only 'cpu')");
}

lkcf::TrainConfig to_train_config(const lkcf_train_options& o) {
  lkcf::TrainConfig t;
  t.epochs = o.epochs;
  t.lr = o.lr;
  t.batch = o.batch;
  t.crop = o.crop;
  t.seed = o.seed;
  t.checkpoint_every = o.checkpoint_every;
  t.desk_scale = o.desk_scale != 0;
  t.max_steps = o.max_steps;
  return t;
}

std::vector<lkcf::AblationRow> parse_rows(const std::string& spec) {
  std::vector<lkcf::AblationRow> rows;
  std::stringstream ss(spec);
  std::string tag;
  while (std::getline(ss, tag, ',')) rows.push_back(lkcf::parse_ablation_row(tag));
  if (rows.empty()) throw lkcf::InvalidArgument("no ablation rows given");
  return rows;
}

}  // namespace

extern "C" {

const char* lkcf_last_error(void) { return g_last_error.c_str(); }

const char* lkcf_status_name(lkcf_status status) {
  switch (status) {
    case LKCF_OK: return "ok";
    case LKCF_ERR_INVALID_ARGUMENT: return "invalid_argument";
    case LKCF_ERR_REJECTED_INPUT: return "rejected_input";
    case LKCF_ERR_CONTRACT: return "contract_violation";
    case LKCF_ERR_IO: return "io";
    case LKCF_ERR_FINGERPRINT: return "fingerprint_mismatch";
    case LKCF_ERR_DEGENERATE: return "degenerate_metric";
    case LKCF_ERR_DIVERGED: return "training_diverged";
    case LKCF_ERR_CORRUPT: return "corrupt_file";
    case LKCF_ERR_INTERNAL: return "internal";
  }
  return "unknown";
}

const char* lkcf_version(void) { return "0.1.0"; }

lkcf_status lkcf_config_default(lkcf_config** out) {
  return guard([&] {
    need(out, "out");
    *out = new lkcf_config{lkcf::default_model_config()};
  });
}

lkcf_status lkcf_config_ablation(const char* row, lkcf_config** out) {
  return guard([&] {
    need(out, "out");
    *out = new lkcf_config{lkcf::ablation_config(lkcf::parse_ablation_row(need_str(row, "row")))};
  });
}

lkcf_status lkcf_config_load(const char* path, lkcf_config** out) {
  return guard([&] {
    need(out, "out");
    *out = new lkcf_config{lkcf::load_model_config(need_str(path, "path"))};
  });
}

lkcf_status lkcf_config_save(const lkcf_config* cfg, const char* path) {
  return guard([&] { lkcf::save_model_config(need(cfg, "cfg").cfg, need_str(path, "path")); });
}

lkcf_status lkcf_config_set_desk_scale(lkcf_config* cfg) {
  return guard([&] {
    need(cfg, "cfg");
    cfg->cfg = lkcf::desk_scale(cfg->cfg);
  });
}

lkcf_status lkcf_config_fingerprint(const lkcf_config* cfg, char* buf, size_t buf_len) {
  return guard([&] {
    const auto fp = lkcf::fingerprint(need(cfg, "cfg").cfg);
    if (!buf || buf_len < fp.size() + 1) throw lkcf::InvalidArgument("fingerprint buffer too small");
    std::memcpy(buf, fp.c_str(), fp.size() + 1);
  });
}

void lkcf_config_free(lkcf_config* cfg) { delete cfg; }

lkcf_status lkcf_dataset_load_dirs(const char* dir_a, const char* dir_b, lkcf_dataset** out) {
  return guard([&] {
    need(out, "out");
    *out = new lkcf_dataset{lkcf::load_pair_directory(need_str(dir_a, "dir_a"), need_str(dir_b, "dir_b"))};
  });
}

lkcf_status lkcf_dataset_load_manifest(const char* path, lkcf_dataset** out) {
  return guard([&] {
    need(out, "out");
    *out = new lkcf_dataset{lkcf::load_manifest(need_str(path, "path"))};
  });
}

lkcf_status lkcf_dataset_synthetic(int count, int64_t size, uint64_t seed, lkcf_dataset** out) {
  return guard([&] {
    need(out, "out");
    if (count < 1 || size < 16) throw lkcf::InvalidArgument("synthetic dataset needs count >= 1 and size >= 16");
    *out = new lkcf_dataset{lkcf::make_synthetic_pairs(count, size, seed)};
  });
}

lkcf_status lkcf_dataset_size(const lkcf_dataset* ds, size_t* out) {
  return guard([&] {
    if (!out) throw lkcf::InvalidArgument("out is NULL");
    *out = need(ds, "ds").pairs.size();
  });
}

void lkcf_dataset_free(lkcf_dataset* ds) { delete ds; }

lkcf_status lkcf_model_create(const lkcf_config* cfg, uint64_t seed, lkcf_model** out) {
  return guard([&] {
    need(out, "out");
    check_device();
    auto m = std::make_unique<lkcf_model>();
    m->net = lkcf::make_model(need(cfg, "cfg").cfg, seed);
    m->net->eval();
    *out = m.release();
  });
}

lkcf_status lkcf_model_load(const char* checkpoint_path, const lkcf_config* expected, lkcf_model** out) {
  return guard([&] {
    need(out, "out");
    check_device();
    const auto ckpt = lkcf::load_checkpoint(need_str(checkpoint_path, "checkpoint_path"),
                                            expected ? &expected->cfg : nullptr);
    auto m = std::make_unique<lkcf_model>();
    m->net = lkcf::instantiate(ckpt);
    m->net->eval();
    m->train_config = ckpt.train_config;
    m->step = ckpt.step;
    *out = m.release();
  });
}

lkcf_status lkcf_model_save(const lkcf_model* model, const char* checkpoint_path) {
  return guard([&] {
    const auto& m = need(model, "model");
    auto net = m.net;
    lkcf::save_checkpoint(lkcf::make_checkpoint(net, m.train_config, m.step),
                          need_str(checkpoint_path, "checkpoint_path"));
  });
}

lkcf_status lkcf_model_config(const lkcf_model* model, lkcf_config** out) {
  return guard([&] {
    need(out, "out");
    *out = new lkcf_config{need(model, "model").net->config()};
  });
}

lkcf_status lkcf_model_forward(lkcf_model* model, const float* pair, int64_t batch, int64_t height, int64_t width,
                               float* out) {
  return guard([&] {
    auto& m = need(model, "model");
    if (!pair || !out) throw lkcf::InvalidArgument("forward buffers must not be NULL");
    if (batch < 1 || height < 1 || width < 1) throw lkcf::InvalidArgument("forward dims must be positive");
    torch::NoGradGuard no_grad;
    const auto input = torch::from_blob(const_cast<float*>(pair), {batch, 2, height, width}, torch::kFloat32);
    const auto fused = m.net->forward(input).contiguous();
    std::memcpy(out, fused.data_ptr<float>(), static_cast<std::size_t>(fused.numel()) * sizeof(float));
  });
}

void lkcf_model_free(lkcf_model* model) { delete model; }

void lkcf_train_options_default(lkcf_train_options* opt) {
  if (!opt) return;
  const auto t = lkcf::default_train_config();
  *opt = lkcf_train_options{t.epochs, t.lr, t.batch, t.crop, t.seed, t.checkpoint_every, 0, t.max_steps, 1};
}

lkcf_status lkcf_train(const lkcf_config* cfg, const lkcf_train_options* opt, const lkcf_dataset* data,
                       const char* checkpoint_path, const char* log_path, lkcf_model** out) {
  return guard([&] {
    check_device();
    const auto tcfg = to_train_config(need(opt, "opt"));
    std::ofstream log;
    lkcf::TrainOutputs outputs;
    if (log_path && *log_path) {
      log.open(log_path);
      if (!log) throw lkcf::IoError(std::string("cannot open log '") + log_path + "'");
      outputs.log_stream = &log;
    }
    outputs.log_wall_time = opt->log_wall_time != 0;
    if (checkpoint_path) outputs.checkpoint_path = checkpoint_path;
    auto result = lkcf::train(need(cfg, "cfg").cfg, tcfg, need(data, "data").pairs, outputs);
    if (out) {
      auto m = std::make_unique<lkcf_model>();
      m->net = result.model;
      m->net->eval();
      m->train_config = result.checkpoint.train_config;
      m->step = result.checkpoint.step;
      *out = m.release();
    }
  });
}

lkcf_status lkcf_ablate(const char* rows, const lkcf_train_options* opt, const lkcf_dataset* train_set,
                        const lkcf_dataset* eval_set, const char* out_csv) {
  return guard([&] {
    check_device();
    const auto parsed = parse_rows(need_str(rows, "rows"));
    const auto results = lkcf::run_ablation_matrix(parsed, to_train_config(need(opt, "opt")),
                                                   need(train_set, "train_set").pairs,
                                                   need(eval_set, "eval_set").pairs);
    lkcf::write_text_file(need_str(out_csv, "out_csv"), lkcf::ablation_csv(results));
  });
}

lkcf_status lkcf_fuse_dataset(lkcf_model* model, const lkcf_dataset* data, const char* out_dir) {
  return guard([&] {
    auto& m = need(model, "model");
    fs::create_directories(need_str(out_dir, "out_dir"));
    for (const auto& pair : need(data, "data").pairs) {
      auto net = m.net;
      const auto fused = lkcf::fuse_pair(net, pair);
      lkcf::write_png(fused.color ? *fused.color : fused.fused_y, (fs::path(out_dir) / (pair.id + ".png")).string());
    }
  });
}

lkcf_status lkcf_eval_dirs(const char* fused_dir, const char* dir_a, const char* dir_b, const char* dataset_tag,
                           const char* config_fingerprint, const char* csv_path, const char* json_path,
                           int include_meta) {
  return guard([&] {
    const auto sources = lkcf::load_pair_directory(need_str(dir_a, "dir_a"), need_str(dir_b, "dir_b"));
    need_str(fused_dir, "fused_dir");
    if (!fs::is_directory(fused_dir)) throw lkcf::IoError(std::string("not a directory: '") + fused_dir + "'");
    lkcf::MetricReport report;
    report.dataset = dataset_tag ? dataset_tag : "";
    report.config_fingerprint = config_fingerprint ? config_fingerprint : "";
    std::vector<lkcf::Image> fused;
    for (const auto& pair : sources) {
      fs::path fused_path;
      for (const char* ext : {".png", ".bmp", ".jpg", ".jpeg"}) {
        const auto p = fs::path(fused_dir) / (pair.id + ext);
        if (fs::exists(p)) {
          fused_path = p;
          break;
        }
      }
      if (fused_path.empty()) throw lkcf::IoError("no fused image for '" + pair.id + "' in '" + fused_dir + "'");
      fused.push_back(lkcf::read_image(fused_path.string()));
    }
    // Images are scored independently; one worker per hardware thread.
    report.rows.resize(sources.size());
    std::vector<std::exception_ptr> errors(sources.size());
    std::atomic<std::size_t> next{0};
    auto work = [&] {
      for (std::size_t i; (i = next++) < sources.size();) {
        try {
          report.rows[i] = lkcf::evaluate_pair(fused[i], sources[i].modal_a, sources[i].modal_b, sources[i].id);
        } catch (...) {
          errors[i] = std::current_exception();
        }
      }
    };
    const auto workers = std::min<std::size_t>(sources.size(), std::max(1u, std::thread::hardware_concurrency()));
    std::vector<std::thread> pool;
    for (std::size_t w = 1; w < workers; ++w) pool.emplace_back(work);
    work();
    for (auto& t : pool) t.join();
    for (const auto& e : errors)
      if (e) std::rethrow_exception(e);
    report.validate();
    lkcf::ReportWriteOptions w;
    w.include_meta = include_meta != 0;
    if (csv_path && *csv_path) lkcf::write_text_file(csv_path, lkcf::to_csv(report, w));
    if (json_path && *json_path) lkcf::write_text_file(json_path, lkcf::to_json(report, w));
  });
}

lkcf_status lkcf_metrics_evaluate(const double* fused, const double* src_a, const double* src_b, int64_t height,
                                  int64_t width, double values[6], int present[6]) {
  return guard([&] {
    if (!fused || !src_a || !src_b || !values || !present) throw lkcf::InvalidArgument("NULL buffer");
    if (height < 1 || width < 1) throw lkcf::InvalidArgument("dims must be positive");
    auto wrap = [&](const double* p) {
      lkcf::Image img(height, width);
      std::memcpy(img.data.data(), p, img.size() * sizeof(double));
      return lkcf::scaled(std::move(img), 1.0 / 255.0);
    };
    const auto row = lkcf::evaluate_pair(wrap(fused), wrap(src_a), wrap(src_b));
    for (std::size_t i = 0; i < 6; ++i) {
      present[i] = row.values[i].has_value();
      values[i] = row.values[i].value_or(0.0);
    }
  });
}

lkcf_status lkcf_analyze_histogram(const char* image_path, int bins, const char* csv_path, const char* plot_path) {
  return guard([&] {
    auto img = lkcf::read_image(need_str(image_path, "image_path"));
    if (img.channels == 3) img = lkcf::to_luminance(img).y;
    const auto h = lkcf::histogram_stats(img, bins);
    lkcf::write_text_file(need_str(csv_path, "csv_path"), lkcf::histogram_csv(h));
    if (plot_path && *plot_path) lkcf::write_histogram_plot(h, plot_path);
  });
}

lkcf_status lkcf_analyze_consistency(lkcf_model* model, const lkcf_dataset* data, int64_t patch, const char* out_dir) {
  return guard([&] {
    auto& m = need(model, "model");
    fs::create_directories(need_str(out_dir, "out_dir"));
    torch::NoGradGuard no_grad;
    m.net->eval();
    for (const auto& pair : need(data, "data").pairs) {
      const auto padded = lkcf::pad_for_inference(pair);
      auto fm = m.net->init_features(padded.tensor);
      fm = lkcf::crop_back(fm, padded.crop_back);
      const auto map = lkcf::local_consistency(fm, patch);
      lkcf::write_text_file((fs::path(out_dir) / (pair.id + ".txt")).string(), lkcf::consistency_text(map));
    }
  });
}

lkcf_status lkcf_bench(lkcf_model* model, const int64_t* heights, const int64_t* widths, size_t count, int warmup,
                       int reps, const char* json_path) {
  return guard([&] {
    auto& m = need(model, "model");
    if (!heights || !widths || count == 0) throw lkcf::InvalidArgument("no resolutions given");
    // One intra-op thread so samples are comparable across runs and machines.
    const int threads = torch::get_num_threads();
    torch::set_num_threads(1);
    std::vector<lkcf::TimingReport> reports;
    for (size_t i = 0; i < count; ++i) {
      auto net = m.net;
      try {
        reports.push_back(lkcf::bench_inference(net, heights[i], widths[i], warmup, reps));
      } catch (...) {
        torch::set_num_threads(threads);
        throw;
      }
    }
    torch::set_num_threads(threads);
    lkcf::write_text_file(need_str(json_path, "json_path"), lkcf::timing_json(reports));
  });
}

}  // extern "C"
