// Command-line front end. Talks to the library only through lkcfu.h.
#include <CLI11.hpp>

#include <cstdio>
#include <cstdlib>
#include <memory>
#include <optional>
#include <string>
#include <vector>

#include "lkcfu/lkcfu.h"

namespace {

// Exit codes. Usage errors come from argument parsing; the rest map library statuses.
enum Exit : int {
  kOk = 0,
  kInternal = 1,
  kUsage = 2,
  kIo = 3,
  kFingerprint = 4,
  kInvalidInput = 5,
  kDiverged = 6,
  kCorrupt = 7,
  kDegenerate = 8,
};

int exit_code(lkcf_status s) {
  switch (s) {
    case LKCF_OK: return kOk;
    case LKCF_ERR_IO: return kIo;
    case LKCF_ERR_FINGERPRINT: return kFingerprint;
    case LKCF_ERR_INVALID_ARGUMENT:
    case LKCF_ERR_REJECTED_INPUT:
    case LKCF_ERR_CONTRACT: return kInvalidInput;
    case LKCF_ERR_DIVERGED: return kDiverged;
    case LKCF_ERR_CORRUPT: return kCorrupt;
    case LKCF_ERR_DEGENERATE: return kDegenerate;
    case LKCF_ERR_INTERNAL: break;
  }
  return kInternal;
}

std::string quoted(const std::string& msg) {
  std::string out = "\"";
  for (char c : msg) {
    if (c == '"' || c == '\\') out += '\\';
    if (c == '\n') {
      out += "\\n";
      continue;
    }
    out += c;
  }
  return out + "\"";
}

void report(const std::string& code, int exit, const std::string& message) {
  std::fprintf(stderr, "error: code=%s exit=%d message=%s\n", code.c_str(), exit, quoted(message).c_str());
}

struct Failure {
  lkcf_status status;
  std::string message;
};

void check(lkcf_status s) {
  if (s != LKCF_OK) throw Failure{s, lkcf_last_error()};
}

template <typename T, void (*Free)(T*)>
struct Handle {
  T* p = nullptr;
  Handle() = default;
  Handle(const Handle&) = delete;
  Handle& operator=(const Handle&) = delete;
  ~Handle() {
    if (p) Free(p);
  }
  T** out() { return &p; }
  T* get() const { return p; }
};
using Config = Handle<lkcf_config, lkcf_config_free>;
using Model = Handle<lkcf_model, lkcf_model_free>;
using Dataset = Handle<lkcf_dataset, lkcf_dataset_free>;

struct DataArgs {
  std::string dir_a, dir_b, manifest;
  int synthetic = 0;
  int64_t synthetic_size = 128;
  uint64_t synthetic_seed = 1;

  void add(CLI::App* app, const std::string& prefix = "", const std::string& what = "input") {
    app->add_option("--" + prefix + "src-a", dir_a, "Folder of modality-A " + what + " images");
    app->add_option("--" + prefix + "src-b", dir_b, "Folder of modality-B " + what + " images (same filenames)");
    app->add_option("--" + prefix + "manifest", manifest, "Text file listing 'a_path b_path' per line");
    app->add_option("--" + prefix + "synthetic", synthetic, "Use N generated structured pairs instead of files");
    app->add_option("--" + prefix + "synthetic-size", synthetic_size, "Side length of generated pairs");
    app->add_option("--" + prefix + "synthetic-seed", synthetic_seed, "Seed of generated pairs");
  }

  void load(Dataset& ds, const std::string& flag_prefix = "") const {
    if (!manifest.empty()) {
      check(lkcf_dataset_load_manifest(manifest.c_str(), ds.out()));
    } else if (!dir_a.empty() && !dir_b.empty()) {
      check(lkcf_dataset_load_dirs(dir_a.c_str(), dir_b.c_str(), ds.out()));
    } else if (synthetic > 0) {
      check(lkcf_dataset_synthetic(synthetic, synthetic_size, synthetic_seed, ds.out()));
    } else {
      throw CLI::ValidationError("data", "give --" + flag_prefix + "src-a and --" + flag_prefix + "src-b, --" +
                                             flag_prefix + "manifest or --" + flag_prefix + "synthetic");
    }
  }
};

struct ConfigArgs {
  std::string config_path;
  std::string row;
  bool desk = false;

  void add(CLI::App* app) {
    app->add_option("--config", config_path, "Model configuration file (key = value lines)");
    app->add_option("--row", row, "Ablation configuration: I, II, III, IV, V, VI or Ours");
    app->add_flag("--desk-scale", desk, "Small channel widths 8,16,32,64 (and at most 200 epochs)");
  }

  void load(Config& cfg) const {
    if (!config_path.empty())
      check(lkcf_config_load(config_path.c_str(), cfg.out()));
    else if (!row.empty())
      check(lkcf_config_ablation(row.c_str(), cfg.out()));
    else
      check(lkcf_config_default(cfg.out()));
    if (desk) check(lkcf_config_set_desk_scale(cfg.get()));
  }
  bool given() const { return !config_path.empty() || !row.empty() || desk; }
};

struct TrainArgs {
  lkcf_train_options opt{};
  TrainArgs() { lkcf_train_options_default(&opt); }

  void add(CLI::App* app) {
    app->add_option("--epochs", opt.epochs, "Training epochs");
    app->add_option("--lr", opt.lr, "Adam learning rate");
    app->add_option("--batch", opt.batch, "Patches per step");
    app->add_option("--crop", opt.crop, "Square patch side");
    app->add_option("--seed", opt.seed, "Seed for weights and sampling");
    app->add_option("--max-steps", opt.max_steps, "Stop after this many steps (0 = run all epochs)");
  }
};

/// Parses "256x256,640x480" (width x height).
void parse_resolutions(const std::string& spec, std::vector<int64_t>& heights, std::vector<int64_t>& widths) {
  std::size_t pos = 0;
  while (pos <= spec.size()) {
    const auto comma = std::min(spec.find(',', pos), spec.size());
    const auto item = spec.substr(pos, comma - pos);
    const auto x = item.find('x');
    if (x == std::string::npos) throw CLI::ValidationError("--resolutions", "expected WxH, got '" + item + "'");
    try {
      widths.push_back(std::stoll(item.substr(0, x)));
      heights.push_back(std::stoll(item.substr(x + 1)));
    } catch (const std::exception&) {
      throw CLI::ValidationError("--resolutions", "expected WxH, got '" + item + "'");
    }
    pos = comma + 1;
  }
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Multimodal image fusion with a large-kernel convolution UNet"};
  app.require_subcommand(1);
  app.set_version_flag("--version", lkcf_version());
  std::function<void()> run;

  // train
  DataArgs train_data;
  ConfigArgs train_cfg;
  TrainArgs train_opts;
  std::string train_out, train_log;
  bool train_no_meta = false;
  int64_t checkpoint_every = 0;
  {
    auto* cmd = app.add_subcommand("train", "Train a model from scratch");
    train_data.add(cmd);
    train_cfg.add(cmd);
    train_opts.add(cmd);
    cmd->add_option("--checkpoint-every", checkpoint_every, "Also checkpoint every N epochs");
    cmd->add_option("--out", train_out, "Checkpoint path")->required();
    cmd->add_option("--log", train_log, "Line-delimited JSON training log");
    cmd->add_flag("--no-meta", train_no_meta, "Omit wall-clock times from the log");
    cmd->callback([&] {
      run = [&] {
        Config cfg;
        Dataset ds;
        train_cfg.load(cfg);
        train_data.load(ds);
        auto opt = train_opts.opt;
        opt.desk_scale = train_cfg.desk;
        opt.checkpoint_every = checkpoint_every;
        opt.log_wall_time = !train_no_meta;
        check(lkcf_train(cfg.get(), &opt, ds.get(), train_out.c_str(), train_log.empty() ? nullptr : train_log.c_str(),
                         nullptr));
      };
    });
  }

  // fuse
  DataArgs fuse_data;
  ConfigArgs fuse_expect;
  std::string fuse_ckpt, fuse_out;
  {
    auto* cmd = app.add_subcommand("fuse", "Fuse every pair with a trained checkpoint");
    fuse_data.add(cmd);
    fuse_expect.add(cmd);
    cmd->add_option("--checkpoint", fuse_ckpt, "Trained checkpoint")->required();
    cmd->add_option("--out", fuse_out, "Output folder for <id>.png")->required();
    cmd->callback([&] {
      run = [&] {
        Config expected;
        if (fuse_expect.given()) fuse_expect.load(expected);
        Model model;
        check(lkcf_model_load(fuse_ckpt.c_str(), expected.get(), model.out()));
        Dataset ds;
        fuse_data.load(ds);
        check(lkcf_fuse_dataset(model.get(), ds.get(), fuse_out.c_str()));
      };
    });
  }

  // eval
  std::string eval_fused, eval_a, eval_b, eval_csv, eval_json, eval_dataset, eval_fp;
  bool eval_no_meta = false;
  {
    auto* cmd = app.add_subcommand("eval", "Score fused images with SD, AG, SF, SCD, VIFF and SSIM");
    cmd->add_option("--fused", eval_fused, "Folder of fused images")->required();
    cmd->add_option("--src-a", eval_a, "Folder of modality-A sources")->required();
    cmd->add_option("--src-b", eval_b, "Folder of modality-B sources")->required();
    cmd->add_option("--out", eval_csv, "CSV report");
    cmd->add_option("--json", eval_json, "JSON report");
    cmd->add_option("--dataset", eval_dataset, "Dataset tag recorded in the report");
    cmd->add_option("--fingerprint", eval_fp, "Config fingerprint recorded in the report");
    cmd->add_flag("--no-meta", eval_no_meta, "Omit the generation timestamp");
    cmd->callback([&] {
      if (eval_csv.empty() && eval_json.empty()) throw CLI::ValidationError("eval", "give --out and/or --json");
      run = [&] {
        check(lkcf_eval_dirs(eval_fused.c_str(), eval_a.c_str(), eval_b.c_str(), eval_dataset.c_str(),
                             eval_fp.c_str(), eval_csv.empty() ? nullptr : eval_csv.c_str(),
                             eval_json.empty() ? nullptr : eval_json.c_str(), eval_no_meta ? 0 : 1));
      };
    });
  }

  // ablate
  DataArgs abl_train, abl_eval;
  TrainArgs abl_opts;
  std::string abl_rows = "I,II,III,IV,V,VI,Ours", abl_out;
  bool abl_desk = false;
  {
    auto* cmd = app.add_subcommand("ablate", "Train and evaluate several configurations on the same data");
    abl_train.add(cmd, "", "training");
    abl_eval.add(cmd, "eval-", "evaluation");
    abl_opts.add(cmd);
    cmd->add_option("--rows", abl_rows, "Comma-separated configurations");
    cmd->add_flag("--desk-scale", abl_desk, "Small channel widths 8,16,32,64 (and at most 200 epochs)");
    cmd->add_option("--out", abl_out, "Comparative CSV")->required();
    cmd->callback([&] {
      run = [&] {
        Dataset train_ds, eval_ds;
        abl_train.load(train_ds);
        abl_eval.load(eval_ds, "eval-");
        auto opt = abl_opts.opt;
        opt.desk_scale = abl_desk;
        opt.log_wall_time = 0;
        check(lkcf_ablate(abl_rows.c_str(), &opt, train_ds.get(), eval_ds.get(), abl_out.c_str()));
      };
    });
  }

  // analyze-hist
  std::string hist_image, hist_out, hist_plot;
  int hist_bins = 256;
  {
    auto* cmd = app.add_subcommand("analyze-hist", "Intensity histogram and standard deviation of an image");
    cmd->add_option("--image", hist_image, "Image file")->required();
    cmd->add_option("--bins", hist_bins, "Number of bins over 0-255");
    cmd->add_option("--out", hist_out, "Histogram CSV")->required();
    cmd->add_option("--plot", hist_plot, "Optional bar-chart PNG");
    cmd->callback([&] {
      run = [&] {
        check(lkcf_analyze_histogram(hist_image.c_str(), hist_bins, hist_out.c_str(),
                                     hist_plot.empty() ? nullptr : hist_plot.c_str()));
      };
    });
  }

  // analyze-consistency
  DataArgs cons_data;
  ConfigArgs cons_cfg;
  std::string cons_ckpt, cons_out;
  int64_t cons_patch = 16;
  uint64_t cons_seed = 0;
  {
    auto* cmd = app.add_subcommand("analyze-consistency", "Patch-wise feature consistency after the init block");
    cons_data.add(cmd);
    cons_cfg.add(cmd);
    cmd->add_option("--checkpoint", cons_ckpt, "Trained checkpoint (otherwise freshly initialized weights)");
    cmd->add_option("--seed", cons_seed, "Weight seed when no checkpoint is given");
    cmd->add_option("--patch", cons_patch, "Patch side in pixels");
    cmd->add_option("--out", cons_out, "Output folder for <id>.txt grids")->required();
    cmd->callback([&] {
      run = [&] {
        Model model;
        Config cfg;
        if (!cons_ckpt.empty()) {
          if (cons_cfg.given()) cons_cfg.load(cfg);
          check(lkcf_model_load(cons_ckpt.c_str(), cfg.get(), model.out()));
        } else {
          cons_cfg.load(cfg);
          check(lkcf_model_create(cfg.get(), cons_seed, model.out()));
        }
        Dataset ds;
        cons_data.load(ds);
        check(lkcf_analyze_consistency(model.get(), ds.get(), cons_patch, cons_out.c_str()));
      };
    });
  }

  // bench
  ConfigArgs bench_cfg;
  std::string bench_ckpt, bench_out, bench_res = "256x256,640x480";
  int bench_warmup = 3, bench_reps = 10;
  {
    auto* cmd = app.add_subcommand("bench", "Time forward passes at fixed resolutions");
    bench_cfg.add(cmd);
    cmd->add_option("--checkpoint", bench_ckpt, "Trained checkpoint (otherwise freshly initialized weights)");
    cmd->add_option("--resolutions", bench_res, "Comma-separated WxH list");
    cmd->add_option("--warmup", bench_warmup, "Untimed calls per resolution");
    cmd->add_option("--reps", bench_reps, "Timed calls per resolution");
    cmd->add_option("--out", bench_out, "Timing JSON")->required();
    cmd->callback([&] {
      run = [&] {
        std::vector<int64_t> heights, widths;
        parse_resolutions(bench_res, heights, widths);
        Model model;
        Config cfg;
        if (!bench_ckpt.empty()) {
          check(lkcf_model_load(bench_ckpt.c_str(), nullptr, model.out()));
        } else {
          bench_cfg.load(cfg);
          check(lkcf_model_create(cfg.get(), 0, model.out()));
        }
        check(lkcf_bench(model.get(), heights.data(), widths.data(), heights.size(), bench_warmup, bench_reps,
                         bench_out.c_str()));
      };
    });
  }

  try {
    app.parse(argc, argv);
    run();
  } catch (const CLI::Success& e) {
    return app.exit(e);
  } catch (const CLI::Error& e) {
    report("usage", kUsage, e.what());
    return kUsage;
  } catch (const Failure& f) {
    const int code = exit_code(f.status);
    report(lkcf_status_name(f.status), code, f.message);
    return code;
  } catch (const std::exception& e) {
    report("internal", kInternal, e.what());
    return kInternal;
  }
  return kOk;
}
