#include "lkcfu/training.hpp"

#include <json.hpp>

#include <chrono>
#include <cmath>
#include <sstream>

#include "lkcfu/error.hpp"

namespace lkcf {
namespace {

using Clock = std::chrono::steady_clock;

std::string_view trim(std::string_view s) {
  const auto b = s.find_first_not_of(" \t\r\n");
  if (b == std::string_view::npos) return {};
  return s.substr(b, s.find_last_not_of(" \t\r\n") - b + 1);
}

nlohmann::ordered_json loss_json(const LossBreakdown& l) {
  return {{"l_ssim", l.l_ssim}, {"l_int", l.l_int}, {"l_grad", l.l_grad}, {"l_total", l.l_total}};
}

bool finite(const LossBreakdown& l) {
  return std::isfinite(l.l_ssim) && std::isfinite(l.l_int) && std::isfinite(l.l_grad) && std::isfinite(l.l_total);
}

}  // namespace

TrainConfig default_train_config() { return TrainConfig{}; }

void validate(const TrainConfig& cfg) {
  if (cfg.epochs < 1) throw InvalidArgument("epochs must be >= 1");
  if (!(cfg.lr > 0)) throw InvalidArgument("lr must be positive");
  if (cfg.batch < 1) throw InvalidArgument("batch must be >= 1");
  if (cfg.crop < 16 || cfg.crop % 16 != 0) throw InvalidArgument("crop must be a positive multiple of 16");
  if (cfg.optimizer != "Adam") throw InvalidArgument("optimizer must be Adam");
  if (cfg.checkpoint_every < 0 || cfg.max_steps < 0) throw InvalidArgument("negative schedule value");
  if (!(cfg.clip_norm > 0)) throw InvalidArgument("clip_norm must be positive");
}

void apply_desk_scale(TrainConfig& tcfg, ModelConfig& mcfg) {
  if (!tcfg.desk_scale) return;
  mcfg = desk_scale(mcfg);
  tcfg.epochs = std::min(tcfg.epochs, kDeskScaleEpochs);
}

std::string to_kv_text(const TrainConfig& c) {
  std::ostringstream os;
  os.precision(17);
  os << "epochs = " << c.epochs << "\n"
     << "lr = " << c.lr << "\n"
     << "batch = " << c.batch << "\n"
     << "crop = " << c.crop << "\n"
     << "seed = " << c.seed << "\n"
     << "optimizer = " << c.optimizer << "\n"
     << "checkpoint_every = " << c.checkpoint_every << "\n"
     << "desk_scale = " << (c.desk_scale ? "true" : "false") << "\n"
     << "max_steps = " << c.max_steps << "\n"
     << "clip_norm = " << c.clip_norm << "\n";
  return os.str();
}

TrainConfig train_config_from_kv(std::string_view text) {
  TrainConfig c;
  std::istringstream in{std::string(text)};
  std::string line;
  while (std::getline(in, line)) {
    std::string_view l = line;
    if (auto h = l.find('#'); h != std::string_view::npos) l = l.substr(0, h);
    l = trim(l);
    if (l.empty()) continue;
    const auto eq = l.find('=');
    if (eq == std::string_view::npos) throw InvalidArgument("train config: expected 'key = value'");
    const std::string key(trim(l.substr(0, eq)));
    const std::string val(trim(l.substr(eq + 1)));
    try {
      if (key == "epochs") c.epochs = std::stoll(val);
      else if (key == "lr") c.lr = std::stod(val);
      else if (key == "batch") c.batch = std::stoll(val);
      else if (key == "crop") c.crop = std::stoll(val);
      else if (key == "seed") c.seed = std::stoull(val);
      else if (key == "optimizer") c.optimizer = val;
      else if (key == "checkpoint_every") c.checkpoint_every = std::stoll(val);
      else if (key == "desk_scale") c.desk_scale = val == "true" || val == "1";
      else if (key == "max_steps") c.max_steps = std::stoll(val);
      else if (key == "clip_norm") c.clip_norm = std::stod(val);
      else throw InvalidArgument("train config: unknown key '" + key + "'");
    } catch (const std::logic_error&) {
      throw InvalidArgument("train config: bad value for '" + key + "'");
    }
  }
  validate(c);
  return c;
}

std::string run_fingerprint(const ModelConfig& mcfg, const TrainConfig& tcfg) {
  return stable_hash(to_kv_text(mcfg) + to_kv_text(tcfg));
}

int64_t steps_per_epoch(const std::vector<ImagePair>& data, int64_t crop, int64_t batch) {
  double patches = 0;
  for (const auto& p : data)
    patches += static_cast<double>(p.modal_a.height * p.modal_a.width) / static_cast<double>(crop * crop);
  return std::max<int64_t>(1, static_cast<int64_t>(std::ceil(patches / static_cast<double>(batch))));
}

TrainResult train(ModelConfig mcfg, TrainConfig tcfg, const std::vector<ImagePair>& data, const TrainOutputs& out) {
  apply_desk_scale(tcfg, mcfg);
  validate(mcfg);
  validate(tcfg);
  if (data.empty()) throw InvalidArgument("train: empty dataset");

  TrainResult result;
  result.model = make_model(mcfg, tcfg.seed);
  auto& model = result.model;
  model->train();
  torch::optim::Adam optimizer(model->parameters(), torch::optim::AdamOptions(tcfg.lr));
  BatchSampler sampler(data, tcfg.crop, tcfg.seed, /*worker=*/0);

  const int64_t per_epoch = steps_per_epoch(data, tcfg.crop, tcfg.batch);
  const int64_t total = tcfg.max_steps > 0 ? tcfg.max_steps : tcfg.epochs * per_epoch;

  auto emit = [&](const nlohmann::ordered_json& j) {
    if (out.log_stream) *out.log_stream << j.dump() << "\n" << std::flush;
  };
  emit({{"type", "header"},
        {"run_fingerprint", run_fingerprint(mcfg, tcfg)},
        {"config_fingerprint", fingerprint(mcfg)},
        {"steps_per_epoch", per_epoch},
        {"total_steps", total},
        {"epoch_definition", "ceil(sum_pairs(H*W/crop^2)/batch) sampled batches"}});

  const auto params = model->parameters();
  LossBreakdown epoch_sum;
  int64_t epoch_steps = 0;
  for (int64_t step = 1; step <= total; ++step) {
    const auto t0 = Clock::now();
    const int64_t epoch = (step - 1) / per_epoch + 1;
    const auto batch = sampler.next_batch(tcfg.batch);
    const auto src_a = batch.narrow(1, 0, 1);
    const auto src_b = batch.narrow(1, 1, 1);

    const auto terms = loss_total(model->forward(batch), src_a, src_b);
    StepRecord rec;
    rec.step = step;
    rec.epoch = epoch;
    rec.loss = terms.breakdown();

    auto diverge = [&](const std::string& what) {
      // Parameters still hold the last good state here.
      if (!out.checkpoint_path.empty())
        save_checkpoint(make_checkpoint(model, tcfg, step - 1, &optimizer), out.checkpoint_path);
      emit({{"type", "diverged"}, {"step", step}, {"batch_id", step - 1}, {"reason", what}});
      throw TrainingDiverged("training diverged at step " + std::to_string(step) + " (batch " +
                                 std::to_string(step - 1) + "): " + what,
                             step, step - 1);
    };
    if (!finite(rec.loss)) diverge("non-finite loss");

    optimizer.zero_grad();
    terms.total.backward();
    rec.grad_norm = torch::nn::utils::clip_grad_norm_(params, tcfg.clip_norm);
    if (!std::isfinite(rec.grad_norm)) diverge("non-finite gradient");
    rec.clipped = rec.grad_norm > tcfg.clip_norm;
    optimizer.step();
    rec.wall_ms = std::chrono::duration<double, std::milli>(Clock::now() - t0).count();

    nlohmann::ordered_json j = {{"type", "step"}, {"step", step}, {"epoch", epoch}};
    j.update(loss_json(rec.loss));
    j["grad_norm"] = rec.grad_norm;
    j["clipped"] = rec.clipped;
    if (out.log_wall_time) j["wall_ms"] = rec.wall_ms;
    emit(j);
    result.log.steps.push_back(rec);

    epoch_sum.l_ssim += rec.loss.l_ssim;
    epoch_sum.l_int += rec.loss.l_int;
    epoch_sum.l_grad += rec.loss.l_grad;
    ++epoch_steps;
    if (step % per_epoch == 0 || step == total) {
      EpochRecord e;
      e.epoch = epoch;
      e.steps = epoch_steps;
      const auto n = static_cast<double>(epoch_steps);
      e.mean.l_ssim = epoch_sum.l_ssim / n;
      e.mean.l_int = epoch_sum.l_int / n;
      e.mean.l_grad = epoch_sum.l_grad / n;
      e.mean.l_total = e.mean.l_ssim + e.mean.l_int + e.mean.l_grad;
      result.log.epochs.push_back(e);
      nlohmann::ordered_json ej = {{"type", "epoch"}, {"epoch", epoch}, {"steps", epoch_steps}};
      ej.update(loss_json(e.mean));
      emit(ej);
      epoch_sum = {};
      epoch_steps = 0;
      if (tcfg.checkpoint_every > 0 && epoch % tcfg.checkpoint_every == 0 && !out.checkpoint_path.empty())
        save_checkpoint(make_checkpoint(model, tcfg, step, &optimizer), out.checkpoint_path);
    }
  }

  result.checkpoint = make_checkpoint(model, tcfg, total, &optimizer);
  if (!out.checkpoint_path.empty()) save_checkpoint(result.checkpoint, out.checkpoint_path);
  return result;
}

MetricReport evaluate_model(LkcFuNet& model, const std::vector<ImagePair>& eval_set, const std::string& dataset) {
  MetricReport report;
  report.dataset = dataset;
  report.config_fingerprint = fingerprint(model->config());
  for (const auto& pair : eval_set) {
    const auto fused = fuse_pair(model, pair);
    report.rows.push_back(evaluate_pair(fused.fused_y, pair.modal_a, pair.luminance_b(), pair.id));
  }
  report.validate();
  return report;
}

std::vector<AblationResult> run_ablation_matrix(const std::vector<AblationRow>& rows, const TrainConfig& tcfg,
                                                const std::vector<ImagePair>& train_set,
                                                const std::vector<ImagePair>& eval_set, std::ostream* progress) {
  std::vector<AblationResult> results;
  for (const auto row : rows) {
    AblationResult r;
    r.row = row;
    ModelConfig mcfg = ablation_config(row);
    TrainConfig t = tcfg;
    apply_desk_scale(t, mcfg);
    r.config_fingerprint = fingerprint(mcfg);
    try {
      auto trained = train(mcfg, t, train_set);
      r.final_loss = trained.log.steps.empty() ? 0.0 : trained.log.steps.back().loss.l_total;
      r.report = evaluate_model(trained.model, eval_set, "ablation:" + to_string(row));
    } catch (const std::exception& e) {
      r.error = e.what();
    }
    if (progress)
      *progress << "ablation row " << to_string(row) << " (" << describe(row) << "): "
                << (r.report ? "ok" : "failed: " + r.error) << "\n";
    results.push_back(std::move(r));
  }
  return results;
}

std::string ablation_csv(const std::vector<AblationResult>& results) {
  std::string out = "row,config";
  for (const char* n : kMetricNames) out += std::string(",") + n;
  out += ",error\n";
  for (const auto& r : results) {
    out += to_string(r.row) + "," + describe(r.row);
    std::array<std::optional<double>, 6> agg;
    if (r.report) agg = r.report->aggregate();
    for (const auto& v : agg) {
      out += ",";
      if (v) {
        char buf[64];
        std::snprintf(buf, sizeof buf, "%.6f", *v);
        out += buf;
      } else {
        out += "NA";
      }
    }
    std::string err = r.error;
    for (auto& ch : err)
      if (ch == ',' || ch == '\n') ch = ' ';
    out += "," + err + "\n";
  }
  return out;
}

}  // namespace lkcf
