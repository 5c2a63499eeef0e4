#include "tgk/commands.hpp"

#include <cstdio>
#include <fstream>
#include <iostream>
#include <sstream>

#include "tgk/checkpoint.hpp"
#include "tgk/dataset_io.hpp"
#include "tgk/errors.hpp"
#include "tgk/svg.hpp"

namespace tgk {
namespace fs = std::filesystem;
using nlohmann::json;

namespace {

std::string fmt(double v) {
  char buf[40];
  std::snprintf(buf, sizeof buf, "%.10g", v);
  return buf;
}

void ensure_dir(const fs::path& dir) {
  std::error_code ec;
  fs::create_directories(dir, ec);
  if (ec || !fs::is_directory(dir)) {
    throw IoError("cannot create output directory " + dir.string() + ": " + ec.message());
  }
}

void write_text(const fs::path& path, const std::string& text) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw IoError("cannot open " + path.string() + " for writing");
  out << text;
  out.flush();
  if (!out) throw IoError("write failed: " + path.string());
}

void write_json(const fs::path& path, const json& j) { write_text(path, j.dump(2) + "\n"); }

json read_json(const fs::path& path, const std::string& what) {
  std::ifstream in(path);
  if (!in) throw MissingInputError(what + " not found: " + path.string());
  try {
    return json::parse(in);
  } catch (const json::parse_error& e) {
    throw FormatError(what + " " + path.string() + " is not valid JSON: " + e.what());
  }
}

// Creates the output directory and drops the config echo and seed record.
void begin(const RunConfig& cfg, const CommandEnv& env, const std::string& command) {
  ensure_dir(env.out_dir);
  write_json(env.out_dir / "config.json", config_to_json(cfg));
  write_json(env.out_dir / "seed.json", {{"command", command}, {"seed", cfg.seed}});
  env.info(command + ": writing to " + env.out_dir.string());
}

std::string class_name(std::size_t c) { return std::string(gesture_name(gesture_from_code(c))); }

json stats_json(const NormalizationStats& s) {
  return {{"mean", s.mean}, {"std", s.stddev}};
}

NormalizationStats stats_from_json(const json& j) {
  NormalizationStats s;
  s.mean = j.at("mean").get<std::array<double, 3>>();
  s.stddev = j.at("std").get<std::array<double, 3>>();
  return s;
}

json confusion_json(const ConfusionMatrix& cm) {
  json counts = json::array();
  for (const auto& row : cm.counts) counts.push_back(row);
  json rates = json::array();
  for (const auto& row : cm.rates()) rates.push_back(row);
  return {{"counts", counts}, {"rates", rates}};
}

json per_class_json(const std::array<double, kGestureClassCount>& v) {
  json j = json::object();
  for (std::size_t c = 0; c < kGestureClassCount; ++c) j[class_name(c)] = v[c];
  return j;
}

json class_names_json() {
  json j = json::array();
  for (std::size_t c = 0; c < kGestureClassCount; ++c) j.push_back(class_name(c));
  return j;
}

json evaluation_json(const Evaluation& ev) {
  return {{"accuracy", ev.accuracy},
          {"macro_accuracy", ev.macro_accuracy},
          {"test_size", ev.confusion.total()},
          {"per_class_accuracy", per_class_json(ev.confusion.per_class_accuracy())},
          {"confusion", confusion_json(ev.confusion)}};
}

json split_json(const DatasetSplit& s) {
  return {{"train", s.train.size()}, {"val", s.val.size()}, {"test", s.test.size()}};
}

EpochCallback epoch_logger(const CommandEnv& env, std::string prefix) {
  return [&env, prefix](const EpochRecord& r) {
    env.debug(prefix + "epoch " + std::to_string(r.epoch) + " loss " + fmt(r.train_loss) +
              " val_acc " + fmt(r.val_accuracy));
  };
}

}  // namespace

LogLevel parse_log_level(const char* value) {
  if (!value) return LogLevel::Info;
  const std::string v(value);
  if (v == "quiet" || v == "0" || v == "off") return LogLevel::Quiet;
  if (v == "debug" || v == "2") return LogLevel::Debug;
  return LogLevel::Info;
}

void CommandEnv::info(const std::string& msg) const {
  if (log_level < LogLevel::Info) return;
  if (sink) sink(msg);
  else std::cerr << msg << '\n';
}

void CommandEnv::debug(const std::string& msg) const {
  if (log_level < LogLevel::Debug) return;
  if (sink) sink(msg);
  else std::cerr << msg << '\n';
}

std::string confusion_csv(const ConfusionMatrix& cm) {
  std::ostringstream os;
  os << "true\\predicted";
  for (std::size_t c = 0; c < kGestureClassCount; ++c) os << ',' << class_name(c);
  os << '\n';
  for (std::size_t r = 0; r < kGestureClassCount; ++r) {
    os << class_name(r);
    for (std::size_t c = 0; c < kGestureClassCount; ++c) os << ',' << cm.counts[r][c];
    os << '\n';
  }
  return os.str();
}

std::string history_csv(const std::vector<EpochRecord>& history) {
  std::ostringstream os;
  os << "epoch,train_loss,val_acc\n";
  for (const EpochRecord& r : history) {
    os << r.epoch << ',' << fmt(r.train_loss) << ',' << fmt(r.val_accuracy) << '\n';
  }
  return os.str();
}

fs::path manifest_path(const fs::path& checkpoint) {
  fs::path p = checkpoint;
  p.replace_extension(".json");
  return p;
}

std::vector<GestureRecording> load_or_synthesize(const RunConfig& cfg, const CommandEnv& env) {
  if (!cfg.paths.dataset.empty()) {
    env.info("reading dataset " + cfg.paths.dataset);
    return read_dataset(fs::path(cfg.paths.dataset));
  }
  const SynthConfig sc = cfg.synth_config();
  env.info("synthesizing " + std::to_string(sc.users * sc.blocks * sc.reps_per_block * kGestureClassCount) +
           " recordings");
  return synth_dataset(sc);
}

void cmd_sweep(const RunConfig& cfg, const CommandEnv& env) {
  begin(cfg, env, "sweep");
  const auto curves = flux_sweep(cfg.sweep.heights_mm, cfg.sweep.max_shear_mm, cfg.sweep.steps,
                                 cfg.geometry, cfg.dipole);
  std::ostringstream csv;
  csv << "height_mm,shear_mm,bx_mT,bz_mT\n";
  std::vector<svg::Series> bx, bz;
  for (const SweepCurve& c : curves) {
    svg::Series sx{fmt(c.height_mm) + " mm", {}, {}};
    svg::Series sz = sx;
    for (const SweepPoint& p : c.points) {
      csv << fmt(c.height_mm) << ',' << fmt(p.shear_mm) << ',' << fmt(p.bx_mT) << ',' << fmt(p.bz_mT)
          << '\n';
      sx.x.push_back(p.shear_mm);
      sx.y.push_back(p.bx_mT);
      sz.x.push_back(p.shear_mm);
      sz.y.push_back(p.bz_mT);
    }
    bx.push_back(std::move(sx));
    bz.push_back(std::move(sz));
  }
  write_text(env.out_dir / "sweep.csv", csv.str());
  write_text(env.out_dir / "sweep_bx.svg",
             svg::line_plot(bx, "Bx versus shear displacement", "shear displacement (mm)", "Bx (mT)"));
  write_text(env.out_dir / "sweep_bz.svg",
             svg::line_plot(bz, "Bz versus shear displacement", "shear displacement (mm)", "Bz (mT)"));
}

void cmd_calibrate(const RunConfig& cfg, const CommandEnv& env) {
  begin(cfg, env, "calibrate");
  const CalibrationReport rep =
      run_calibration(cfg.geometry, cfg.dipole, cfg.stiffness, cfg.calibration_campaign());

  json models = json::array();
  json failures = json::array();
  std::ostringstream csv;
  csv << "taxel,rms_fx_N,rms_fy_N,rms_fz_N\n";
  for (const TaxelCalibration& t : rep.taxels) {
    if (t.model) {
      json rows = json::array();
      for (const auto& row : t.model->coeffs) rows.push_back(row);
      models.push_back({{"taxel_index", t.taxel_index}, {"coeffs", rows}});
      csv << t.taxel_index << ',' << fmt(t.rms.fx) << ',' << fmt(t.rms.fy) << ',' << fmt(t.rms.fz)
          << '\n';
    } else {
      failures.push_back({{"taxel_index", t.taxel_index}, {"error", t.error}});
      csv << t.taxel_index << ",,,\n";
      env.info("taxel " + std::to_string(t.taxel_index) + " failed: " + t.error);
    }
  }
  csv << "Mean," << fmt(rep.mean.fx) << ',' << fmt(rep.mean.fy) << ',' << fmt(rep.mean.fz) << '\n';
  csv << "Standard Deviation," << fmt(rep.stddev.fx) << ',' << fmt(rep.stddev.fy) << ','
      << fmt(rep.stddev.fz) << '\n';

  auto axis_json = [](const AxisRms& a) { return json{{"fx", a.fx}, {"fy", a.fy}, {"fz", a.fz}}; };
  json doc = {{"features", {"bx", "by", "bz", "bx^2", "by^2", "bz^2", "bx*by", "bx*bz", "by*bz"}},
              {"outputs", {"fx", "fy", "fz"}},
              {"units", {{"flux", "mT"}, {"force", "N"}}},
              {"models", models},
              {"failures", failures},
              {"rms_mean", axis_json(rep.mean)},
              {"rms_std", axis_json(rep.stddev)},
              {"hardware_rms_mean", axis_json(kReferenceRmsMean)},
              {"hardware_rms_std", axis_json(kReferenceRmsStd)}};
  write_json(env.out_dir / "calibration.json", doc);
  write_text(env.out_dir / "calibration_rms.csv", csv.str());
  env.info("calibrate: mean RMS fx " + fmt(rep.mean.fx) + " fy " + fmt(rep.mean.fy) + " fz " +
           fmt(rep.mean.fz) + " N, " + std::to_string(rep.failed) + " failed");
}

void cmd_synth(const RunConfig& cfg, const CommandEnv& env) {
  begin(cfg, env, "synth");
  const SynthConfig sc = cfg.synth_config();
  const auto recs = synth_dataset(sc);
  write_dataset(env.out_dir / "dataset.bin", recs);
  std::array<std::size_t, kGestureClassCount> hist{};
  for (const auto& r : recs) ++hist[code(r.label)];
  json h = json::object();
  for (std::size_t c = 0; c < kGestureClassCount; ++c) h[class_name(c)] = hist[c];
  json sidecar = {{"format", "TGK1"},
                  {"recordings", recs.size()},
                  {"frames", kFramesPerRecording},
                  {"taxels", kTaxelCount},
                  {"users", sc.users},
                  {"blocks", sc.blocks},
                  {"reps_per_block", sc.reps_per_block},
                  {"master_seed", sc.master_seed},
                  {"noise_N", sc.noise_level},
                  {"class_histogram", h}};
  write_json(env.out_dir / "dataset.json", sidecar);
  env.info("synth: " + std::to_string(recs.size()) + " recordings");
}

void cmd_train(const RunConfig& cfg, const CommandEnv& env) {
  begin(cfg, env, "train");
  const auto recs = load_or_synthesize(cfg, env);
  const AblationMode mode = cfg.train.mode;
  PreparedData data = prepare_data(recs, mode, cfg.seed, cfg.train.split);
  const CnnConfig arch = gesture_cnn_config(input_channels(mode));
  TrainResult tr = train(data.train, data.val, arch, cfg.train_config(), epoch_logger(env, ""));
  const fs::path ckpt = env.out_dir / "model.tgkm";
  write_checkpoint(ckpt, tr.model);
  const ParameterLayout& L = tr.model.layout();
  json shapes = {
      {"conv_kernel", {arch.conv_channels, arch.in_channels, 3, 3}},
      {"conv_bias", {arch.conv_channels}},
      {"fc1_weights", {arch.hidden, arch.pooled_features()}},
      {"fc1_bias", {arch.hidden}},
      {"fc2_weights", {arch.classes, arch.hidden}},
      {"fc2_bias", {arch.classes}},
  };
  json manifest = {{"checkpoint", ckpt.filename().string()},
                   {"format", "TGKM"},
                   {"in_channels", arch.in_channels},
                   {"parameter_count", L.total},
                   {"shapes", shapes},
                   {"input_shape", {arch.in_channels, arch.height, arch.width}},
                   {"mode", std::string(ablation_mode_name(mode))},
                   {"normalization", stats_json(data.stats)},
                   {"split_seed", cfg.seed},
                   {"split", split_json(data.split)},
                   {"best_epoch", tr.best_epoch},
                   {"best_val_accuracy", tr.best_val_accuracy},
                   {"train", config_to_json(cfg)["train"]},
                   {"seed", cfg.seed}};
  write_json(manifest_path(ckpt), manifest);
  write_text(env.out_dir / "history.csv", history_csv(tr.history));
  env.info("train: best epoch " + std::to_string(tr.best_epoch) + " val_acc " +
           fmt(tr.best_val_accuracy));
}

void cmd_eval(const RunConfig& cfg, const CommandEnv& env) {
  if (cfg.paths.checkpoint.empty()) {
    throw MissingInputError("eval needs a checkpoint: set paths.checkpoint (written by 'train' as model.tgkm)");
  }
  const fs::path ckpt(cfg.paths.checkpoint);
  if (!fs::exists(ckpt)) throw MissingInputError("checkpoint not found: " + ckpt.string());
  const json manifest = read_json(manifest_path(ckpt), "checkpoint manifest");
  begin(cfg, env, "eval");
  CnnModel model = read_checkpoint(ckpt);
  const AblationMode mode = ablation_mode_from_name(manifest.at("mode").get<std::string>());
  if (input_channels(mode) != model.config().in_channels) {
    throw FormatError("manifest mode does not match checkpoint channels: " + manifest_path(ckpt).string());
  }
  const NormalizationStats stats = stats_from_json(manifest.at("normalization"));
  const std::uint64_t split_seed = manifest.at("split_seed").get<std::uint64_t>();

  const auto recs = load_or_synthesize(cfg, env);
  const DatasetSplit split = split_dataset(recs, split_seed, cfg.train.split);
  LabeledTensor test = assemble_tensor(recs, split.test, mode);
  apply_normalization(stats, test.inputs, mode);
  const Evaluation ev = evaluate(model, test);

  write_text(env.out_dir / "confusion.csv", confusion_csv(ev.confusion));
  write_text(env.out_dir / "confusion.svg",
             svg::confusion_heatmap(ev.confusion, std::string(ablation_mode_name(mode)) + " test confusion"));
  json report = evaluation_json(ev);
  report["mode"] = std::string(ablation_mode_name(mode));
  report["checkpoint"] = ckpt.filename().string();
  report["classes"] = class_names_json();
  write_json(env.out_dir / "report.json", report);
  env.info("eval: accuracy " + fmt(ev.accuracy) + " macro " + fmt(ev.macro_accuracy));
}

void cmd_ablate(const RunConfig& cfg, const CommandEnv& env) {
  begin(cfg, env, "ablate");
  const auto recs = load_or_synthesize(cfg, env);
  const AblationReport rep = ablate(recs, cfg.train_config(), cfg.train.split, epoch_logger(env, ""));

  json winners = json::array();
  for (std::size_t c = 0; c < kGestureClassCount; ++c) {
    const double d = rep.per_class_delta[c];
    winners.push_back({{"class", class_name(c)},
                       {"delta", d},
                       {"winner", d > 0 ? "normal_and_shear" : d < 0 ? "normal_only" : "tie"}});
  }
  auto arm_json = [](const ArmResult& a) {
    json j = evaluation_json(a.test);
    j["mode"] = std::string(ablation_mode_name(a.mode));
    j["best_epoch"] = a.training.best_epoch;
    j["best_val_accuracy"] = a.training.best_val_accuracy;
    j["normalization"] = stats_json(a.stats);
    return j;
  };
  json doc = {{"classes", class_names_json()},
              {"split", split_json(rep.split)},
              {"normal_only", arm_json(rep.normal_only)},
              {"normal_and_shear", arm_json(rep.normal_and_shear)},
              {"accuracy_gain", rep.normal_and_shear.test.accuracy - rep.normal_only.test.accuracy},
              {"per_class_delta", per_class_json(rep.per_class_delta)},
              {"per_class_winner", winners},
              {"classes_improved", rep.classes_improved},
              {"classes_worse", rep.classes_worse},
              {"hardware_reference",
               {{"normal_only_accuracy", kReferenceAccuracyNormalOnly},
                {"normal_and_shear_accuracy", kReferenceAccuracyNormalAndShear},
                {"classes_improved", kReferenceClassesImproved}}}};
  write_json(env.out_dir / "ablation.json", doc);
  for (const ArmResult* arm : {&rep.normal_only, &rep.normal_and_shear}) {
    const std::string name(ablation_mode_name(arm->mode));
    write_text(env.out_dir / ("confusion_" + name + ".csv"), confusion_csv(arm->test.confusion));
    write_text(env.out_dir / ("confusion_" + name + ".svg"),
               svg::confusion_heatmap(arm->test.confusion, name + " test confusion"));
    write_text(env.out_dir / ("history_" + name + ".csv"), history_csv(arm->training.history));
  }
  env.info("ablate: normal_only " + fmt(rep.normal_only.test.accuracy) + ", normal_and_shear " +
           fmt(rep.normal_and_shear.test.accuracy) + ", improved on " +
           std::to_string(rep.classes_improved) + " classes");
}

void cmd_viz(const RunConfig& cfg, const CommandEnv& env) {
  const auto recs = load_or_synthesize(cfg, env);
  const std::uint64_t id = cfg.viz.recording;
  if (id >= recs.size()) {
    throw MissingInputError("recording " + std::to_string(id) + " not in dataset (" +
                            std::to_string(recs.size()) + " recordings, ids 0.." +
                            std::to_string(recs.size() == 0 ? 0 : recs.size() - 1) + ")");
  }
  begin(cfg, env, "viz");
  const GestureRecording& rec = recs[id];
  const std::string label(gesture_name(rec.label));
  const fs::path frames_dir = env.out_dir / "frames";
  ensure_dir(frames_dir);
  for (std::size_t f = 0; f < rec.frames.size(); ++f) {
    char name[32];
    std::snprintf(name, sizeof name, "frame_%03zu.svg", f);
    write_text(frames_dir / name,
               svg::force_field(rec.frames[f], label + " #" + std::to_string(id) + " frame " +
                                                   std::to_string(f)));
  }
  write_text(env.out_dir / "montage.svg",
             svg::montage(rec.frames, label + " #" + std::to_string(id) + " (user " +
                                          std::to_string(rec.user_id) + ")"));
  env.info("viz: " + std::to_string(rec.frames.size()) + " frames of " + label);
}

}  // namespace tgk
