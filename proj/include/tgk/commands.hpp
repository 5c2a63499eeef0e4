#pragma once

#include <filesystem>
#include <functional>
#include <string>
#include <vector>

#include "tgk/config.hpp"

namespace tgk {

enum class LogLevel { Quiet = 0, Info = 1, Debug = 2 };

// Parses TGK_LOG-style values: quiet|info|debug or 0|1|2. Unknown values give Info.
LogLevel parse_log_level(const char* value);

struct CommandEnv {
  std::filesystem::path out_dir = "out";
  LogLevel log_level = LogLevel::Info;
  // Receives progress lines; stderr when unset.
  std::function<void(const std::string&)> sink;

  void info(const std::string& msg) const;
  void debug(const std::string& msg) const;
};

// Each command writes its artifacts plus config.json (effective configuration)
// and seed.json into env.out_dir. Outputs depend only on the configuration.

// sweep.csv (height_mm, shear_mm, bx_mT, bz_mT), sweep_bx.svg, sweep_bz.svg
void cmd_sweep(const RunConfig& cfg, const CommandEnv& env);

// calibration.json (one model per taxel), calibration_rms.csv (per taxel,
// then Mean and Standard Deviation rows)
void cmd_calibrate(const RunConfig& cfg, const CommandEnv& env);

// dataset.bin and its dataset.json sidecar
void cmd_synth(const RunConfig& cfg, const CommandEnv& env);

// model.tgkm, model.json manifest, history.csv
void cmd_train(const RunConfig& cfg, const CommandEnv& env);

// confusion.csv, confusion.svg, report.json for the checkpoint in paths.checkpoint
void cmd_eval(const RunConfig& cfg, const CommandEnv& env);

// ablation.json plus per-arm confusion CSV/SVG and history CSV
void cmd_ablate(const RunConfig& cfg, const CommandEnv& env);

// frames/frame_NNN.svg for each frame and montage.svg for viz.recording
void cmd_viz(const RunConfig& cfg, const CommandEnv& env);

// Reads paths.dataset, or synthesizes from the synth section when it is empty.
std::vector<GestureRecording> load_or_synthesize(const RunConfig& cfg, const CommandEnv& env);

std::string confusion_csv(const ConfusionMatrix& cm);
std::string history_csv(const std::vector<EpochRecord>& history);

// Sibling manifest path for a checkpoint: model.tgkm -> model.json.
std::filesystem::path manifest_path(const std::filesystem::path& checkpoint);

}  // namespace tgk
