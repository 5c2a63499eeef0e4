// tgk: command-line front end. Exit codes: 0 ok, 1 other failure, 2 config
// error, 3 missing input, 4 numerical failure.
#include <cstdlib>
#include <iostream>
#include <optional>

#include <CLI11.hpp>

#include "tgk/commands.hpp"
#include "tgk/errors.hpp"

namespace {

enum Exit { kOk = 0, kFailure = 1, kConfig = 2, kMissing = 3, kNumerical = 4 };

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Tri-axial tactile skin simulator, calibration and gesture classifier"};
  app.require_subcommand(1);

  std::string config_path;
  std::string out_dir = "out";
  std::optional<std::uint64_t> seed;
  bool desk = false;
  bool full = false;
  std::string dataset, checkpoint;
  std::optional<std::uint64_t> recording;

  app.add_option("--config", config_path, "JSON run configuration");
  app.add_option("--out", out_dir, "output directory")->capture_default_str();
  app.add_option("--seed", seed, "root seed (overrides the config)");
  auto* desk_flag = app.add_flag("--desk-scale", desk, "4 users x 3 blocks x 3 reps (468 recordings)");
  auto* full_flag = app.add_flag("--full-scale", full, "11 users x 9 blocks x 3 reps (3861 recordings)");
  desk_flag->excludes(full_flag);
  app.add_option("--dataset", dataset, "dataset file (overrides paths.dataset)");
  app.add_option("--checkpoint", checkpoint, "checkpoint file (overrides paths.checkpoint)");
  app.add_option("--recording", recording, "recording id for viz (overrides viz.recording)");

  const std::vector<std::pair<const char*, const char*>> commands = {
      {"sweep", "flux versus shear displacement for several magnet heights"},
      {"calibrate", "fit per-taxel quadratic calibrations on synthetic sweeps"},
      {"synth", "generate a synthetic gesture dataset"},
      {"train", "train the gesture classifier"},
      {"eval", "evaluate a checkpoint on the test split"},
      {"ablate", "train and compare normal-only and normal+shear classifiers"},
      {"viz", "render the force field of one recording"},
  };
  for (const auto& [name, help] : commands) app.add_subcommand(name, help)->fallthrough();

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int rc = app.exit(e);
    return rc == 0 ? kOk : kConfig;
  }

  tgk::CommandEnv env;
  env.out_dir = out_dir;
  env.log_level = tgk::parse_log_level(std::getenv("TGK_LOG"));

  try {
    tgk::RunConfig cfg = config_path.empty() ? tgk::RunConfig{} : tgk::load_config(config_path);
    if (desk) tgk::apply_scale(cfg, tgk::DatasetScale::Desk);
    if (full) tgk::apply_scale(cfg, tgk::DatasetScale::Full);
    if (seed) cfg.seed = *seed;
    if (!dataset.empty()) cfg.paths.dataset = dataset;
    if (!checkpoint.empty()) cfg.paths.checkpoint = checkpoint;
    if (recording) cfg.viz.recording = *recording;
    cfg.validate();

    const std::string cmd = app.get_subcommands().front()->get_name();
    if (cmd == "sweep") tgk::cmd_sweep(cfg, env);
    else if (cmd == "calibrate") tgk::cmd_calibrate(cfg, env);
    else if (cmd == "synth") tgk::cmd_synth(cfg, env);
    else if (cmd == "train") tgk::cmd_train(cfg, env);
    else if (cmd == "eval") tgk::cmd_eval(cfg, env);
    else if (cmd == "ablate") tgk::cmd_ablate(cfg, env);
    else if (cmd == "viz") tgk::cmd_viz(cfg, env);
  } catch (const tgk::ConfigError& e) {
    std::cerr << "error: " << e.what() << '\n';
    return kConfig;
  } catch (const tgk::MissingInputError& e) {
    std::cerr << "error: " << e.what() << '\n';
    return kMissing;
  } catch (const tgk::NumericalError& e) {
    std::cerr << "error: " << e.what() << '\n';
    return kNumerical;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return kFailure;
  }
  return kOk;
}
