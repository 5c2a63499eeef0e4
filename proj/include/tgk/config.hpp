#pragma once

#include <cstdint>
#include <filesystem>
#include <string>
#include <vector>

#include <json.hpp>

#include "tgk/calibration.hpp"
#include "tgk/gestures.hpp"
#include "tgk/magnetics.hpp"
#include "tgk/pipeline.hpp"

namespace tgk {

struct SweepSettings {
  std::vector<double> heights_mm{2.0, 4.0, 6.0, 10.0};
  double max_shear_mm = 5.0;
  std::size_t steps = 101;
};

struct CalibrationSettings {
  std::size_t samples_per_taxel = 400;
  double force_noise_std = 0.0;
  double taxel_variation = 0.05;
  GroundTruth truth = GroundTruth::Dipole;
};

struct SynthSettings {
  std::size_t users = 4;
  std::size_t blocks = 3;
  std::size_t reps_per_block = 3;
  double noise_level = kDefaultSensorNoise;
};

struct TrainSettings {
  std::size_t epochs = 60;
  std::size_t batch_size = 32;
  AdamConfig adam{};
  double dropout_p = 0.5;
  AblationMode mode = AblationMode::NormalAndShear;
  SplitRatio split{};
};

struct PathSettings {
  std::string dataset;     // input for train, eval, ablate, viz; empty means synthesize
  std::string checkpoint;  // input for eval
};

struct VizSettings {
  std::uint64_t recording = 0;
};

// Every field has a default, so "{}" is a complete configuration.
struct RunConfig {
  TaxelGeometry geometry{};
  DipoleParams dipole{};
  StiffnessModel stiffness{};
  SweepSettings sweep{};
  CalibrationSettings calibration{};
  SynthSettings synth{};
  TrainSettings train{};
  PathSettings paths{};
  VizSettings viz{};
  // Root of every random stream: dataset synthesis, split, initialization,
  // shuffling, dropout and calibration sampling.
  std::uint64_t seed = 1;

  SynthConfig synth_config() const;
  TrainConfig train_config() const;
  CalibrationCampaign calibration_campaign() const;
  // Throws ConfigError naming the offending field.
  void validate() const;
};

enum class DatasetScale { Desk, Full };
// Desk: 4 users x 3 blocks x 3 reps. Full: 11 x 9 x 3.
void apply_scale(RunConfig& cfg, DatasetScale scale);

// Unknown keys and wrong types raise ConfigError.
RunConfig config_from_json(const nlohmann::json& j);
nlohmann::json config_to_json(const RunConfig& cfg);

// MissingInputError if the file is absent, ConfigError if it does not parse.
RunConfig load_config(const std::filesystem::path& path);

}  // namespace tgk
