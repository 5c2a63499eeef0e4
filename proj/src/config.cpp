#include "tgk/config.hpp"

#include <fstream>
#include <set>

#include "tgk/errors.hpp"

namespace tgk {
namespace {

using nlohmann::json;

// Reads known keys from one JSON object and rejects whatever is left over.
class Section {
 public:
  Section(const json& j, std::string name) : j_(j), name_(std::move(name)) {
    if (!j_.is_object()) throw ConfigError("config: '" + name_ + "' must be an object");
  }

  template <typename T>
  void read(const char* key, T& target) {
    seen_.insert(key);
    auto it = j_.find(key);
    if (it == j_.end()) return;
    try {
      target = it->template get<T>();
    } catch (const json::exception&) {
      throw ConfigError("config: '" + path(key) + "' has the wrong type");
    }
  }

  void read_u64(const char* key, std::uint64_t& target) {
    seen_.insert(key);
    auto it = j_.find(key);
    if (it == j_.end()) return;
    if (!it->is_number_unsigned()) {
      throw ConfigError("config: '" + path(key) + "' must be a non-negative integer");
    }
    target = it->get<std::uint64_t>();
  }

  void read_size(const char* key, std::size_t& target) {
    std::uint64_t v = target;
    read_u64(key, v);
    target = static_cast<std::size_t>(v);
  }

  const json* child(const char* key) {
    seen_.insert(key);
    auto it = j_.find(key);
    return it == j_.end() ? nullptr : &*it;
  }

  std::string path(const std::string& key) const {
    return name_.empty() ? key : name_ + "." + key;
  }

  void finish() const {
    for (auto it = j_.begin(); it != j_.end(); ++it) {
      if (!seen_.count(it.key())) throw ConfigError("config: unknown key '" + path(it.key()) + "'");
    }
  }

 private:
  const json& j_;
  std::string name_;
  std::set<std::string> seen_;
};

std::string truth_name(GroundTruth t) { return t == GroundTruth::Dipole ? "dipole" : "quadratic"; }

GroundTruth truth_from_name(const std::string& s) {
  if (s == "dipole") return GroundTruth::Dipole;
  if (s == "quadratic") return GroundTruth::Quadratic;
  throw ConfigError("config: calibration.truth must be 'dipole' or 'quadratic', got '" + s + "'");
}

template <typename F>
void section(Section& parent, const char* key, F&& body) {
  if (const json* j = parent.child(key)) {
    Section s(*j, parent.path(key));
    body(s);
    s.finish();
  }
}

void require(bool ok, const std::string& msg) {
  if (!ok) throw ConfigError("config: " + msg);
}

}  // namespace

SynthConfig RunConfig::synth_config() const {
  SynthConfig s;
  s.users = synth.users;
  s.blocks = synth.blocks;
  s.reps_per_block = synth.reps_per_block;
  s.noise_level = synth.noise_level;
  s.master_seed = seed;
  return s;
}

TrainConfig RunConfig::train_config() const {
  TrainConfig t;
  t.epochs = train.epochs;
  t.batch_size = train.batch_size;
  t.adam = train.adam;
  t.dropout_p = train.dropout_p;
  t.seed = seed;
  return t;
}

CalibrationCampaign RunConfig::calibration_campaign() const {
  CalibrationCampaign c;
  c.samples_per_taxel = calibration.samples_per_taxel;
  c.force_noise_std = calibration.force_noise_std;
  c.taxel_variation = calibration.taxel_variation;
  c.truth = calibration.truth;
  c.seed = seed;
  return c;
}

void RunConfig::validate() const {
  try {
    geometry.validate();
    dipole.validate();
    stiffness.validate();
  } catch (const ConfigError&) {
    throw;
  } catch (const Error& e) {
    throw ConfigError(std::string("config: ") + e.what());
  }
  require(!sweep.heights_mm.empty(), "sweep.heights_mm must not be empty");
  for (double h : sweep.heights_mm) require(h > 0, "sweep.heights_mm entries must be positive");
  require(sweep.max_shear_mm > 0, "sweep.max_shear_mm must be positive");
  require(sweep.steps >= 2, "sweep.steps must be at least 2");
  require(calibration.samples_per_taxel >= kFeatureCount,
          "calibration.samples_per_taxel must be at least 9");
  require(calibration.force_noise_std >= 0, "calibration.force_noise_std must be >= 0");
  require(calibration.taxel_variation >= 0 && calibration.taxel_variation < 1,
          "calibration.taxel_variation must be in [0, 1)");
  require(synth.users >= 1 && synth.blocks >= 1 && synth.reps_per_block >= 1,
          "synth counts must be >= 1");
  require(synth.users <= 65535, "synth.users must fit in 16 bits");
  require(synth.noise_level >= 0, "synth.noise_level must be >= 0");
  require(train.batch_size >= 1, "train.batch_size must be >= 1");
  require(train.adam.learning_rate > 0, "train.learning_rate must be positive");
  require(train.adam.beta1 >= 0 && train.adam.beta1 < 1, "train.beta1 must be in [0, 1)");
  require(train.adam.beta2 >= 0 && train.adam.beta2 < 1, "train.beta2 must be in [0, 1)");
  require(train.adam.epsilon > 0, "train.epsilon must be positive");
  require(train.dropout_p >= 0 && train.dropout_p < 1, "train.dropout must be in [0, 1)");
  require(train.split.train >= 1 && train.split.val >= 1 && train.split.test >= 1,
          "train.split entries must be >= 1");
}

void apply_scale(RunConfig& cfg, DatasetScale scale) {
  if (scale == DatasetScale::Desk) {
    cfg.synth.users = 4;
    cfg.synth.blocks = 3;
  } else {
    cfg.synth.users = 11;
    cfg.synth.blocks = 9;
  }
  cfg.synth.reps_per_block = 3;
}

RunConfig config_from_json(const json& j) {
  RunConfig c;
  Section root(j, "");
  root.read_u64("seed", c.seed);
  section(root, "geometry", [&](Section& s) {
    s.read("wall_thickness_mm", c.geometry.wall_thickness_mm);
    s.read("width_mm", c.geometry.width_mm);
    s.read("cavity_height_mm", c.geometry.cavity_height_mm);
    s.read("magnet_height_mm", c.geometry.magnet_height_mm);
    s.read("chip_offset_mm", c.geometry.chip_offset_mm);
  });
  section(root, "dipole", [&](Section& s) {
    s.read("moment_Am2", c.dipole.moment_Am2);
    s.read("direction", c.dipole.direction);
  });
  section(root, "stiffness", [&](Section& s) {
    s.read("kx_N_per_mm", c.stiffness.kx);
    s.read("ky_N_per_mm", c.stiffness.ky);
    s.read("kz_N_per_mm", c.stiffness.kz);
  });
  section(root, "sweep", [&](Section& s) {
    s.read("heights_mm", c.sweep.heights_mm);
    s.read("max_shear_mm", c.sweep.max_shear_mm);
    s.read_size("steps", c.sweep.steps);
  });
  section(root, "calibration", [&](Section& s) {
    s.read_size("samples_per_taxel", c.calibration.samples_per_taxel);
    s.read("force_noise_std_N", c.calibration.force_noise_std);
    s.read("taxel_variation", c.calibration.taxel_variation);
    std::string truth = truth_name(c.calibration.truth);
    s.read("truth", truth);
    c.calibration.truth = truth_from_name(truth);
  });
  section(root, "synth", [&](Section& s) {
    s.read_size("users", c.synth.users);
    s.read_size("blocks", c.synth.blocks);
    s.read_size("reps_per_block", c.synth.reps_per_block);
    s.read("noise_N", c.synth.noise_level);
  });
  section(root, "train", [&](Section& s) {
    s.read_size("epochs", c.train.epochs);
    s.read_size("batch_size", c.train.batch_size);
    s.read("learning_rate", c.train.adam.learning_rate);
    s.read("beta1", c.train.adam.beta1);
    s.read("beta2", c.train.adam.beta2);
    s.read("epsilon", c.train.adam.epsilon);
    s.read("dropout", c.train.dropout_p);
    std::string mode(ablation_mode_name(c.train.mode));
    s.read("mode", mode);
    try {
      c.train.mode = ablation_mode_from_name(mode);
    } catch (const Error&) {
      throw ConfigError("config: train.mode must be 'normal_only' or 'normal_and_shear', got '" +
                        mode + "'");
    }
    section(s, "split", [&](Section& sp) {
      sp.read_size("train", c.train.split.train);
      sp.read_size("val", c.train.split.val);
      sp.read_size("test", c.train.split.test);
    });
  });
  section(root, "paths", [&](Section& s) {
    s.read("dataset", c.paths.dataset);
    s.read("checkpoint", c.paths.checkpoint);
  });
  section(root, "viz", [&](Section& s) { s.read_u64("recording", c.viz.recording); });
  root.finish();
  c.validate();
  return c;
}

json config_to_json(const RunConfig& c) {
  json j;
  j["seed"] = c.seed;
  j["geometry"] = {{"wall_thickness_mm", c.geometry.wall_thickness_mm},
                   {"width_mm", c.geometry.width_mm},
                   {"cavity_height_mm", c.geometry.cavity_height_mm},
                   {"magnet_height_mm", c.geometry.magnet_height_mm},
                   {"chip_offset_mm", c.geometry.chip_offset_mm}};
  j["dipole"] = {{"moment_Am2", c.dipole.moment_Am2}, {"direction", c.dipole.direction}};
  j["stiffness"] = {{"kx_N_per_mm", c.stiffness.kx},
                    {"ky_N_per_mm", c.stiffness.ky},
                    {"kz_N_per_mm", c.stiffness.kz}};
  j["sweep"] = {{"heights_mm", c.sweep.heights_mm},
                {"max_shear_mm", c.sweep.max_shear_mm},
                {"steps", c.sweep.steps}};
  j["calibration"] = {{"samples_per_taxel", c.calibration.samples_per_taxel},
                      {"force_noise_std_N", c.calibration.force_noise_std},
                      {"taxel_variation", c.calibration.taxel_variation},
                      {"truth", truth_name(c.calibration.truth)}};
  j["synth"] = {{"users", c.synth.users},
                {"blocks", c.synth.blocks},
                {"reps_per_block", c.synth.reps_per_block},
                {"noise_N", c.synth.noise_level}};
  j["train"] = {{"epochs", c.train.epochs},
                {"batch_size", c.train.batch_size},
                {"learning_rate", c.train.adam.learning_rate},
                {"beta1", c.train.adam.beta1},
                {"beta2", c.train.adam.beta2},
                {"epsilon", c.train.adam.epsilon},
                {"dropout", c.train.dropout_p},
                {"mode", std::string(ablation_mode_name(c.train.mode))},
                {"split",
                 {{"train", c.train.split.train},
                  {"val", c.train.split.val},
                  {"test", c.train.split.test}}}};
  j["paths"] = {{"dataset", c.paths.dataset}, {"checkpoint", c.paths.checkpoint}};
  j["viz"] = {{"recording", c.viz.recording}};
  return j;
}

RunConfig load_config(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw MissingInputError("config file not found: " + path.string());
  json j;
  try {
    j = json::parse(in);
  } catch (const json::parse_error& e) {
    throw ConfigError("config: " + path.string() + " is not valid JSON: " + e.what());
  }
  return config_from_json(j);
}

}  // namespace tgk
