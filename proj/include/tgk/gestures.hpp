#pragma once

#include <array>
#include <cstdint>
#include <string_view>
#include <vector>

#include "tgk/geometry.hpp"

namespace tgk {

inline constexpr std::size_t kFramesPerRecording = 122;
inline constexpr std::size_t kGestureClassCount = 13;

enum class GestureClass : std::uint8_t {
  Stroke = 0,
  Scratch,
  Tickle,
  Pat,
  Tap,
  Slap,
  Poke,
  Pinch,
  Pull,
  Rub,
  Press,
  Grab,
  Shake,
};

std::string_view gesture_name(GestureClass c);
GestureClass gesture_from_code(std::size_t code);
GestureClass gesture_from_name(std::string_view name);
constexpr std::size_t code(GestureClass c) { return static_cast<std::size_t>(c); }

struct UserProfile {
  std::uint32_t user_id = 0;
  double amplitude_scale = 1.0;
  double speed_scale = 1.0;
  double location_bias_x_cm = 0.0;
  double location_bias_y_cm = 0.0;
  double noise_level = 0.05;  // N, per axis per taxel
  std::uint64_t seed = 0;

  friend bool operator==(const UserProfile&, const UserProfile&) = default;
};

inline constexpr double kDefaultSensorNoise = 0.05;

UserProfile user_profile(std::uint32_t user_id, std::uint64_t master_seed,
                         double noise_level = kDefaultSensorNoise);

enum class Trajectory { Static, LinearSweep, Oscillation, RandomWalk };
enum class ShearPattern { None, AlongMotion, OpposingPair, UniformDirectional, Alternating };

// Per-class generative parameters. Frame counts are at speed_scale = 1.
struct GestureTemplate {
  std::size_t patch_count_min = 1;
  std::size_t patch_count_max = 1;
  double patch_radius_cm = 1.0;
  Trajectory trajectory = Trajectory::Static;
  double amplitude_min_n = 1.0;
  double amplitude_max_n = 1.0;
  double onset_min = 0;
  double onset_max = 0;
  double duration_min = 0;
  double duration_max = 0;
  std::size_t repetitions_min = 1;
  std::size_t repetitions_max = 1;
  ShearPattern shear = ShearPattern::None;
  double shear_ratio_min = 0.0;
  double shear_ratio_max = 0.0;
  double oscillation_hz_min = 0.0;
  double oscillation_hz_max = 0.0;
};

const GestureTemplate& gesture_template(GestureClass c);

struct GestureRecording {
  std::vector<TactileFrame> frames;
  GestureClass label = GestureClass::Stroke;
  std::uint32_t user_id = 0;
  std::uint64_t recording_id = 0;
  std::uint64_t seed = 0;

  friend bool operator==(const GestureRecording&, const GestureRecording&) = default;
};

// Deterministic in (cls, profile, recording_seed). Forces are rounded to
// float32 precision so a dataset file round-trips exactly.
GestureRecording synth_recording(GestureClass cls, const UserProfile& profile,
                                 std::uint64_t recording_seed);

struct SynthConfig {
  std::size_t users = 4;
  std::size_t blocks = 3;
  std::size_t reps_per_block = 3;
  std::uint64_t master_seed = 1;
  double noise_level = kDefaultSensorNoise;
};

// users x blocks x reps x 13 recordings. Within each block the 13*reps prompts
// are shuffled per (user, block). Recording ids are positions in the result.
std::vector<GestureRecording> synth_dataset(const SynthConfig& cfg);

}  // namespace tgk
