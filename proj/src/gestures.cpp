#include "tgk/gestures.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <random>
#include <string>

#include "tgk/errors.hpp"
#include "tgk/random.hpp"

namespace tgk {
namespace {

constexpr std::array<std::string_view, kGestureClassCount> kNames = {
    "stroke", "scratch", "tickle", "pat",  "tap",  "slap",  "poke",
    "pinch",  "pull",    "rub",    "press", "grab", "shake"};

using T = Trajectory;
using S = ShearPattern;

// clang-format off
const std::array<GestureTemplate, kGestureClassCount> kTemplates = {{
    // count   radius  trajectory       amplitude   onset      duration    reps  shear                   ratio        hz
    {1, 1,     1.0,    T::LinearSweep,  0.6, 1.4,   5, 15,     25, 40,     1, 3, S::AlongMotion,         0.20, 0.40,  0, 0},  // stroke
    {2, 3,     0.5,    T::LinearSweep,  0.6, 1.4,   5, 15,     25, 40,     1, 3, S::AlongMotion,         0.60, 1.00,  0, 0},  // scratch
    {1, 2,     0.5,    T::RandomWalk,   0.5, 1.0,   3, 20,     6, 15,      3, 6, S::AlongMotion,         0.60, 1.00,  0, 0},  // tickle
    {1, 1,     2.0,    T::Static,       1.0, 2.5,   5, 25,     4, 7,       2, 5, S::None,                0.00, 0.05,  0, 0},  // pat
    {1, 1,     0.6,    T::Static,       1.0, 2.5,   5, 25,     2, 4,       2, 6, S::UniformDirectional,  0.20, 0.50,  0, 0},  // tap
    {1, 1,     2.2,    T::Static,       3.0, 5.0,   20, 80,    3, 5,       1, 1, S::UniformDirectional,  0.40, 0.70,  0, 0},  // slap
    {1, 1,     0.6,    T::Static,       1.5, 3.5,   10, 30,    20, 50,     1, 1, S::None,                0.00, 0.10,  0, 0},  // poke
    {2, 2,     0.5,    T::Static,       1.5, 3.5,   10, 30,    20, 50,     1, 1, S::OpposingPair,        0.70, 1.00,  0, 0},  // pinch
    {1, 1,     2.0,    T::Static,       1.5, 3.5,   5, 20,     60, 100,    1, 1, S::UniformDirectional,  0.60, 1.00,  0, 0},  // pull
    {1, 1,     1.2,    T::Oscillation,  1.5, 3.0,   5, 15,     90, 110,    1, 1, S::Alternating,         0.60, 1.00,  0.8, 1.6},  // rub
    {1, 1,     2.0,    T::Static,       1.5, 3.5,   5, 20,     60, 100,    1, 1, S::None,                0.00, 0.05,  0, 0},  // press
    {4, 5,     0.8,    T::Static,       2.0, 4.0,   5, 20,     40, 100,    1, 1, S::OpposingPair,        0.50, 0.90,  0, 0},  // grab
    {4, 5,     0.8,    T::Oscillation,  2.0, 4.0,   5, 20,     40, 100,    1, 1, S::OpposingPair,        0.50, 0.90,  2.0, 4.0},  // shake
}};
// clang-format on

constexpr double kTwoPi = 2.0 * std::numbers::pi;
constexpr double kGridCentreX = 6.75;
constexpr double kGridCentreY = 3.0;
constexpr double kGridMaxX = 13.5;
constexpr double kGridMaxY = 6.0;
constexpr double kMinFootprintCm = 0.75;

// A circular contact on the skin for one frame. `normal` is the compressive
// magnitude at the patch centre; shear is the in-plane force at the centre.
struct Patch {
  double x = 0, y = 0, radius = 1.0;
  double normal = 0;
  double shear_x = 0, shear_y = 0;
  // Fractional change of normal force per cm along +y.
  double gradient_y = 0;
};

using Scene = std::array<std::vector<Patch>, kFramesPerRecording>;

class Sampler {
 public:
  explicit Sampler(std::uint64_t seed) : rng_(seed) {}
  double uniform(double lo, double hi) {
    if (hi <= lo) return lo;
    return std::uniform_real_distribution<double>(lo, hi)(rng_);
  }
  std::size_t integer(std::size_t lo, std::size_t hi) {
    return std::uniform_int_distribution<std::size_t>(lo, hi)(rng_);
  }
  double sign() { return integer(0, 1) ? 1.0 : -1.0; }
  double angle() { return uniform(0.0, kTwoPi); }
  std::mt19937_64& engine() { return rng_; }

 private:
  std::mt19937_64 rng_;
};

// Raised-cosine trapezoid on [onset, onset + duration).
double envelope(double t, double onset, double duration, double ramp) {
  if (t < onset || t >= onset + duration) return 0.0;
  ramp = std::min(ramp, duration / 2.0);
  if (ramp <= 0) return 1.0;
  const double u = t - onset;
  const double v = onset + duration - t;
  if (u < ramp) return 0.5 - 0.5 * std::cos(std::numbers::pi * u / ramp);
  if (v < ramp) return 0.5 - 0.5 * std::cos(std::numbers::pi * v / ramp);
  return 1.0;
}

struct Context {
  const GestureTemplate& tpl;
  const UserProfile& profile;
  Sampler& rng;
  double cx, cy;

  double amplitude() {
    return rng.uniform(tpl.amplitude_min_n, tpl.amplitude_max_n) * profile.amplitude_scale;
  }
  double ratio() { return rng.uniform(tpl.shear_ratio_min, tpl.shear_ratio_max); }
  double onset() { return rng.uniform(tpl.onset_min, tpl.onset_max) / profile.speed_scale; }
  double duration() {
    return rng.uniform(tpl.duration_min, tpl.duration_max) / profile.speed_scale;
  }
  std::size_t repetitions() { return rng.integer(tpl.repetitions_min, tpl.repetitions_max); }
  std::size_t patches() { return rng.integer(tpl.patch_count_min, tpl.patch_count_max); }
  double frequency() {
    return rng.uniform(tpl.oscillation_hz_min, tpl.oscillation_hz_max) * profile.speed_scale;
  }
};

void sweep_scene(Context& ctx, Scene& scene, bool nails) {
  const double amp = ctx.amplitude();
  const double ratio = ctx.ratio();
  const double dir = ctx.rng.sign();
  const double length = ctx.rng.uniform(6.0, 10.0);
  const std::size_t reps = ctx.repetitions();
  const std::size_t n = nails ? ctx.patches() : 1;
  const double radius = ctx.tpl.patch_radius_cm;
  // Fingernail contacts together carry about the footprint mass of one pad.
  const double per_patch =
      nails ? amp * 1.0 / (static_cast<double>(n) * kMinFootprintCm * kMinFootprintCm) : amp;
  const double spacing = 0.5;
  double t0 = ctx.onset();
  for (std::size_t r = 0; r < reps; ++r) {
    const double dur = ctx.duration();
    for (std::size_t f = 0; f < kFramesPerRecording; ++f) {
      const double e = envelope(static_cast<double>(f), t0, dur, 4.0);
      if (e <= 0) continue;
      const double progress = (static_cast<double>(f) - t0) / dur;
      const double x = ctx.cx + dir * length * (progress - 0.5);
      for (std::size_t p = 0; p < n; ++p) {
        const double y = ctx.cy + spacing * (static_cast<double>(p) - 0.5 * (static_cast<double>(n) - 1));
        Patch patch{x, y, radius, per_patch * e, dir * ratio * per_patch * e, 0.0, 0.0};
        scene[f].push_back(patch);
      }
    }
    t0 += dur + ctx.rng.uniform(4.0, 10.0) / ctx.profile.speed_scale;
  }
}

void tickle_scene(Context& ctx, Scene& scene) {
  const std::size_t n = ctx.patches();
  const std::size_t contacts = ctx.repetitions();
  const double ratio = ctx.ratio();
  for (std::size_t p = 0; p < n; ++p) {
    double x = ctx.cx + ctx.rng.uniform(-3.0, 3.0);
    double y = ctx.cy + ctx.rng.uniform(-1.5, 1.5);
    double heading = ctx.rng.angle();
    const double speed = 0.25 * ctx.profile.speed_scale;
    std::array<double, kFramesPerRecording> xs{}, ys{}, hs{};
    for (std::size_t f = 0; f < kFramesPerRecording; ++f) {
      heading += ctx.rng.uniform(-0.6, 0.6);
      x = std::clamp(x + speed * std::cos(heading), 0.0, kGridMaxX);
      y = std::clamp(y + speed * std::sin(heading), 0.0, kGridMaxY);
      xs[f] = x;
      ys[f] = y;
      hs[f] = heading;
    }
    double t0 = ctx.onset();
    for (std::size_t c = 0; c < contacts; ++c) {
      const double dur = ctx.duration();
      const double amp = ctx.amplitude();
      for (std::size_t f = 0; f < kFramesPerRecording; ++f) {
        const double e = envelope(static_cast<double>(f), t0, dur, 2.0);
        if (e <= 0) continue;
        const double a = amp * e;
        scene[f].push_back({xs[f], ys[f], ctx.tpl.patch_radius_cm, a, ratio * a * std::cos(hs[f]),
                            ratio * a * std::sin(hs[f]), 0.0});
      }
      t0 += dur + ctx.rng.uniform(2.0, 8.0) / ctx.profile.speed_scale;
    }
  }
}

// Repeated short contacts at one location (pat, tap) or a single impulse (slap).
void contact_scene(Context& ctx, Scene& scene, double theta) {
  const std::size_t contacts = ctx.repetitions();
  const double amp = ctx.amplitude();
  const double ratio = ctx.ratio();
  double t0 = ctx.onset();
  for (std::size_t c = 0; c < contacts; ++c) {
    const double dur = ctx.duration();
    for (std::size_t f = 0; f < kFramesPerRecording; ++f) {
      const double e = envelope(static_cast<double>(f), t0, dur, 1.0);
      if (e <= 0) continue;
      const double a = amp * e;
      scene[f].push_back({ctx.cx, ctx.cy, ctx.tpl.patch_radius_cm, a, ratio * a * std::cos(theta),
                          ratio * a * std::sin(theta), 0.0});
    }
    t0 += dur + ctx.rng.uniform(6.0, 16.0) / ctx.profile.speed_scale;
  }
}

// Single sustained static contact (poke, press, pull).
void hold_scene(Context& ctx, Scene& scene, double radius_jitter, double shear_theta,
                double gradient) {
  const double amp = ctx.amplitude();
  const double ratio = ctx.ratio();
  const double radius = ctx.tpl.patch_radius_cm + ctx.rng.uniform(0.0, radius_jitter);
  const double t0 = ctx.onset();
  const double dur = ctx.duration();
  for (std::size_t f = 0; f < kFramesPerRecording; ++f) {
    const double e = envelope(static_cast<double>(f), t0, dur, 4.0);
    if (e <= 0) continue;
    const double a = amp * e;
    scene[f].push_back({ctx.cx, ctx.cy, radius, a, ratio * a * std::cos(shear_theta),
                        ratio * a * std::sin(shear_theta), gradient});
  }
}

void pinch_scene(Context& ctx, Scene& scene) {
  const double amp = ctx.amplitude();
  const double ratio = ctx.ratio();
  // Two pitches apart: adjacent fingers, still resolved as two contacts.
  const double separation = 2.0 * kPitchCm;
  const double mid = std::round(ctx.cx / kPitchCm) * kPitchCm;
  const double left = std::clamp(mid - separation / 2.0, 0.75, kGridMaxX - separation - 0.75);
  const double t0 = ctx.onset();
  const double dur = ctx.duration();
  for (std::size_t f = 0; f < kFramesPerRecording; ++f) {
    const double e = envelope(static_cast<double>(f), t0, dur, 4.0);
    if (e <= 0) continue;
    const double a = amp * e;
    const double s = ratio * a;
    scene[f].push_back({left, ctx.cy, ctx.tpl.patch_radius_cm, a, s, 0.0, 0.0});
    scene[f].push_back({left + separation, ctx.cy, ctx.tpl.patch_radius_cm, a, -s, 0.0, 0.0});
  }
}

void rub_scene(Context& ctx, Scene& scene) {
  const double amp = ctx.amplitude();
  const double ratio = ctx.ratio();
  const double excursion = ctx.rng.uniform(1.5, 3.0);
  const double hz = ctx.frequency();
  const double phase = ctx.rng.angle();
  const double t0 = ctx.onset();
  const double t1 = static_cast<double>(kFramesPerRecording) - ctx.onset();
  for (std::size_t f = 0; f < kFramesPerRecording; ++f) {
    const double e = envelope(static_cast<double>(f), t0, t1 - t0, 4.0);
    if (e <= 0) continue;
    const double w = kTwoPi * hz * static_cast<double>(f) / kFrameRateHz + phase;
    const double a = amp * e;
    // Shear follows the hand's velocity, so it alternates with each stroke.
    scene[f].push_back({ctx.cx + excursion * std::sin(w), ctx.cy, ctx.tpl.patch_radius_cm, a,
                        ratio * a * std::cos(w), 0.0, 0.0});
  }
}

// Fingers along the lower edge, thumb along the upper edge, shear squeezing inwards.
void grab_scene(Context& ctx, Scene& scene, bool shake) {
  const std::size_t n = ctx.patches();
  const double amp = ctx.amplitude();
  const double ratio = ctx.ratio();
  const double t0 = ctx.onset();
  const double dur = ctx.duration();
  const double hz = shake ? ctx.frequency() : 0.0;
  const double phase = ctx.rng.angle();
  const double sway = shake ? ctx.rng.uniform(0.6, 1.0) : 0.0;
  const std::size_t fingers = n - 1;
  for (std::size_t f = 0; f < kFramesPerRecording; ++f) {
    const double e = envelope(static_cast<double>(f), t0, dur, 1.5);
    if (e <= 0) continue;
    const double w = kTwoPi * hz * static_cast<double>(f) / kFrameRateHz + phase;
    const double osc = shake ? std::sin(w) : 0.0;
    const double a = amp * e * (1.0 + 0.02 * osc);
    const double lateral = sway * ratio * a * osc;
    for (std::size_t p = 0; p < fingers; ++p) {
      const double x = ctx.cx + 1.5 * (static_cast<double>(p) - 0.5 * (static_cast<double>(fingers) - 1));
      scene[f].push_back({x, 0.5, ctx.tpl.patch_radius_cm, a, lateral, ratio * a, 0.0});
    }
    scene[f].push_back({ctx.cx, kGridMaxY - 0.5, ctx.tpl.patch_radius_cm + 0.2, a * 1.2,
                        lateral, -ratio * a * 1.2, 0.0});
  }
}

TactileFrame rasterize(const std::vector<Patch>& patches) {
  TactileFrame frame;
  for (std::size_t t = 0; t < kTaxelCount; ++t) {
    const double tx = TaxelGrid::x_cm(t);
    const double ty = TaxelGrid::y_cm(t);
    ForceVector acc;
    for (const Patch& p : patches) {
      const double reach = std::max(p.radius, kMinFootprintCm);
      const double d2 = (tx - p.x) * (tx - p.x) + (ty - p.y) * (ty - p.y);
      if (d2 >= 4.0 * reach * reach) continue;
      double w = std::exp(-d2 / (reach * reach));
      w *= std::max(0.0, 1.0 + p.gradient_y * (ty - p.y));
      acc.fx += p.shear_x * w;
      acc.fy += p.shear_y * w;
      acc.fz -= p.normal * w;
    }
    frame.forces[t] = acc;
  }
  return frame;
}

void clamp_to_range(ForceVector& f) {
  f.fx = std::clamp(f.fx, -kMaxShearN, kMaxShearN);
  f.fy = std::clamp(f.fy, -kMaxShearN, kMaxShearN);
  f.fz = std::clamp(f.fz, -kMaxNormalN, 0.0);
}

double to_f32(double v) { return static_cast<double>(static_cast<float>(v)); }

}  // namespace

std::string_view gesture_name(GestureClass c) { return kNames.at(code(c)); }

GestureClass gesture_from_code(std::size_t c) {
  if (c >= kGestureClassCount) {
    throw ArgumentError("gesture class code " + std::to_string(c) + " out of range 0..12");
  }
  return static_cast<GestureClass>(c);
}

GestureClass gesture_from_name(std::string_view name) {
  for (std::size_t i = 0; i < kGestureClassCount; ++i) {
    if (kNames[i] == name) return static_cast<GestureClass>(i);
  }
  throw ArgumentError("unknown gesture class '" + std::string(name) + "'");
}

const GestureTemplate& gesture_template(GestureClass c) { return kTemplates.at(code(c)); }

UserProfile user_profile(std::uint32_t user_id, std::uint64_t master_seed, double noise_level) {
  UserProfile p;
  p.user_id = user_id;
  p.seed = derive_seed(master_seed, {0x05e5, user_id});
  Sampler rng(p.seed);
  p.amplitude_scale = std::exp(rng.uniform(std::log(0.7), std::log(1.4)));
  p.speed_scale = std::exp(rng.uniform(std::log(0.8), std::log(1.25)));
  p.location_bias_x_cm = rng.uniform(-1.5, 1.5);
  p.location_bias_y_cm = rng.uniform(-0.5, 0.5);
  p.noise_level = noise_level;
  return p;
}

GestureRecording synth_recording(GestureClass cls, const UserProfile& profile,
                                 std::uint64_t recording_seed) {
  const GestureTemplate& tpl = gesture_template(cls);
  Sampler rng(derive_seed(recording_seed, {code(cls)}));
  const double cx = std::clamp(kGridCentreX + profile.location_bias_x_cm + rng.uniform(-1.0, 1.0),
                               3.0, kGridMaxX - 3.0);
  const double cy = std::clamp(kGridCentreY + profile.location_bias_y_cm + rng.uniform(-0.4, 0.4),
                               2.0, kGridMaxY - 2.0);
  Context ctx{tpl, profile, rng, cx, cy};

  Scene scene;
  switch (cls) {
    case GestureClass::Stroke: sweep_scene(ctx, scene, false); break;
    case GestureClass::Scratch: sweep_scene(ctx, scene, true); break;
    case GestureClass::Tickle: tickle_scene(ctx, scene); break;
    case GestureClass::Pat: contact_scene(ctx, scene, rng.angle()); break;
    case GestureClass::Tap:
      // Fingertip comes in at an angle from the user's side.
      contact_scene(ctx, scene, std::numbers::pi / 2.0 + rng.uniform(-0.5, 0.5));
      break;
    case GestureClass::Slap: {
      // The swing comes across the arm, from either side.
      const double theta = rng.sign() * std::numbers::pi / 2.0 + rng.uniform(-0.35, 0.35);
      contact_scene(ctx, scene, theta);
      break;
    }
    case GestureClass::Poke: hold_scene(ctx, scene, 0.2, rng.angle(), 0.0); break;
    case GestureClass::Pinch: pinch_scene(ctx, scene); break;
    case GestureClass::Pull: {
      // Hand grips the far side and drags towards the user (-y).
      const double gradient = rng.uniform(0.05, 0.15);
      hold_scene(ctx, scene, 0.0, -std::numbers::pi / 2.0, gradient);
      break;
    }
    case GestureClass::Rub: rub_scene(ctx, scene); break;
    case GestureClass::Press: {
      // A tilted hand loads one side of the contact more than the other.
      const double tilt = rng.uniform(-0.15, 0.15);
      hold_scene(ctx, scene, 0.0, rng.angle(), tilt);
      break;
    }
    case GestureClass::Grab: grab_scene(ctx, scene, false); break;
    case GestureClass::Shake: grab_scene(ctx, scene, true); break;
  }

  GestureRecording rec;
  rec.label = cls;
  rec.user_id = profile.user_id;
  rec.seed = recording_seed;
  rec.frames.resize(kFramesPerRecording);
  std::mt19937_64 noise_rng(derive_seed(recording_seed, {0x4015e}));
  std::normal_distribution<double> noise(0.0, 1.0);
  for (std::size_t f = 0; f < kFramesPerRecording; ++f) {
    TactileFrame frame = rasterize(scene[f]);
    frame.timestamp = static_cast<int>(f);
    for (ForceVector& force : frame.forces) {
      clamp_to_range(force);
      if (profile.noise_level > 0) {
        force.fx += profile.noise_level * noise(noise_rng);
        force.fy += profile.noise_level * noise(noise_rng);
        force.fz += profile.noise_level * noise(noise_rng);
        clamp_to_range(force);
      }
      force = {to_f32(force.fx), to_f32(force.fy), to_f32(force.fz)};
    }
    rec.frames[f] = frame;
  }
  return rec;
}

std::vector<GestureRecording> synth_dataset(const SynthConfig& cfg) {
  if (cfg.users == 0 || cfg.blocks == 0 || cfg.reps_per_block == 0) {
    throw ArgumentError("synth_dataset: users, blocks and reps must be >= 1");
  }
  std::vector<GestureRecording> out;
  out.reserve(cfg.users * cfg.blocks * cfg.reps_per_block * kGestureClassCount);
  for (std::size_t u = 0; u < cfg.users; ++u) {
    const UserProfile profile =
        user_profile(static_cast<std::uint32_t>(u), cfg.master_seed, cfg.noise_level);
    for (std::size_t b = 0; b < cfg.blocks; ++b) {
      std::vector<std::size_t> prompts;
      for (std::size_t r = 0; r < cfg.reps_per_block; ++r) {
        for (std::size_t c = 0; c < kGestureClassCount; ++c) prompts.push_back(c);
      }
      std::mt19937_64 order_rng(derive_seed(cfg.master_seed, {0xb10c, u, b}));
      std::shuffle(prompts.begin(), prompts.end(), order_rng);
      for (std::size_t i = 0; i < prompts.size(); ++i) {
        const std::uint64_t rec_seed = derive_seed(cfg.master_seed, {0x7ec, u, b, i});
        GestureRecording rec = synth_recording(gesture_from_code(prompts[i]), profile, rec_seed);
        rec.recording_id = out.size();
        out.push_back(std::move(rec));
      }
    }
  }
  return out;
}

}  // namespace tgk
