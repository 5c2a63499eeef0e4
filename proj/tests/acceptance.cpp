// Acceptance run: one PASS/FAIL line per criterion, non-zero exit if any fails.
#include <chrono>
#include <cstdio>
#include <functional>
#include <set>
#include <string>

#include "gradcheck.hpp"
#include "helpers.hpp"
#include "tgk/calibration.hpp"
#include "tgk/commands.hpp"
#include "tgk/magnetics.hpp"
#include "tgk/pipeline.hpp"

using namespace tgk;
using namespace tgk::test;
namespace fs = std::filesystem;

namespace {

struct Outcome {
  bool pass = false;
  std::string detail;
};

std::string fmt(const char* f, double a, double b = 0, double c = 0, double d = 0) {
  char buf[256];
  std::snprintf(buf, sizeof buf, f, a, b, c, d);
  return buf;
}

bool shape_is(const Tensor& t, std::vector<std::size_t> s) { return t.shape == s; }

Outcome shape_fidelity() {
  SynthConfig sc;
  sc.users = 11;
  sc.blocks = 9;
  sc.reps_per_block = 3;
  const auto recs = synth_dataset(sc);
  const DatasetSplit split = split_dataset(recs, 1);
  bool ok = true;
  std::string detail;
  for (AblationMode m : {AblationMode::NormalAndShear, AblationMode::NormalOnly}) {
    const LabeledTensor t = assemble_tensor(recs, split.train, m);
    const std::size_t c = input_channels(m);
    ok = ok && shape_is(t.inputs, {3081, c, 5, 10});
    detail += shape_string(t.inputs.shape) + " ";
    CnnModel model(gesture_cnn_config(c));
    ForwardCache cache;
    model.set_mode(Mode::Eval);
    forward(model, t.inputs.slice(0), cache);
    ok = ok && cache.pooled.size() == 4392;
    detail += "pooled " + std::to_string(cache.pooled.size()) + "; ";
  }
  return {ok, detail};
}

Outcome gradient_correctness() {
  std::mt19937_64 rng(2024);
  std::size_t bad = 0, total = 0;
  {
    Tensor x = random_tensor({3, 5, 10}, rng);
    Tensor k = random_tensor({4, 3, 3, 3}, rng);
    Tensor b = random_tensor({4}, rng);
    const Tensor w = random_tensor({4, 5, 10}, rng);
    const Conv2dGrads g = conv2d_backward(x, k, w);
    auto f = [&] { return dot(w, conv2d(x, k, b)); };
    bad += fd_mismatches(x, g.input, f) + fd_mismatches(k, g.kernel, f) + fd_mismatches(b, g.bias, f);
    total += x.size() + k.size() + b.size();
  }
  {
    Tensor x = random_tensor({4, 5, 10}, rng);
    const Tensor w = random_tensor({4, 4, 9}, rng);
    bad += fd_mismatches(x, maxpool2_backward(x, w), [&] { return dot(w, maxpool2(x)); });
    total += x.size();
  }
  {
    Tensor x = random_tensor({40}, rng);
    const Tensor w = random_tensor({40}, rng);
    bad += fd_mismatches(x, relu_backward(x, w), [&] { return dot(w, relu(x)); });
    total += x.size();
  }
  {
    Tensor x = random_tensor({12}, rng);
    Tensor W = random_tensor({6, 12}, rng);
    Tensor b = random_tensor({6}, rng);
    const Tensor w = random_tensor({6}, rng);
    const LinearGrads g = linear_backward(x, W, w);
    auto f = [&] { return dot(w, linear(x, W, b)); };
    bad += fd_mismatches(x, g.input, f) + fd_mismatches(W, g.weights, f) + fd_mismatches(b, g.bias, f);
    total += x.size() + W.size() + b.size();
  }
  {
    std::vector<double> l(13);
    for (double& v : l) v = std::normal_distribution<double>(0, 2)(rng);
    Tensor lt({13}, l);
    const auto g = softmax_cross_entropy(l, 4).grad;
    bad += fd_mismatches(lt, Tensor({13}, g), [&] { return softmax_cross_entropy(lt.data, 4).loss; }, 1e-5, 1e-6);
    total += 13;
  }
  CnnConfig c;
  c.in_channels = 3;
  c.conv_channels = 4;
  c.hidden = 8;
  CnnModel m(c);
  m.initialize(7);
  for (auto span : {m.conv_bias(), m.fc1_bias(), m.fc2_bias()}) {
    for (double& v : span) v = std::normal_distribution<double>(0, 0.1)(rng);
  }
  const EndToEndCheck e = check_end_to_end(m, random_tensor({3, 5, 10}, rng), 5, 99);
  const bool ok = bad == 0 && e.mismatched == 0 && e.skipped * 100 < m.parameters().size();
  return {ok, std::to_string(total - bad) + "/" + std::to_string(total) + " layer entries, end-to-end " +
                  std::to_string(e.checked - e.mismatched) + "/" + std::to_string(e.checked) +
                  " parameters (" + std::to_string(e.skipped) + " at kinks)"};
}

Outcome calibration_exactness() {
  CalibrationCampaign cfg;
  cfg.truth = GroundTruth::Quadratic;
  const CalibrationReport rep = run_calibration({}, {}, {}, cfg);
  double worst_rms = 0, worst_coef = 0;
  bool ok = rep.taxels.size() == kTaxelCount && rep.failed == 0;
  for (const auto& t : rep.taxels) {
    if (!t.model || !t.truth) {
      ok = false;
      continue;
    }
    worst_rms = std::max({worst_rms, t.rms.fx, t.rms.fy, t.rms.fz});
    for (int a = 0; a < 3; ++a) {
      for (std::size_t j = 0; j < kFeatureCount; ++j) {
        worst_coef = std::max(worst_coef, rel_err(t.model->coeffs[a][j], t.truth->coeffs[a][j]));
      }
    }
  }
  ok = ok && worst_rms < 1e-9 && worst_coef < 1e-8;
  return {ok, fmt("worst RMS %.3g N, worst coefficient rel err %.3g", worst_rms, worst_coef)};
}

// Parabolic refinement of the extreme sample of `v` over the uniform grid `x`.
double refined_argmax(const std::vector<double>& x, const std::vector<double>& v) {
  std::size_t k = 0;
  for (std::size_t i = 1; i < v.size(); ++i) {
    if (v[i] > v[k]) k = i;
  }
  if (k == 0 || k + 1 == v.size()) return x[k];
  const double a = v[k - 1], b = v[k], c = v[k + 1];
  const double denom = a - 2 * b + c;
  return denom == 0 ? x[k] : x[k] + 0.5 * (a - c) / denom * (x[1] - x[0]);
}

Outcome dipole_analytics() {
  const std::vector<double> heights{2, 4, 6, 10};
  bool ok = true;
  double worst = 0;
  std::vector<double> change;
  for (double h : heights) {
    TaxelGeometry g;
    g.magnet_height_mm = h;
    const double z0 = g.standoff_mm();
    const auto curve = flux_sweep({h}, 3 * z0, 30001, g, DipoleParams{}).front();
    std::vector<double> x, bx, bz;
    for (const auto& p : curve.points) {
      x.push_back(p.shear_mm);
      bx.push_back(p.bx_mT);
      bz.push_back(-p.bz_mT);  // bz has its minimum at the stationary point
    }
    const double x_bx = refined_argmax(x, bx);
    const double x_bz = refined_argmax(x, bz);
    const double e1 = std::abs(x_bx - z0 / 2) / z0, e2 = std::abs(x_bz - 2 * z0) / z0;
    worst = std::max({worst, e1, e2});
    ok = ok && e1 < 0.005 && e2 < 0.005;
    // Total signal change over the default 5 mm shear sweep.
    const auto sweep = flux_sweep({h}, 5.0, 101, g, DipoleParams{}).front();
    double lo_x = 1e300, hi_x = -1e300, lo_z = 1e300, hi_z = -1e300;
    for (const auto& p : sweep.points) {
      lo_x = std::min(lo_x, p.bx_mT);
      hi_x = std::max(hi_x, p.bx_mT);
      lo_z = std::min(lo_z, p.bz_mT);
      hi_z = std::max(hi_z, p.bz_mT);
    }
    change.push_back((hi_x - lo_x) + (hi_z - lo_z));
  }
  for (std::size_t i = 1; i < change.size(); ++i) ok = ok && change[i] < change[i - 1];
  return {ok, fmt("worst extremum offset %.3g z0; signal change %.4g > %.4g > %.4g", worst, change[0], change[1],
                  change[2]) +
                  fmt(" > %.4g mT", change[3])};
}

Outcome ablation_property() {
  const auto recs = synth_dataset(SynthConfig{});
  const AblationReport r = ablate(recs, TrainConfig{});
  const double a = r.normal_only.test.accuracy, b = r.normal_and_shear.test.accuracy;
  const bool ok = recs.size() == 468 && b >= a + 0.05 && a >= 0.23 && b >= 0.23;
  return {ok, fmt("normal_only %.3f, normal_and_shear %.3f, gain %+.1f pp", a, b, 100 * (b - a)) + ", improved " +
                  std::to_string(r.classes_improved) + " classes"};
}

Outcome dataset_arithmetic() {
  SynthConfig sc;
  sc.users = 11;
  sc.blocks = 9;
  sc.reps_per_block = 3;
  const auto recs = synth_dataset(sc);
  std::array<std::size_t, kGestureClassCount> hist{};
  for (const auto& r : recs) ++hist[code(r.label)];
  bool ok = recs.size() == 3861;
  for (auto h : hist) ok = ok && h == 297;
  const DatasetSplit s = split_dataset(recs, 1);
  ok = ok && s.train.size() == 3081 && s.val.size() == 390 && s.test.size() == 390;
  for (const auto* part : {&s.train, &s.val, &s.test}) {
    std::set<std::uint32_t> users;
    for (auto id : *part) users.insert(recs[id].user_id);
    ok = ok && users.size() == 11;
  }
  return {ok, std::to_string(recs.size()) + " recordings, " + std::to_string(hist[0]) + " per class, split " +
                  std::to_string(s.train.size()) + "/" + std::to_string(s.val.size()) + "/" +
                  std::to_string(s.test.size())};
}

Outcome determinism() {
  RunConfig cfg;
  cfg.train.epochs = 2;
  auto run = [&](const fs::path& root) {
    CommandEnv env;
    env.log_level = LogLevel::Quiet;
    RunConfig c = cfg;
    env.out_dir = root / "synth";
    cmd_synth(c, env);
    c.paths.dataset = (root / "synth" / "dataset.bin").string();
    env.out_dir = root / "train";
    cmd_train(c, env);
    c.paths.checkpoint = (root / "train" / "model.tgkm").string();
    env.out_dir = root / "eval";
    cmd_eval(c, env);
  };
  const fs::path a = temp_dir("accept_det_a"), b = temp_dir("accept_det_b");
  run(a);
  run(b);
  bool ok = true;
  std::string differing;
  for (const char* f : {"synth/dataset.bin", "train/model.tgkm", "train/model.json", "train/history.csv",
                        "eval/report.json", "eval/confusion.csv", "eval/confusion.svg"}) {
    if (slurp(a / f) != slurp(b / f) || slurp(a / f).empty()) {
      ok = false;
      differing += std::string(" ") + f;
    }
  }
  return {ok, ok ? "dataset, checkpoint, manifest, history, report and confusion identical"
                 : "differs:" + differing};
}

Outcome memorization() {
  const auto all = synth_dataset(SynthConfig{});
  const std::vector<GestureRecording> toy(all.begin(), all.begin() + 64);
  LabeledTensor set = assemble_tensor(toy, AblationMode::NormalAndShear);
  apply_normalization(fit_normalization(set.inputs, AblationMode::NormalAndShear), set.inputs,
                      AblationMode::NormalAndShear);
  TrainConfig cfg;
  cfg.epochs = 50;
  // Validation on the training set itself tracks training accuracy per epoch.
  const TrainResult r = train(set, set, gesture_cnn_config(366), cfg);
  const double acc = evaluate(r.model, set).accuracy;
  return {acc > 0.90, fmt("train accuracy %.3f (best at epoch %.0f of 50)", acc, static_cast<double>(r.best_epoch))};
}

}  // namespace

int main(int argc, char** argv) {
  // Optional arguments select criteria by number.
  std::set<std::string> only(argv + 1, argv + argc);
  const std::vector<std::pair<const char*, std::function<Outcome()>>> criteria = {
      {"1 shape fidelity", shape_fidelity},
      {"2 gradient correctness", gradient_correctness},
      {"3 calibration exactness", calibration_exactness},
      {"4 dipole analytics", dipole_analytics},
      {"5 ablation property", ablation_property},
      {"6 dataset arithmetic", dataset_arithmetic},
      {"7 determinism", determinism},
      {"8 memorization sanity", memorization},
  };
  int failures = 0;
  for (const auto& [name, check] : criteria) {
    if (!only.empty() && !only.count(std::string(name).substr(0, 1))) continue;
    const auto t0 = std::chrono::steady_clock::now();
    Outcome o;
    try {
      o = check();
    } catch (const std::exception& e) {
      o = {false, std::string("exception: ") + e.what()};
    }
    const double secs = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
    std::printf("%s  %-24s %s [%.1f s]\n", o.pass ? "PASS" : "FAIL", name, o.detail.c_str(), secs);
    std::fflush(stdout);
    failures += !o.pass;
  }
  return failures == 0 ? 0 : 1;
}
