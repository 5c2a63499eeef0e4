#include "tgk/pipeline.hpp"

#include <algorithm>
#include <cmath>
#include <functional>
#include <map>
#include <numeric>
#include <random>
#include <sstream>

#include "tgk/errors.hpp"
#include "tgk/random.hpp"

namespace tgk {
namespace {

constexpr std::size_t kPhantomCell = kGridCells - 1;
constexpr std::size_t kPlane = kGridCells;

std::size_t channel_axis(std::size_t channel, AblationMode mode) {
  return mode == AblationMode::NormalOnly ? 2 : channel % kAxes;
}

// Largest-remainder apportionment of `total` by `weights`; ties go to the lower index.
std::vector<std::size_t> apportion(std::size_t total, const std::vector<std::size_t>& weights) {
  const std::size_t wsum = std::accumulate(weights.begin(), weights.end(), std::size_t{0});
  std::vector<std::size_t> out(weights.size());
  std::vector<std::pair<std::size_t, std::size_t>> remainders;  // (remainder numerator, index)
  std::size_t assigned = 0;
  for (std::size_t i = 0; i < weights.size(); ++i) {
    out[i] = total * weights[i] / wsum;
    assigned += out[i];
    remainders.push_back({total * weights[i] % wsum, i});
  }
  std::stable_sort(remainders.begin(), remainders.end(),
                   [](const auto& a, const auto& b) { return a.first > b.first; });
  for (std::size_t k = 0; assigned < total; ++k, ++assigned) ++out[remainders[k].second];
  return out;
}

}  // namespace

std::string_view ablation_mode_name(AblationMode m) {
  return m == AblationMode::NormalOnly ? "normal_only" : "normal_and_shear";
}

AblationMode ablation_mode_from_name(std::string_view name) {
  if (name == "normal_only") return AblationMode::NormalOnly;
  if (name == "normal_and_shear") return AblationMode::NormalAndShear;
  throw ArgumentError("unknown ablation mode '" + std::string(name) +
                      "' (expected normal_only or normal_and_shear)");
}

std::size_t input_channels(AblationMode m) {
  return m == AblationMode::NormalOnly ? kFramesPerRecording : kFramesPerRecording * kAxes;
}

LabeledTensor assemble_tensor(std::span<const GestureRecording> recordings,
                              std::span<const std::uint64_t> ids, AblationMode mode) {
  const std::size_t channels = input_channels(mode);
  LabeledTensor out{Tensor({ids.size(), channels, kGridRows, kGridCols}), {}};
  out.labels.reserve(ids.size());
  for (std::size_t n = 0; n < ids.size(); ++n) {
    if (ids[n] >= recordings.size()) throw BoundsError("assemble_tensor: recording id out of range");
    const GestureRecording& rec = recordings[ids[n]];
    if (rec.frames.size() != kFramesPerRecording) {
      throw ShapeError("assemble_tensor: recording " + std::to_string(rec.recording_id) + " has " +
                       std::to_string(rec.frames.size()) + " frames, expected 122");
    }
    auto slab = out.inputs.slice(n);
    for (std::size_t f = 0; f < kFramesPerRecording; ++f) {
      const ForceImage img = to_grid(rec.frames[f]);
      if (mode == AblationMode::NormalOnly) {
        std::copy_n(img.begin() + 2 * kPlane, kPlane, slab.begin() + f * kPlane);
      } else {
        std::copy(img.begin(), img.end(), slab.begin() + f * kAxes * kPlane);
      }
    }
    out.labels.push_back(code(rec.label));
  }
  return out;
}

LabeledTensor assemble_tensor(std::span<const GestureRecording> recordings, AblationMode mode) {
  std::vector<std::uint64_t> ids(recordings.size());
  std::iota(ids.begin(), ids.end(), 0);
  return assemble_tensor(recordings, ids, mode);
}

DatasetSplit split_dataset(std::span<const GestureRecording> recordings, std::uint64_t seed,
                           const SplitRatio& ratio) {
  if (recordings.empty()) throw ArgumentError("split_dataset: empty dataset");
  const std::vector<std::size_t> weights{ratio.train, ratio.val, ratio.test};
  if (ratio.train + ratio.val + ratio.test == 0) throw ArgumentError("split_dataset: zero ratio");
  const std::size_t total = recordings.size();
  const auto targets = apportion(total, weights);
  const std::size_t wsum = ratio.train + ratio.val + ratio.test;

  std::map<std::uint32_t, std::vector<std::uint64_t>> by_user;
  for (std::size_t i = 0; i < recordings.size(); ++i) by_user[recordings[i].user_id].push_back(i);

  // Per-user floors, then hand out the remaining units by descending
  // fractional part while both the user and the split still need one.
  struct Candidate {
    std::size_t remainder;
    std::size_t user;
    std::size_t split;
  };
  std::vector<std::uint32_t> users;
  std::vector<std::array<std::size_t, 3>> alloc;
  std::vector<std::size_t> user_need;
  std::array<std::size_t, 3> split_need{targets[0], targets[1], targets[2]};
  std::vector<Candidate> candidates;
  for (const auto& [user, ids] : by_user) {
    const std::size_t u = users.size();
    users.push_back(user);
    std::array<std::size_t, 3> a{};
    std::size_t used = 0;
    for (std::size_t s = 0; s < 3; ++s) {
      a[s] = ids.size() * weights[s] / wsum;
      used += a[s];
      split_need[s] -= a[s];
      candidates.push_back({ids.size() * weights[s] % wsum, u, s});
    }
    alloc.push_back(a);
    user_need.push_back(ids.size() - used);
  }
  std::stable_sort(candidates.begin(), candidates.end(),
                   [](const Candidate& a, const Candidate& b) { return a.remainder > b.remainder; });
  for (const Candidate& c : candidates) {
    if (user_need[c.user] > 0 && split_need[c.split] > 0 && weights[c.split] > 0) {
      ++alloc[c.user][c.split];
      --user_need[c.user];
      --split_need[c.split];
    }
  }
  // Greedy can strand a user; reroute along alternating paths so every cell
  // stays at its floor or ceiling where possible.
  std::vector<std::array<bool, 3>> frac(users.size(), {false, false, false});
  std::vector<std::array<bool, 3>> extra(users.size(), {false, false, false});
  for (std::size_t u = 0; u < users.size(); ++u) {
    const std::size_t n = by_user[users[u]].size();
    for (std::size_t s = 0; s < 3; ++s) {
      frac[u][s] = weights[s] > 0 && n * weights[s] % wsum != 0;
      extra[u][s] = alloc[u][s] > n * weights[s] / wsum;
    }
  }
  const auto augment = [&](std::size_t start, bool any_cell) {
    std::vector<bool> seen_user(users.size(), false);
    std::array<bool, 3> seen_split{};
    std::vector<std::pair<std::size_t, std::size_t>> path;  // (user, split) cells along the path
    const std::function<bool(std::size_t)> visit = [&](std::size_t u) -> bool {
      seen_user[u] = true;
      for (std::size_t s = 0; s < 3; ++s) {
        if (seen_split[s] || extra[u][s] || weights[s] == 0 || !(frac[u][s] || any_cell)) continue;
        seen_split[s] = true;
        path.push_back({u, s});
        if (split_need[s] > 0) return true;
        for (std::size_t v = 0; v < users.size(); ++v) {
          if (!seen_user[v] && extra[v][s]) {
            path.push_back({v, s});
            if (visit(v)) return true;
            path.pop_back();
          }
        }
        path.pop_back();
      }
      return false;
    };
    if (!visit(start)) return false;
    // Path alternates add, remove, add, ... ending on an add.
    for (std::size_t i = 0; i < path.size(); ++i) {
      const auto [u, s] = path[i];
      if (i % 2 == 0) {
        extra[u][s] = true;
        ++alloc[u][s];
      } else {
        extra[u][s] = false;
        --alloc[u][s];
      }
    }
    --user_need[start];
    --split_need[path.back().second];
    return true;
  };
  for (std::size_t u = 0; u < users.size(); ++u) {
    while (user_need[u] > 0 && (augment(u, false) || augment(u, true))) {
    }
  }
  for (std::size_t u = 0; u < users.size(); ++u) {
    for (std::size_t s = 0; s < 3 && user_need[u] > 0; ++s) {
      while (user_need[u] > 0 && split_need[s] > 0) {
        ++alloc[u][s];
        --user_need[u];
        --split_need[s];
      }
    }
  }

  DatasetSplit split;
  std::array<std::vector<std::uint64_t>*, 3> outs{&split.train, &split.val, &split.test};
  for (std::size_t u = 0; u < users.size(); ++u) {
    std::vector<std::uint64_t> ids = by_user[users[u]];
    std::mt19937_64 rng(derive_seed(seed, {0x5b117, users[u]}));
    std::shuffle(ids.begin(), ids.end(), rng);
    std::size_t pos = 0;
    for (std::size_t s = 0; s < 3; ++s) {
      outs[s]->insert(outs[s]->end(), ids.begin() + static_cast<long>(pos),
                      ids.begin() + static_cast<long>(pos + alloc[u][s]));
      pos += alloc[u][s];
    }
  }
  for (auto* v : outs) std::sort(v->begin(), v->end());
  return split;
}

NormalizationStats fit_normalization(const Tensor& inputs, AblationMode mode) {
  if (inputs.rank() != 4 || inputs.dim(0) == 0) {
    throw ArgumentError("fit_normalization: need a non-empty (N, C, 5, 10) tensor");
  }
  const std::size_t n = inputs.dim(0), channels = inputs.dim(1);
  std::array<double, 3> sum{}, count{};
  for (std::size_t i = 0; i < n; ++i) {
    for (std::size_t c = 0; c < channels; ++c) {
      const double* plane = inputs.data.data() + (i * channels + c) * kPlane;
      const std::size_t axis = channel_axis(c, mode);
      for (std::size_t p = 0; p < kPlane; ++p) {
        if (p == kPhantomCell) continue;
        sum[axis] += plane[p];
        count[axis] += 1.0;
      }
    }
  }
  NormalizationStats stats;
  for (std::size_t a = 0; a < 3; ++a) stats.mean[a] = count[a] > 0 ? sum[a] / count[a] : 0.0;
  std::array<double, 3> sq{};
  for (std::size_t i = 0; i < n; ++i) {
    for (std::size_t c = 0; c < channels; ++c) {
      const double* plane = inputs.data.data() + (i * channels + c) * kPlane;
      const std::size_t axis = channel_axis(c, mode);
      for (std::size_t p = 0; p < kPlane; ++p) {
        if (p == kPhantomCell) continue;
        const double d = plane[p] - stats.mean[axis];
        sq[axis] += d * d;
      }
    }
  }
  for (std::size_t a = 0; a < 3; ++a) {
    stats.stddev[a] = count[a] > 0 ? std::max(std::sqrt(sq[a] / count[a]), kStdFloor) : 1.0;
  }
  return stats;
}

void apply_normalization(const NormalizationStats& stats, Tensor& inputs, AblationMode mode) {
  if (inputs.rank() != 4) throw ShapeError("apply_normalization: expected (N, C, 5, 10)");
  const std::size_t n = inputs.dim(0), channels = inputs.dim(1);
  if (channels != input_channels(mode)) {
    throw ShapeError("apply_normalization: " + std::to_string(channels) + " channels do not match " +
                     std::string(ablation_mode_name(mode)));
  }
  for (std::size_t i = 0; i < n; ++i) {
    for (std::size_t c = 0; c < channels; ++c) {
      double* plane = inputs.data.data() + (i * channels + c) * kPlane;
      const std::size_t axis = channel_axis(c, mode);
      const double mu = stats.mean[axis];
      const double inv = 1.0 / stats.stddev[axis];
      for (std::size_t p = 0; p < kPlane; ++p) {
        plane[p] = p == kPhantomCell ? 0.0 : (plane[p] - mu) * inv;
      }
    }
  }
}

// ---------------------------------------------------------------------------

namespace {

double accuracy_of(const CnnModel& model, const LabeledTensor& set, ForwardCache& cache) {
  if (set.count() == 0) return 0.0;
  std::size_t correct = 0;
  for (std::size_t i = 0; i < set.count(); ++i) {
    if (predict(model, set.inputs.slice(i), cache) == set.labels[i]) ++correct;
  }
  return static_cast<double>(correct) / static_cast<double>(set.count());
}

void check_set(const LabeledTensor& set, const CnnConfig& arch, const char* name) {
  if (set.count() == 0) return;
  if (set.inputs.rank() != 4 || set.inputs.dim(0) != set.count() ||
      set.inputs.size() / set.count() != arch.input_size()) {
    throw ShapeError(std::string(name) + " tensor " + shape_string(set.inputs.shape) +
                     " does not match the model input " + std::to_string(arch.in_channels) + "x" +
                     std::to_string(arch.height) + "x" + std::to_string(arch.width));
  }
}

}  // namespace

TrainResult train(const LabeledTensor& train_set, const LabeledTensor& val_set,
                  const CnnConfig& architecture, const TrainConfig& config,
                  const EpochCallback& on_epoch) {
  CnnConfig arch = architecture;
  arch.dropout_p = config.dropout_p;
  check_set(train_set, arch, "train");
  check_set(val_set, arch, "validation");
  if (config.batch_size == 0) throw ArgumentError("train: batch size must be >= 1");

  TrainResult result{CnnModel(arch), {}, 0, 0.0};
  CnnModel& model = result.model;
  model.initialize(derive_seed(config.seed, {0x1417}));
  if (config.epochs == 0 || train_set.count() == 0) {
    model.set_mode(Mode::Eval);
    return result;
  }

  AdamState adam(model.parameters().size(), config.adam);
  std::vector<double> grads(model.parameters().size());
  std::vector<double> best(model.parameters().begin(), model.parameters().end());
  double best_acc = -1.0;
  ForwardCache cache;
  std::vector<std::size_t> order(train_set.count());
  std::iota(order.begin(), order.end(), 0);

  for (std::size_t epoch = 1; epoch <= config.epochs; ++epoch) {
    model.set_mode(Mode::Train);
    std::mt19937_64 shuffle_rng(derive_seed(config.seed, {0x5bf1, epoch}));
    std::shuffle(order.begin(), order.end(), shuffle_rng);
    double loss_sum = 0.0;
    for (std::size_t start = 0; start < order.size(); start += config.batch_size) {
      const std::size_t end = std::min(start + config.batch_size, order.size());
      std::fill(grads.begin(), grads.end(), 0.0);
      for (std::size_t k = start; k < end; ++k) {
        const std::size_t i = order[k];
        forward(model, train_set.inputs.slice(i), cache, derive_seed(config.seed, {0xd509, epoch, i}));
        loss_sum += backward(model, cache, train_set.labels[i], grads);
      }
      const double scale = 1.0 / static_cast<double>(end - start);
      for (double& g : grads) g *= scale;
      if (!std::isfinite(loss_sum)) {
        std::ostringstream msg;
        msg << "training diverged at epoch " << epoch << ", batch starting at " << start
            << ": loss is " << loss_sum;
        throw NumericalError(msg.str());
      }
      adam_step(model.parameters(), grads, adam);
    }
    model.set_mode(Mode::Eval);
    EpochRecord rec{epoch, loss_sum / static_cast<double>(order.size()),
                    accuracy_of(model, val_set, cache)};
    result.history.push_back(rec);
    if (on_epoch) on_epoch(rec);
    if (rec.val_accuracy > best_acc) {
      best_acc = rec.val_accuracy;
      result.best_epoch = epoch;
      std::copy(model.parameters().begin(), model.parameters().end(), best.begin());
    }
  }
  std::copy(best.begin(), best.end(), model.parameters().begin());
  result.best_val_accuracy = best_acc;
  model.set_mode(Mode::Eval);
  return result;
}

// ---------------------------------------------------------------------------

std::uint64_t ConfusionMatrix::total() const {
  std::uint64_t t = 0;
  for (const auto& row : counts) t += std::accumulate(row.begin(), row.end(), std::uint64_t{0});
  return t;
}

std::uint64_t ConfusionMatrix::row_total(std::size_t c) const {
  return std::accumulate(counts[c].begin(), counts[c].end(), std::uint64_t{0});
}

double ConfusionMatrix::accuracy() const {
  const std::uint64_t t = total();
  if (t == 0) return 0.0;
  std::uint64_t trace = 0;
  for (std::size_t c = 0; c < kGestureClassCount; ++c) trace += counts[c][c];
  return static_cast<double>(trace) / static_cast<double>(t);
}

std::array<double, kGestureClassCount> ConfusionMatrix::per_class_accuracy() const {
  std::array<double, kGestureClassCount> acc{};
  for (std::size_t c = 0; c < kGestureClassCount; ++c) {
    const auto n = row_total(c);
    acc[c] = n ? static_cast<double>(counts[c][c]) / static_cast<double>(n) : 0.0;
  }
  return acc;
}

double ConfusionMatrix::macro_accuracy() const {
  const auto acc = per_class_accuracy();
  double sum = 0.0;
  std::size_t present = 0;
  for (std::size_t c = 0; c < kGestureClassCount; ++c) {
    if (row_total(c) == 0) continue;
    sum += acc[c];
    ++present;
  }
  return present ? sum / static_cast<double>(present) : 0.0;
}

std::array<std::array<double, kGestureClassCount>, kGestureClassCount> ConfusionMatrix::rates() const {
  std::array<std::array<double, kGestureClassCount>, kGestureClassCount> r{};
  for (std::size_t c = 0; c < kGestureClassCount; ++c) {
    const auto n = row_total(c);
    if (n == 0) continue;
    for (std::size_t p = 0; p < kGestureClassCount; ++p) {
      r[c][p] = static_cast<double>(counts[c][p]) / static_cast<double>(n);
    }
  }
  return r;
}

Evaluation evaluate_predictions(std::span<const std::size_t> labels,
                                std::span<const std::size_t> predictions) {
  if (labels.size() != predictions.size()) throw ShapeError("evaluate: label/prediction count mismatch");
  Evaluation e;
  for (std::size_t i = 0; i < labels.size(); ++i) {
    if (labels[i] >= kGestureClassCount || predictions[i] >= kGestureClassCount) {
      throw ArgumentError("evaluate: class index out of range");
    }
    ++e.confusion.counts[labels[i]][predictions[i]];
  }
  e.predictions.assign(predictions.begin(), predictions.end());
  e.accuracy = e.confusion.accuracy();
  e.macro_accuracy = e.confusion.macro_accuracy();
  return e;
}

Evaluation evaluate(const CnnModel& model, const LabeledTensor& set) {
  check_set(set, model.config(), "evaluation");
  if (model.config().classes != kGestureClassCount) {
    throw ShapeError("evaluate: model does not output 13 classes");
  }
  CnnModel eval_model = model;
  eval_model.set_mode(Mode::Eval);
  ForwardCache cache;
  std::vector<std::size_t> preds(set.count());
  for (std::size_t i = 0; i < set.count(); ++i) preds[i] = predict(eval_model, set.inputs.slice(i), cache);
  return evaluate_predictions(set.labels, preds);
}

PreparedData prepare_data(std::span<const GestureRecording> recordings, AblationMode mode,
                          std::uint64_t split_seed, const SplitRatio& ratio) {
  PreparedData d;
  d.split = split_dataset(recordings, split_seed, ratio);
  d.train = assemble_tensor(recordings, d.split.train, mode);
  d.val = assemble_tensor(recordings, d.split.val, mode);
  d.test = assemble_tensor(recordings, d.split.test, mode);
  d.stats = fit_normalization(d.train.inputs, mode);
  apply_normalization(d.stats, d.train.inputs, mode);
  apply_normalization(d.stats, d.val.inputs, mode);
  apply_normalization(d.stats, d.test.inputs, mode);
  return d;
}

AblationReport ablate(std::span<const GestureRecording> recordings, const TrainConfig& config,
                      const SplitRatio& ratio, const EpochCallback& on_epoch) {
  auto run_arm = [&](AblationMode mode, DatasetSplit& split_out) {
    PreparedData data = prepare_data(recordings, mode, config.seed, ratio);
    split_out = data.split;
    TrainResult tr = train(data.train, data.val, gesture_cnn_config(input_channels(mode)), config, on_epoch);
    Evaluation ev = evaluate(tr.model, data.test);
    return ArmResult{mode, std::move(tr), data.stats, std::move(ev)};
  };
  DatasetSplit split_a, split_b;
  ArmResult normal = run_arm(AblationMode::NormalOnly, split_a);
  ArmResult shear = run_arm(AblationMode::NormalAndShear, split_b);
  AblationReport report{split_a, std::move(normal), std::move(shear), {}, 0, 0};
  const auto a = report.normal_only.test.confusion.per_class_accuracy();
  const auto b = report.normal_and_shear.test.confusion.per_class_accuracy();
  for (std::size_t c = 0; c < kGestureClassCount; ++c) {
    report.per_class_delta[c] = b[c] - a[c];
    if (b[c] > a[c]) ++report.classes_improved;
    if (b[c] < a[c]) ++report.classes_worse;
  }
  return report;
}

}  // namespace tgk
