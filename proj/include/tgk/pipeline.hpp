#pragma once

#include <array>
#include <cstdint>
#include <functional>
#include <span>
#include <string>
#include <vector>

#include "tgk/gestures.hpp"
#include "tgk/nn.hpp"

namespace tgk {

enum class AblationMode { NormalOnly, NormalAndShear };

std::string_view ablation_mode_name(AblationMode m);
AblationMode ablation_mode_from_name(std::string_view name);
// 122 (z per frame) or 366 (x, y, z per frame).
std::size_t input_channels(AblationMode m);

struct LabeledTensor {
  Tensor inputs;  // (N, C, 5, 10)
  std::vector<std::size_t> labels;

  std::size_t count() const { return labels.size(); }
};

// Channels are frame-major, axis-minor: frame 0 (x, y, z), frame 1 (x, y, z), ...
// NormalOnly keeps only z of each frame. The phantom cell stays zero.
LabeledTensor assemble_tensor(std::span<const GestureRecording> recordings, AblationMode mode);
LabeledTensor assemble_tensor(std::span<const GestureRecording> recordings,
                              std::span<const std::uint64_t> ids, AblationMode mode);

struct SplitRatio {
  std::size_t train = 3081;
  std::size_t val = 390;
  std::size_t test = 390;
};

// Indices into the recording list.
struct DatasetSplit {
  std::vector<std::uint64_t> train;
  std::vector<std::uint64_t> val;
  std::vector<std::uint64_t> test;
};

// Global split sizes follow the ratio by largest remainder; each user's
// recordings are shuffled by seed and apportioned so that the per-user counts
// sum to the global sizes.
DatasetSplit split_dataset(std::span<const GestureRecording> recordings, std::uint64_t seed,
                           const SplitRatio& ratio = {});

// Per force axis mean/std over valid taxels, frames and recordings.
struct NormalizationStats {
  std::array<double, 3> mean{0.0, 0.0, 0.0};
  std::array<double, 3> stddev{1.0, 1.0, 1.0};
};

inline constexpr double kStdFloor = 1e-8;

NormalizationStats fit_normalization(const Tensor& inputs, AblationMode mode);
// Standardizes valid cells in place; phantom cells remain zero.
void apply_normalization(const NormalizationStats& stats, Tensor& inputs, AblationMode mode);

struct TrainConfig {
  std::size_t epochs = 60;
  std::size_t batch_size = 32;
  std::uint64_t seed = 1;
  AdamConfig adam{};
  double dropout_p = 0.5;
};

struct EpochRecord {
  std::size_t epoch = 0;
  double train_loss = 0.0;
  double val_accuracy = 0.0;

  friend bool operator==(const EpochRecord&, const EpochRecord&) = default;
};

struct TrainResult {
  CnnModel model;
  std::vector<EpochRecord> history;
  std::size_t best_epoch = 0;  // 1-based; 0 when no epoch ran
  double best_val_accuracy = 0.0;
};

using EpochCallback = std::function<void(const EpochRecord&)>;

// Mini-batch Adam on cross entropy. Keeps the parameters with the best
// validation accuracy (earliest on ties). Throws NumericalError on divergence.
TrainResult train(const LabeledTensor& train_set, const LabeledTensor& val_set,
                  const CnnConfig& architecture, const TrainConfig& config,
                  const EpochCallback& on_epoch = {});

struct ConfusionMatrix {
  std::array<std::array<std::uint64_t, kGestureClassCount>, kGestureClassCount> counts{};

  std::uint64_t total() const;
  std::uint64_t row_total(std::size_t true_class) const;
  double accuracy() const;
  // Mean of per-class recall over classes present in the set.
  double macro_accuracy() const;
  std::array<double, kGestureClassCount> per_class_accuracy() const;
  std::array<std::array<double, kGestureClassCount>, kGestureClassCount> rates() const;

  friend bool operator==(const ConfusionMatrix&, const ConfusionMatrix&) = default;
};

struct Evaluation {
  ConfusionMatrix confusion;
  double accuracy = 0.0;
  double macro_accuracy = 0.0;
  std::vector<std::size_t> predictions;
};

Evaluation evaluate(const CnnModel& model, const LabeledTensor& set);
Evaluation evaluate_predictions(std::span<const std::size_t> labels,
                                std::span<const std::size_t> predictions);

// Split, tensorize and normalize with training-set statistics.
struct PreparedData {
  DatasetSplit split;
  NormalizationStats stats;
  LabeledTensor train;
  LabeledTensor val;
  LabeledTensor test;
};

PreparedData prepare_data(std::span<const GestureRecording> recordings, AblationMode mode,
                          std::uint64_t split_seed, const SplitRatio& ratio = {});

struct ArmResult {
  AblationMode mode;
  TrainResult training;
  NormalizationStats stats;
  Evaluation test;
};

struct AblationReport {
  DatasetSplit split;
  ArmResult normal_only;
  ArmResult normal_and_shear;
  // shear arm minus normal arm, per class recall
  std::array<double, kGestureClassCount> per_class_delta{};
  std::size_t classes_improved = 0;
  std::size_t classes_worse = 0;
};

AblationReport ablate(std::span<const GestureRecording> recordings, const TrainConfig& config,
                      const SplitRatio& ratio = {}, const EpochCallback& on_epoch = {});

// Hardware-data results the synthetic study is compared against.
inline constexpr double kReferenceAccuracyNormalOnly = 0.66;
inline constexpr double kReferenceAccuracyNormalAndShear = 0.74;
inline constexpr std::size_t kReferenceClassesImproved = 11;

}  // namespace tgk
