#pragma once

#include <cstddef>
#include <cstdint>
#include <span>
#include <string>
#include <vector>

namespace tgk {

// Dense row-major float64 tensor.
struct Tensor {
  std::vector<std::size_t> shape;
  std::vector<double> data;

  Tensor() = default;
  explicit Tensor(std::vector<std::size_t> s, double fill = 0.0);
  Tensor(std::vector<std::size_t> s, std::vector<double> values);

  std::size_t size() const { return data.size(); }
  std::size_t rank() const { return shape.size(); }
  std::size_t dim(std::size_t i) const { return shape.at(i); }
  std::span<double> span() { return data; }
  std::span<const double> span() const { return data; }
  // Contiguous slab of the leading index.
  std::span<double> slice(std::size_t i);
  std::span<const double> slice(std::size_t i) const;

  bool all_finite() const;
  // Throws NumericalError naming `where` if any entry is NaN or infinite.
  void check_finite(const std::string& where) const;

  friend bool operator==(const Tensor&, const Tensor&) = default;
};

std::size_t shape_product(const std::vector<std::size_t>& shape);
std::string shape_string(const std::vector<std::size_t>& shape);

// ---------------------------------------------------------------------------
// Layers on single samples. Spatial convolutions use a 3x3 kernel, stride 1,
// zero padding 1. Pooling is 2x2 with stride 1, so H x W -> (H-1) x (W-1).

// input (C_in, H, W), kernel (C_out, C_in, 3, 3), bias (C_out) -> (C_out, H, W)
Tensor conv2d(const Tensor& input, const Tensor& kernel, const Tensor& bias);

struct Conv2dGrads {
  Tensor input;
  Tensor kernel;
  Tensor bias;
};
Conv2dGrads conv2d_backward(const Tensor& input, const Tensor& kernel, const Tensor& grad_out);

Tensor maxpool2(const Tensor& input);
Tensor maxpool2_backward(const Tensor& input, const Tensor& grad_out);

Tensor relu(const Tensor& input);
Tensor relu_backward(const Tensor& input, const Tensor& grad_out);

enum class Mode { Train, Eval };

// Inverted dropout. In Eval mode, or with p == 0, the input is returned unchanged.
Tensor dropout(const Tensor& input, double p, Mode mode, std::uint64_t seed);
// Multiplicative mask (0 or 1/(1-p)) used by dropout() for the same arguments.
std::vector<double> dropout_mask(std::size_t n, double p, Mode mode, std::uint64_t seed);

// input (N_in), weights (N_out, N_in), bias (N_out) -> (N_out)
Tensor linear(const Tensor& input, const Tensor& weights, const Tensor& bias);

struct LinearGrads {
  Tensor input;
  Tensor weights;
  Tensor bias;
};
LinearGrads linear_backward(const Tensor& input, const Tensor& weights, const Tensor& grad_out);

struct LossAndGrad {
  double loss = 0.0;
  std::vector<double> grad;  // dloss/dlogits
};
// Stable log-sum-exp cross entropy; gradient is softmax - one_hot(label).
LossAndGrad softmax_cross_entropy(std::span<const double> logits, std::size_t label);
std::vector<double> softmax(std::span<const double> logits);

// ---------------------------------------------------------------------------
// The classifier: conv3x3(C_in -> C_conv) -> ReLU -> dropout -> maxpool2 ->
// flatten -> fc(hidden) -> ReLU -> fc(classes).

struct CnnConfig {
  std::size_t in_channels = 366;
  std::size_t conv_channels = 122;
  std::size_t hidden = 100;
  std::size_t classes = 13;
  std::size_t height = 5;
  std::size_t width = 10;
  double dropout_p = 0.5;

  std::size_t pooled_features() const { return conv_channels * (height - 1) * (width - 1); }
  std::size_t input_size() const { return in_channels * height * width; }
  std::size_t parameter_count() const;
  void validate() const;

  friend bool operator==(const CnnConfig&, const CnnConfig&) = default;
};

// Architecture used for the gesture classifier; only 122 or 366 input channels.
CnnConfig gesture_cnn_config(std::size_t in_channels);

// Flat parameter buffer with views in declared order:
// conv kernel, conv bias, fc1 weights, fc1 bias, fc2 weights, fc2 bias.
struct ParameterLayout {
  std::size_t conv_w, conv_b, fc1_w, fc1_b, fc2_w, fc2_b, total;
  explicit ParameterLayout(const CnnConfig& c);
};

class CnnModel {
 public:
  explicit CnnModel(const CnnConfig& config);

  const CnnConfig& config() const { return config_; }
  const ParameterLayout& layout() const { return layout_; }
  Mode mode() const { return mode_; }
  void set_mode(Mode m) { mode_ = m; }

  std::span<double> parameters() { return params_; }
  std::span<const double> parameters() const { return params_; }

  std::span<double> conv_kernel() { return view(layout_.conv_w, layout_.conv_b); }
  std::span<double> conv_bias() { return view(layout_.conv_b, layout_.fc1_w); }
  std::span<double> fc1_weights() { return view(layout_.fc1_w, layout_.fc1_b); }
  std::span<double> fc1_bias() { return view(layout_.fc1_b, layout_.fc2_w); }
  std::span<double> fc2_weights() { return view(layout_.fc2_w, layout_.fc2_b); }
  std::span<double> fc2_bias() { return view(layout_.fc2_b, layout_.total); }

  // Kaiming-uniform (fan-in) weights, zero biases.
  void initialize(std::uint64_t seed);

 private:
  std::span<double> view(std::size_t begin, std::size_t end) {
    return std::span<double>(params_).subspan(begin, end - begin);
  }
  CnnConfig config_;
  ParameterLayout layout_;
  std::vector<double> params_;
  Mode mode_ = Mode::Train;
};

// Activations recorded by forward() and consumed by backward().
struct ForwardCache {
  std::vector<double> columns;    // (C_in*9, H*W) patch matrix
  std::vector<double> columns_t;  // its transpose
  std::vector<double> conv_pre;   // (C_conv, H, W)
  std::vector<double> mask;       // dropout multipliers
  std::vector<double> dropped;    // after ReLU and dropout
  std::vector<std::uint32_t> pool_argmax;
  std::vector<double> pooled;
  std::vector<double> fc1_pre;
  std::vector<double> fc1_out;
  std::vector<double> logits;
  bool valid = false;
};

// Runs one sample. In Train mode the dropout mask is drawn from `dropout_seed`.
std::span<const double> forward(const CnnModel& model, std::span<const double> input,
                                ForwardCache& cache, std::uint64_t dropout_seed = 0);

// Adds dloss/dparams for the cached sample into `grads`; returns the loss.
// Input gradients are not produced. Throws ArgumentError without a cached forward.
double backward(const CnnModel& model, const ForwardCache& cache, std::size_t label,
                std::span<double> grads);

// Eval-mode forward and argmax (ties to the lowest class index).
std::size_t predict(const CnnModel& model, std::span<const double> input, ForwardCache& cache);
std::size_t argmax(std::span<const double> values);

// ---------------------------------------------------------------------------

struct AdamConfig {
  double learning_rate = 1e-4;
  double beta1 = 0.9;
  double beta2 = 0.999;
  double epsilon = 1e-8;
};

struct AdamState {
  AdamConfig config;
  std::uint64_t step = 0;
  std::vector<double> first_moment;
  std::vector<double> second_moment;

  AdamState(std::size_t parameter_count, const AdamConfig& cfg = {});
};

// Bias-corrected Adam update in place.
void adam_step(std::span<double> params, std::span<const double> grads, AdamState& state);

}  // namespace tgk
