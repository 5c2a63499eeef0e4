#include "tgk/nn.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <random>
#include <sstream>

#include "tgk/errors.hpp"
#include "tgk/random.hpp"

namespace tgk {

std::size_t shape_product(const std::vector<std::size_t>& shape) {
  std::size_t n = 1;
  for (auto d : shape) n *= d;
  return n;
}

std::string shape_string(const std::vector<std::size_t>& shape) {
  std::ostringstream out;
  for (std::size_t i = 0; i < shape.size(); ++i) out << (i ? "x" : "") << shape[i];
  return out.str();
}

Tensor::Tensor(std::vector<std::size_t> s, double fill)
    : shape(std::move(s)), data(shape_product(shape), fill) {}

Tensor::Tensor(std::vector<std::size_t> s, std::vector<double> values)
    : shape(std::move(s)), data(std::move(values)) {
  if (data.size() != shape_product(shape)) {
    throw ShapeError("Tensor: " + std::to_string(data.size()) + " values for shape " +
                     shape_string(shape));
  }
}

std::span<double> Tensor::slice(std::size_t i) {
  const std::size_t stride = shape.empty() ? 0 : size() / shape[0];
  if (shape.empty() || i >= shape[0]) throw BoundsError("Tensor::slice out of range");
  return std::span<double>(data).subspan(i * stride, stride);
}

std::span<const double> Tensor::slice(std::size_t i) const {
  const std::size_t stride = shape.empty() ? 0 : size() / shape[0];
  if (shape.empty() || i >= shape[0]) throw BoundsError("Tensor::slice out of range");
  return std::span<const double>(data).subspan(i * stride, stride);
}

bool Tensor::all_finite() const {
  return std::all_of(data.begin(), data.end(), [](double v) { return std::isfinite(v); });
}

void Tensor::check_finite(const std::string& where) const {
  if (!all_finite()) throw NumericalError("non-finite value in " + where);
}

// ---------------------------------------------------------------------------
// Kernels

namespace {

struct ConvDims {
  std::size_t c_in, c_out, h, w;
  std::size_t hw() const { return h * w; }
  std::size_t patch() const { return c_in * 9; }
};

// Transposed patch matrix: row p holds the zero-padded 3x3 neighbourhood of
// pixel p for every input channel, in (channel, ky, kx) order.
void im2col_t(std::span<const double> input, const ConvDims& d, std::span<double> cols) {
  const std::size_t k = d.patch();
  for (std::size_t y = 0; y < d.h; ++y) {
    for (std::size_t x = 0; x < d.w; ++x) {
      double* row = cols.data() + (y * d.w + x) * k;
      for (std::size_t c = 0; c < d.c_in; ++c) {
        const double* plane = input.data() + c * d.hw();
        for (int ky = -1; ky <= 1; ++ky) {
          const long yy = static_cast<long>(y) + ky;
          for (int kx = -1; kx <= 1; ++kx) {
            const long xx = static_cast<long>(x) + kx;
            const bool inside = yy >= 0 && yy < static_cast<long>(d.h) && xx >= 0 &&
                                xx < static_cast<long>(d.w);
            *row++ = inside ? plane[yy * static_cast<long>(d.w) + xx] : 0.0;
          }
        }
      }
    }
  }
}

void transpose(std::span<const double> src, std::size_t rows, std::size_t cols,
               std::span<double> dst) {
  for (std::size_t r = 0; r < rows; ++r) {
    for (std::size_t c = 0; c < cols; ++c) dst[c * rows + r] = src[r * cols + c];
  }
}

// out[o][:] = bias[o] + sum_j kernel[o][j] * cols[j][:], cols being (C_in*9, H*W).
void conv_forward(std::span<const double> cols, std::span<const double> kernel,
                  std::span<const double> bias, const ConvDims& d, std::span<double> out) {
  const std::size_t k = d.patch();
  const std::size_t hw = d.hw();
  for (std::size_t o = 0; o < d.c_out; ++o) {
    const double* wrow = kernel.data() + o * k;
    double* orow = out.data() + o * hw;
    std::fill(orow, orow + hw, bias[o]);
    for (std::size_t j = 0; j < k; ++j) {
      const double wv = wrow[j];
      const double* crow = cols.data() + j * hw;
      for (std::size_t p = 0; p < hw; ++p) orow[p] += wv * crow[p];
    }
  }
}

// dkernel[o][:] += sum_p grad[o][p] * cols_t[p][:];  dbias[o] += sum_p grad[o][p]
void conv_backward_params(std::span<const double> cols_t, std::span<const double> grad,
                          const ConvDims& d, std::span<double> dkernel, std::span<double> dbias) {
  const std::size_t k = d.patch();
  const std::size_t hw = d.hw();
  for (std::size_t o = 0; o < d.c_out; ++o) {
    double* drow = dkernel.data() + o * k;
    double bsum = 0.0;
    for (std::size_t p = 0; p < hw; ++p) {
      const double g = grad[o * hw + p];
      bsum += g;
      if (g == 0.0) continue;
      const double* crow = cols_t.data() + p * k;
      for (std::size_t j = 0; j < k; ++j) drow[j] += g * crow[j];
    }
    dbias[o] += bsum;
  }
}

void conv_backward_input(std::span<const double> kernel, std::span<const double> grad,
                         const ConvDims& d, std::span<double> dinput) {
  std::fill(dinput.begin(), dinput.end(), 0.0);
  for (std::size_t o = 0; o < d.c_out; ++o) {
    for (std::size_t y = 0; y < d.h; ++y) {
      for (std::size_t x = 0; x < d.w; ++x) {
        const double g = grad[o * d.hw() + y * d.w + x];
        if (g == 0.0) continue;
        for (std::size_t c = 0; c < d.c_in; ++c) {
          const double* wk = kernel.data() + (o * d.c_in + c) * 9;
          for (int ky = -1; ky <= 1; ++ky) {
            const long yy = static_cast<long>(y) + ky;
            if (yy < 0 || yy >= static_cast<long>(d.h)) continue;
            for (int kx = -1; kx <= 1; ++kx) {
              const long xx = static_cast<long>(x) + kx;
              if (xx < 0 || xx >= static_cast<long>(d.w)) continue;
              dinput[c * d.hw() + static_cast<std::size_t>(yy) * d.w + static_cast<std::size_t>(xx)] +=
                  g * wk[(ky + 1) * 3 + (kx + 1)];
            }
          }
        }
      }
    }
  }
}

void pool_forward(std::span<const double> in, std::size_t c, std::size_t h, std::size_t w,
                  std::span<double> out, std::span<std::uint32_t> argmax_out) {
  const std::size_t oh = h - 1, ow = w - 1;
  for (std::size_t ch = 0; ch < c; ++ch) {
    const double* plane = in.data() + ch * h * w;
    for (std::size_t y = 0; y < oh; ++y) {
      for (std::size_t x = 0; x < ow; ++x) {
        // First maximum in (y, x), (y, x+1), (y+1, x), (y+1, x+1) order.
        std::size_t best = y * w + x;
        for (std::size_t cand : {y * w + x + 1, (y + 1) * w + x, (y + 1) * w + x + 1}) {
          if (plane[cand] > plane[best]) best = cand;
        }
        const std::size_t o = ch * oh * ow + y * ow + x;
        out[o] = plane[best];
        argmax_out[o] = static_cast<std::uint32_t>(ch * h * w + best);
      }
    }
  }
}

void require_shape(const Tensor& t, std::size_t rank, const char* what) {
  if (t.rank() != rank) {
    throw ShapeError(std::string(what) + ": expected rank " + std::to_string(rank) + ", got " +
                     shape_string(t.shape));
  }
}

ConvDims conv_dims(const Tensor& input, const Tensor& kernel) {
  require_shape(input, 3, "conv2d input");
  require_shape(kernel, 4, "conv2d kernel");
  if (kernel.dim(2) != 3 || kernel.dim(3) != 3) throw ShapeError("conv2d: kernel must be 3x3");
  if (kernel.dim(1) != input.dim(0)) {
    throw ShapeError("conv2d: input has " + std::to_string(input.dim(0)) +
                     " channels, kernel expects " + std::to_string(kernel.dim(1)));
  }
  return {input.dim(0), kernel.dim(0), input.dim(1), input.dim(2)};
}

}  // namespace

// ---------------------------------------------------------------------------
// Tensor-level layers

Tensor conv2d(const Tensor& input, const Tensor& kernel, const Tensor& bias) {
  const ConvDims d = conv_dims(input, kernel);
  if (bias.size() != d.c_out) throw ShapeError("conv2d: bias length must equal output channels");
  std::vector<double> cols_t(d.hw() * d.patch());
  std::vector<double> cols(cols_t.size());
  im2col_t(input.span(), d, cols_t);
  transpose(cols_t, d.hw(), d.patch(), cols);
  Tensor out({d.c_out, d.h, d.w});
  conv_forward(cols, kernel.span(), bias.span(), d, out.span());
  return out;
}

Conv2dGrads conv2d_backward(const Tensor& input, const Tensor& kernel, const Tensor& grad_out) {
  const ConvDims d = conv_dims(input, kernel);
  if (grad_out.shape != std::vector<std::size_t>{d.c_out, d.h, d.w}) {
    throw ShapeError("conv2d_backward: grad shape " + shape_string(grad_out.shape));
  }
  std::vector<double> cols(d.hw() * d.patch());
  im2col_t(input.span(), d, cols);
  Conv2dGrads g{Tensor(input.shape), Tensor(kernel.shape), Tensor({d.c_out})};
  conv_backward_params(cols, grad_out.span(), d, g.kernel.span(), g.bias.span());
  conv_backward_input(kernel.span(), grad_out.span(), d, g.input.span());
  return g;
}

Tensor maxpool2(const Tensor& input) {
  require_shape(input, 3, "maxpool2");
  const std::size_t c = input.dim(0), h = input.dim(1), w = input.dim(2);
  if (h < 2 || w < 2) throw ShapeError("maxpool2: spatial dims must be >= 2");
  Tensor out({c, h - 1, w - 1});
  std::vector<std::uint32_t> idx(out.size());
  pool_forward(input.span(), c, h, w, out.span(), idx);
  return out;
}

Tensor maxpool2_backward(const Tensor& input, const Tensor& grad_out) {
  require_shape(input, 3, "maxpool2_backward");
  const std::size_t c = input.dim(0), h = input.dim(1), w = input.dim(2);
  if (grad_out.shape != std::vector<std::size_t>{c, h - 1, w - 1}) {
    throw ShapeError("maxpool2_backward: grad shape " + shape_string(grad_out.shape));
  }
  std::vector<double> pooled(grad_out.size());
  std::vector<std::uint32_t> idx(grad_out.size());
  pool_forward(input.span(), c, h, w, pooled, idx);
  Tensor dinput(input.shape);
  for (std::size_t i = 0; i < idx.size(); ++i) dinput.data[idx[i]] += grad_out.data[i];
  return dinput;
}

Tensor relu(const Tensor& input) {
  Tensor out = input;
  for (double& v : out.data) v = std::max(v, 0.0);
  return out;
}

Tensor relu_backward(const Tensor& input, const Tensor& grad_out) {
  if (input.shape != grad_out.shape) throw ShapeError("relu_backward: shape mismatch");
  Tensor g = grad_out;
  for (std::size_t i = 0; i < g.size(); ++i) {
    if (!(input.data[i] > 0.0)) g.data[i] = 0.0;
  }
  return g;
}

std::vector<double> dropout_mask(std::size_t n, double p, Mode mode, std::uint64_t seed) {
  if (p < 0.0 || p >= 1.0) throw ArgumentError("dropout: p must be in [0, 1)");
  std::vector<double> mask(n, 1.0);
  if (mode == Mode::Eval || p == 0.0) return mask;
  std::mt19937_64 rng(mix64(seed));
  std::uniform_real_distribution<double> u(0.0, 1.0);
  const double keep_scale = 1.0 / (1.0 - p);
  for (double& m : mask) m = u(rng) < p ? 0.0 : keep_scale;
  return mask;
}

Tensor dropout(const Tensor& input, double p, Mode mode, std::uint64_t seed) {
  const auto mask = dropout_mask(input.size(), p, mode, seed);
  Tensor out = input;
  for (std::size_t i = 0; i < out.size(); ++i) out.data[i] *= mask[i];
  return out;
}

Tensor linear(const Tensor& input, const Tensor& weights, const Tensor& bias) {
  require_shape(weights, 2, "linear weights");
  const std::size_t n_out = weights.dim(0), n_in = weights.dim(1);
  if (input.size() != n_in || bias.size() != n_out) {
    throw ShapeError("linear: input " + shape_string(input.shape) + ", weights " +
                     shape_string(weights.shape) + ", bias " + shape_string(bias.shape));
  }
  Tensor out({n_out});
  for (std::size_t o = 0; o < n_out; ++o) {
    double acc = bias.data[o];
    const double* row = weights.data.data() + o * n_in;
    for (std::size_t i = 0; i < n_in; ++i) acc += row[i] * input.data[i];
    out.data[o] = acc;
  }
  return out;
}

LinearGrads linear_backward(const Tensor& input, const Tensor& weights, const Tensor& grad_out) {
  require_shape(weights, 2, "linear weights");
  const std::size_t n_out = weights.dim(0), n_in = weights.dim(1);
  if (input.size() != n_in || grad_out.size() != n_out) {
    throw ShapeError("linear_backward: shape mismatch");
  }
  LinearGrads g{Tensor(input.shape), Tensor(weights.shape), Tensor({n_out})};
  for (std::size_t o = 0; o < n_out; ++o) {
    const double go = grad_out.data[o];
    g.bias.data[o] = go;
    for (std::size_t i = 0; i < n_in; ++i) {
      g.weights.data[o * n_in + i] = go * input.data[i];
      g.input.data[i] += go * weights.data[o * n_in + i];
    }
  }
  return g;
}

std::vector<double> softmax(std::span<const double> logits) {
  const double m = *std::max_element(logits.begin(), logits.end());
  std::vector<double> p(logits.size());
  double z = 0.0;
  for (std::size_t i = 0; i < logits.size(); ++i) {
    p[i] = std::exp(logits[i] - m);
    z += p[i];
  }
  for (double& v : p) v /= z;
  return p;
}

LossAndGrad softmax_cross_entropy(std::span<const double> logits, std::size_t label) {
  if (label >= logits.size()) {
    throw ArgumentError("softmax_cross_entropy: label " + std::to_string(label) +
                        " out of range for " + std::to_string(logits.size()) + " classes");
  }
  for (double v : logits) {
    if (!std::isfinite(v)) throw NumericalError("softmax_cross_entropy: non-finite logit");
  }
  const double m = *std::max_element(logits.begin(), logits.end());
  double z = 0.0;
  for (double v : logits) z += std::exp(v - m);
  const double log_z = m + std::log(z);
  LossAndGrad out;
  out.loss = log_z - logits[label];
  out.grad.resize(logits.size());
  for (std::size_t i = 0; i < logits.size(); ++i) out.grad[i] = std::exp(logits[i] - log_z);
  out.grad[label] -= 1.0;
  return out;
}

// ---------------------------------------------------------------------------
// Model

std::size_t CnnConfig::parameter_count() const { return ParameterLayout(*this).total; }

void CnnConfig::validate() const {
  if (in_channels == 0 || conv_channels == 0 || hidden == 0 || classes == 0) {
    throw ArgumentError("CnnConfig: layer sizes must be positive");
  }
  if (height < 2 || width < 2) throw ArgumentError("CnnConfig: spatial dims must be >= 2");
  if (dropout_p < 0.0 || dropout_p >= 1.0) throw ArgumentError("CnnConfig: dropout must be in [0, 1)");
}

CnnConfig gesture_cnn_config(std::size_t in_channels) {
  if (in_channels != 122 && in_channels != 366) {
    throw ArgumentError("gesture CNN takes 122 or 366 input channels, got " +
                        std::to_string(in_channels));
  }
  CnnConfig c;
  c.in_channels = in_channels;
  return c;
}

ParameterLayout::ParameterLayout(const CnnConfig& c) {
  conv_w = 0;
  conv_b = conv_w + c.conv_channels * c.in_channels * 9;
  fc1_w = conv_b + c.conv_channels;
  fc1_b = fc1_w + c.hidden * c.pooled_features();
  fc2_w = fc1_b + c.hidden;
  fc2_b = fc2_w + c.classes * c.hidden;
  total = fc2_b + c.classes;
}

CnnModel::CnnModel(const CnnConfig& config)
    : config_(config), layout_(config), params_(layout_.total, 0.0) {
  config_.validate();
}

void CnnModel::initialize(std::uint64_t seed) {
  std::mt19937_64 rng(mix64(seed));
  auto fill = [&rng](std::span<double> w, std::size_t fan_in) {
    const double bound = std::sqrt(6.0 / static_cast<double>(fan_in));
    std::uniform_real_distribution<double> u(-bound, bound);
    for (double& v : w) v = u(rng);
  };
  fill(conv_kernel(), config_.in_channels * 9);
  fill(fc1_weights(), config_.pooled_features());
  fill(fc2_weights(), config_.hidden);
  for (auto b : {conv_bias(), fc1_bias(), fc2_bias()}) std::fill(b.begin(), b.end(), 0.0);
}

std::span<const double> forward(const CnnModel& model, std::span<const double> input,
                                ForwardCache& cache, std::uint64_t dropout_seed) {
  const CnnConfig& c = model.config();
  if (input.size() != c.input_size()) {
    throw ShapeError("forward: input has " + std::to_string(input.size()) + " values, model expects " +
                     std::to_string(c.input_size()) + " (" + std::to_string(c.in_channels) + "x" +
                     std::to_string(c.height) + "x" + std::to_string(c.width) + ")");
  }
  const ParameterLayout& L = model.layout();
  const auto params = model.parameters();
  const ConvDims d{c.in_channels, c.conv_channels, c.height, c.width};
  const std::size_t conv_size = c.conv_channels * d.hw();
  const std::size_t pooled = c.pooled_features();

  cache.valid = false;
  cache.columns_t.resize(d.hw() * d.patch());
  cache.columns.resize(d.hw() * d.patch());
  cache.conv_pre.resize(conv_size);
  cache.dropped.resize(conv_size);
  cache.pool_argmax.resize(pooled);
  cache.pooled.resize(pooled);
  cache.fc1_pre.resize(c.hidden);
  cache.fc1_out.resize(c.hidden);
  cache.logits.resize(c.classes);

  im2col_t(input, d, cache.columns_t);
  transpose(cache.columns_t, d.hw(), d.patch(), cache.columns);
  conv_forward(cache.columns, params.subspan(L.conv_w, L.conv_b - L.conv_w),
               params.subspan(L.conv_b, c.conv_channels), d, cache.conv_pre);
  cache.mask = dropout_mask(conv_size, c.dropout_p, model.mode(), dropout_seed);
  for (std::size_t i = 0; i < conv_size; ++i) {
    cache.dropped[i] = std::max(cache.conv_pre[i], 0.0) * cache.mask[i];
  }
  pool_forward(cache.dropped, c.conv_channels, c.height, c.width, cache.pooled, cache.pool_argmax);

  const double* w1 = params.data() + L.fc1_w;
  const double* b1 = params.data() + L.fc1_b;
  for (std::size_t o = 0; o < c.hidden; ++o) {
    const double* row = w1 + o * pooled;
    double acc = 0.0;
    for (std::size_t i = 0; i < pooled; ++i) acc += row[i] * cache.pooled[i];
    cache.fc1_pre[o] = b1[o] + acc;
    cache.fc1_out[o] = std::max(cache.fc1_pre[o], 0.0);
  }
  const double* w2 = params.data() + L.fc2_w;
  const double* b2 = params.data() + L.fc2_b;
  for (std::size_t o = 0; o < c.classes; ++o) {
    double acc = b2[o];
    for (std::size_t i = 0; i < c.hidden; ++i) acc += w2[o * c.hidden + i] * cache.fc1_out[i];
    cache.logits[o] = acc;
  }
  cache.valid = true;
  return cache.logits;
}

double backward(const CnnModel& model, const ForwardCache& cache, std::size_t label,
                std::span<double> grads) {
  if (!cache.valid) throw ArgumentError("backward: no cached forward pass");
  const CnnConfig& c = model.config();
  const ParameterLayout& L = model.layout();
  if (grads.size() != L.total) throw ShapeError("backward: gradient buffer size mismatch");
  const auto params = model.parameters();
  const std::size_t pooled = c.pooled_features();

  const LossAndGrad lg = softmax_cross_entropy(cache.logits, label);

  // fc2
  std::vector<double> d_hidden(c.hidden, 0.0);
  for (std::size_t o = 0; o < c.classes; ++o) {
    const double g = lg.grad[o];
    grads[L.fc2_b + o] += g;
    double* gw = grads.data() + L.fc2_w + o * c.hidden;
    const double* w = params.data() + L.fc2_w + o * c.hidden;
    for (std::size_t i = 0; i < c.hidden; ++i) {
      gw[i] += g * cache.fc1_out[i];
      d_hidden[i] += g * w[i];
    }
  }
  // ReLU + fc1
  std::vector<double> d_pooled(pooled, 0.0);
  for (std::size_t o = 0; o < c.hidden; ++o) {
    if (!(cache.fc1_pre[o] > 0.0)) continue;
    const double g = d_hidden[o];
    grads[L.fc1_b + o] += g;
    double* gw = grads.data() + L.fc1_w + o * pooled;
    const double* w = params.data() + L.fc1_w + o * pooled;
    for (std::size_t i = 0; i < pooled; ++i) {
      gw[i] += g * cache.pooled[i];
      d_pooled[i] += g * w[i];
    }
  }
  // pool -> dropout -> ReLU
  std::vector<double> d_conv(c.conv_channels * c.height * c.width, 0.0);
  for (std::size_t i = 0; i < pooled; ++i) d_conv[cache.pool_argmax[i]] += d_pooled[i];
  for (std::size_t i = 0; i < d_conv.size(); ++i) {
    d_conv[i] = cache.conv_pre[i] > 0.0 ? d_conv[i] * cache.mask[i] : 0.0;
  }
  const ConvDims d{c.in_channels, c.conv_channels, c.height, c.width};
  conv_backward_params(cache.columns_t, d_conv, d, grads.subspan(L.conv_w, L.conv_b - L.conv_w),
                       grads.subspan(L.conv_b, c.conv_channels));
  return lg.loss;
}

std::size_t argmax(std::span<const double> values) {
  std::size_t best = 0;
  for (std::size_t i = 1; i < values.size(); ++i) {
    if (values[i] > values[best]) best = i;
  }
  return best;
}

std::size_t predict(const CnnModel& model, std::span<const double> input, ForwardCache& cache) {
  if (model.mode() != Mode::Eval) throw ArgumentError("predict: model must be in eval mode");
  return argmax(forward(model, input, cache));
}

// ---------------------------------------------------------------------------

AdamState::AdamState(std::size_t parameter_count, const AdamConfig& cfg)
    : config(cfg), first_moment(parameter_count, 0.0), second_moment(parameter_count, 0.0) {}

void adam_step(std::span<double> params, std::span<const double> grads, AdamState& state) {
  if (params.size() != grads.size() || params.size() != state.first_moment.size()) {
    throw ShapeError("adam_step: params " + std::to_string(params.size()) + ", grads " +
                     std::to_string(grads.size()) + ", state " +
                     std::to_string(state.first_moment.size()));
  }
  const AdamConfig& c = state.config;
  ++state.step;
  const double t = static_cast<double>(state.step);
  const double correction1 = 1.0 - std::pow(c.beta1, t);
  const double correction2 = 1.0 - std::pow(c.beta2, t);
  for (std::size_t i = 0; i < params.size(); ++i) {
    const double g = grads[i];
    double& m = state.first_moment[i];
    double& v = state.second_moment[i];
    m = c.beta1 * m + (1.0 - c.beta1) * g;
    v = c.beta2 * v + (1.0 - c.beta2) * g * g;
    const double m_hat = m / correction1;
    const double v_hat = v / correction2;
    params[i] -= c.learning_rate * m_hat / (std::sqrt(v_hat) + c.epsilon);
  }
}

}  // namespace tgk
