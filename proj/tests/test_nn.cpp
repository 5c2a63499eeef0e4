#include <doctest.h>

#include <functional>

#include "gradcheck.hpp"
#include "helpers.hpp"
#include "tgk/errors.hpp"
#include "tgk/nn.hpp"

using namespace tgk;
using namespace tgk::test;

namespace {

CnnConfig tiny_config() {
  CnnConfig c;
  c.in_channels = 3;
  c.conv_channels = 4;
  c.hidden = 8;
  return c;
}

}  // namespace

TEST_SUITE("nn") {
  TEST_CASE("tensor invariants") {
    CHECK_THROWS_AS(Tensor({2, 3}, std::vector<double>(5)), ShapeError);
    Tensor t({2, 3}, 1.5);
    CHECK(t.size() == 6);
    CHECK(t.all_finite());
    t.data[4] = std::nan("");
    CHECK_FALSE(t.all_finite());
    CHECK_THROWS_AS(t.check_finite("probe"), NumericalError);
    CHECK(t.slice(1).size() == 3);
    CHECK_THROWS_AS(t.slice(2), BoundsError);
  }

  TEST_CASE("conv2d shapes") {
    std::mt19937_64 rng(1);
    const Tensor x = random_tensor({366, 5, 10}, rng);
    const Tensor k = random_tensor({122, 366, 3, 3}, rng, 0.01);
    const Tensor b({122});
    const Tensor y = conv2d(x, k, b);
    CHECK(y.shape == std::vector<std::size_t>{122, 5, 10});
    CHECK_THROWS_AS(conv2d(random_tensor({365, 5, 10}, rng), k, b), ShapeError);
    CHECK_THROWS_AS(conv2d(x, k, Tensor({121})), ShapeError);
  }

  TEST_CASE("conv2d: centre delta kernel is the identity, zero in gives bias out") {
    std::mt19937_64 rng(2);
    const Tensor x = random_tensor({1, 5, 10}, rng);
    Tensor k({1, 1, 3, 3});
    k.data[4] = 1.0;
    CHECK(conv2d(x, k, Tensor({1})) == x);
    const Tensor z = conv2d(Tensor({3, 5, 10}), random_tensor({2, 3, 3, 3}, rng), Tensor({2}));
    for (double v : z.data) CHECK(v == 0.0);
  }

  TEST_CASE("conv2d matches a direct zero-padded convolution") {
    std::mt19937_64 rng(3);
    const Tensor x = random_tensor({3, 5, 10}, rng);
    const Tensor k = random_tensor({4, 3, 3, 3}, rng);
    const Tensor b = random_tensor({4}, rng);
    const Tensor y = conv2d(x, k, b);
    for (std::size_t o = 0; o < 4; ++o) {
      for (long r = 0; r < 5; ++r) {
        for (long c = 0; c < 10; ++c) {
          double acc = b.data[o];
          for (std::size_t i = 0; i < 3; ++i) {
            for (long dr = -1; dr <= 1; ++dr) {
              for (long dc = -1; dc <= 1; ++dc) {
                const long rr = r + dr, cc = c + dc;
                if (rr < 0 || rr >= 5 || cc < 0 || cc >= 10) continue;
                acc += k.data[((o * 3 + i) * 3 + static_cast<std::size_t>(dr + 1)) * 3 +
                              static_cast<std::size_t>(dc + 1)] *
                       x.data[(i * 5 + static_cast<std::size_t>(rr)) * 10 + static_cast<std::size_t>(cc)];
              }
            }
          }
          CHECK(y.data[(o * 5 + static_cast<std::size_t>(r)) * 10 + static_cast<std::size_t>(c)] ==
                doctest::Approx(acc).epsilon(1e-12));
        }
      }
    }
  }

  TEST_CASE("conv2d gradients match finite differences") {
    std::mt19937_64 rng(4);
    Tensor x = random_tensor({3, 5, 10}, rng);
    Tensor k = random_tensor({4, 3, 3, 3}, rng);
    Tensor b = random_tensor({4}, rng);
    const Tensor w = random_tensor({4, 5, 10}, rng);  // loss = <w, conv(x)>
    const Conv2dGrads g = conv2d_backward(x, k, w);
    auto f = [&] { return dot(w, conv2d(x, k, b)); };
    CHECK(fd_mismatches(x, g.input, f) == 0);
    CHECK(fd_mismatches(k, g.kernel, f) == 0);
    CHECK(fd_mismatches(b, g.bias, f) == 0);
  }

  TEST_CASE("maxpool2: shapes, constants, window membership") {
    std::mt19937_64 rng(5);
    const Tensor y = maxpool2(random_tensor({122, 5, 10}, rng));
    CHECK(y.shape == std::vector<std::size_t>{122, 4, 9});
    CHECK(y.size() == 4392);
    const Tensor c = maxpool2(Tensor({2, 5, 10}, 3.25));
    for (double v : c.data) CHECK(v == 3.25);
    // One large element shows up in every window containing it.
    for (std::size_t r = 0; r < 5; ++r) {
      for (std::size_t col = 0; col < 10; ++col) {
        Tensor x({1, 5, 10}, 0.0);
        x.data[r * 10 + col] = 9.0;
        const Tensor p = maxpool2(x);
        std::size_t hits = 0;
        for (double v : p.data) hits += v == 9.0;
        const std::size_t rows = (r > 0) + (r < 4), cols = (col > 0) + (col < 9);
        CHECK(hits == rows * cols);
      }
    }
    CHECK_THROWS_AS(maxpool2(Tensor({1, 1, 10})), ShapeError);
  }

  TEST_CASE("maxpool2 gradient matches finite differences") {
    std::mt19937_64 rng(6);
    Tensor x = random_tensor({3, 5, 10}, rng);
    const Tensor w = random_tensor({3, 4, 9}, rng);
    const Tensor g = maxpool2_backward(x, w);
    CHECK(fd_mismatches(x, g, [&] { return dot(w, maxpool2(x)); }, 1e-6) == 0);
  }

  TEST_CASE("relu and its gradient") {
    const Tensor y = relu(Tensor({3}, std::vector<double>{-1, 0, 2}));
    CHECK(y.data == std::vector<double>{0, 0, 2});
    std::mt19937_64 rng(7);
    Tensor x = random_tensor({50}, rng);
    const Tensor w = random_tensor({50}, rng);
    CHECK(fd_mismatches(x, relu_backward(x, w), [&] { return dot(w, relu(x)); }, 1e-6) == 0);
  }

  TEST_CASE("linear and its gradients") {
    std::mt19937_64 rng(8);
    Tensor x = random_tensor({7}, rng);
    Tensor W = random_tensor({5, 7}, rng);
    Tensor b = random_tensor({5}, rng);
    const Tensor y = linear(x, W, b);
    for (std::size_t o = 0; o < 5; ++o) {
      double acc = b.data[o];
      for (std::size_t i = 0; i < 7; ++i) acc += W.data[o * 7 + i] * x.data[i];
      CHECK(y.data[o] == doctest::Approx(acc).epsilon(1e-14));
    }
    const Tensor w = random_tensor({5}, rng);
    const LinearGrads g = linear_backward(x, W, w);
    auto f = [&] { return dot(w, linear(x, W, b)); };
    CHECK(fd_mismatches(x, g.input, f) == 0);
    CHECK(fd_mismatches(W, g.weights, f) == 0);
    CHECK(fd_mismatches(b, g.bias, f) == 0);
    CHECK_THROWS_AS(linear(random_tensor({6}, rng), W, b), ShapeError);
  }

  TEST_CASE("dropout: eval identity, p = 0 identity, mask values") {
    std::mt19937_64 rng(9);
    const Tensor x = random_tensor({200}, rng);
    CHECK(dropout(x, 0.5, Mode::Eval, 3) == x);
    CHECK(dropout(x, 0.0, Mode::Train, 3) == x);
    const auto m = dropout_mask(1000, 0.5, Mode::Train, 11);
    std::size_t zeros = 0;
    for (double v : m) {
      CHECK((v == 0.0 || v == 2.0));
      zeros += v == 0.0;
    }
    CHECK(zeros > 400);
    CHECK(zeros < 600);
    CHECK(dropout_mask(1000, 0.5, Mode::Train, 11) == m);
    CHECK_FALSE(dropout_mask(1000, 0.5, Mode::Train, 12) == m);
    CHECK_THROWS_AS(dropout(x, 1.0, Mode::Train, 0), ArgumentError);
  }

  TEST_CASE("dropout expectation equals the input (Monte Carlo)") {
    std::mt19937_64 rng(10);
    Tensor x({64});
    std::uniform_real_distribution<double> u(0.5, 2.0);
    for (double& v : x.data) v = u(rng);
    const int draws = 10000;
    for (double p : {0.1, 0.2, 0.5}) {
      std::vector<double> mean(64, 0.0);
      for (int s = 0; s < draws; ++s) {
        const Tensor y = dropout(x, p, Mode::Train, static_cast<std::uint64_t>(s));
        for (std::size_t i = 0; i < 64; ++i) mean[i] += y.data[i] / draws;
      }
      double total_mean = 0, total_x = 0;
      for (std::size_t i = 0; i < 64; ++i) {
        total_mean += mean[i];
        total_x += x.data[i];
        // Per-element standard error is x*sqrt(p/(1-p)/draws): 0.33% and 0.5%.
        if (p < 0.5) CHECK(std::abs(mean[i] - x.data[i]) < 0.02 * x.data[i]);
      }
      CHECK(std::abs(total_mean - total_x) < 0.02 * total_x);
    }
  }

  TEST_CASE("softmax cross entropy values") {
    const std::vector<double> zero(13, 0.0);
    CHECK(softmax_cross_entropy(zero, 4).loss == doctest::Approx(std::log(13.0)).epsilon(1e-14));
    CHECK(std::log(13.0) == doctest::Approx(2.5649).epsilon(1e-4));
    double prev = 1e9;
    for (double z = 0; z < 40; z += 2) {
      std::vector<double> l(13, 0.0);
      l[2] = z;
      const double loss = softmax_cross_entropy(l, 2).loss;
      CHECK((loss < prev || loss == 0.0));
      CHECK(loss >= 0.0);
      prev = loss;
    }
    CHECK(prev < 1e-15);
    std::vector<double> huge(13, 0.0);
    huge[0] = 1000;
    CHECK(std::isfinite(softmax_cross_entropy(huge, 1).loss));
    CHECK_THROWS_AS(softmax_cross_entropy(zero, 13), ArgumentError);
  }

  TEST_CASE("softmax cross entropy gradient matches finite differences") {
    std::mt19937_64 rng(11);
    std::normal_distribution<double> n(0, 2);
    for (int trial = 0; trial < 10; ++trial) {
      std::vector<double> l(13);
      for (double& v : l) v = n(rng);
      const std::size_t label = static_cast<std::size_t>(trial) % 13;
      const LossAndGrad lg = softmax_cross_entropy(l, label);
      const auto p = softmax(l);
      for (std::size_t i = 0; i < 13; ++i) {
        CHECK(lg.grad[i] == doctest::Approx(p[i] - (i == label)).epsilon(1e-14));
        const double h = 1e-5, keep = l[i];
        l[i] = keep + h;
        const double fp = softmax_cross_entropy(l, label).loss;
        l[i] = keep - h;
        const double fm = softmax_cross_entropy(l, label).loss;
        l[i] = keep;
        CHECK(grad_close(lg.grad[i], (fp - fm) / (2 * h), 1e-6));
      }
    }
  }

  TEST_CASE("softmax is a positive distribution") {
    std::mt19937_64 rng(12);
    std::normal_distribution<double> n(0, 30);
    for (int trial = 0; trial < 50; ++trial) {
      std::vector<double> l(13);
      for (double& v : l) v = n(rng);
      const auto p = softmax(l);
      double s = 0;
      for (double v : p) {
        CHECK(v > 0.0);
        s += v;
      }
      CHECK(std::abs(s - 1.0) < 1e-12);
    }
  }

  TEST_CASE("architecture shapes for both ablation arms") {
    for (std::size_t c_in : {122u, 366u}) {
      const CnnConfig c = gesture_cnn_config(c_in);
      CHECK(c.conv_channels == 122);
      CHECK(c.pooled_features() == 4392);
      CHECK(c.hidden == 100);
      CHECK(c.classes == 13);
      CHECK(c.dropout_p == 0.5);
      CnnModel m(c);
      CHECK(m.parameters().size() == 122 * c_in * 9 + 122 + 100 * 4392 + 100 + 13 * 100 + 13);
      CHECK(m.conv_kernel().size() == 122 * c_in * 9);
      CHECK(m.fc1_weights().size() == 100 * 4392);
      m.initialize(1);
      m.set_mode(Mode::Eval);
      ForwardCache cache;
      std::vector<double> x(c_in * 50, 0.1);
      CHECK(forward(m, x, cache).size() == 13);
      CHECK(cache.conv_pre.size() == 122 * 50);
      CHECK(cache.pooled.size() == 4392);
      CHECK_THROWS_AS(forward(m, std::vector<double>(c_in * 50 - 1), cache), ShapeError);
    }
    CHECK_THROWS_AS(gesture_cnn_config(3), ArgumentError);
  }

  TEST_CASE("initialization: Kaiming-uniform bounds, zero biases, seeded") {
    CnnModel m(gesture_cnn_config(122));
    m.initialize(5);
    const double conv_bound = std::sqrt(6.0 / (122 * 9));
    const double fc1_bound = std::sqrt(6.0 / 4392);
    double conv_max = 0, fc1_max = 0;
    for (double v : m.conv_kernel()) conv_max = std::max(conv_max, std::abs(v));
    for (double v : m.fc1_weights()) fc1_max = std::max(fc1_max, std::abs(v));
    CHECK(conv_max <= conv_bound);
    CHECK(conv_max > 0.99 * conv_bound);
    CHECK(fc1_max <= fc1_bound);
    for (double v : m.conv_bias()) CHECK(v == 0.0);
    for (double v : m.fc2_bias()) CHECK(v == 0.0);
    CnnModel again(gesture_cnn_config(122));
    again.initialize(5);
    CHECK(std::equal(m.parameters().begin(), m.parameters().end(), again.parameters().begin()));
  }

  TEST_CASE("end-to-end gradient matches finite differences with a frozen dropout mask") {
    CnnModel m(tiny_config());
    m.initialize(3);
    std::mt19937_64 rng(13);
    std::normal_distribution<double> n(0, 0.1);
    for (double& v : m.conv_bias()) v = n(rng);
    for (double& v : m.fc1_bias()) v = n(rng);
    for (double& v : m.fc2_bias()) v = n(rng);
    const Tensor x = random_tensor({3, 5, 10}, rng);
    const EndToEndCheck r = check_end_to_end(m, x, 6, 77);
    CHECK(r.mismatched == 0);
    CHECK(r.skipped * 100 < m.parameters().size());
    CHECK(r.checked > 0);
  }

  TEST_CASE("backward accumulates and needs a forward pass") {
    CnnModel m(tiny_config());
    m.initialize(1);
    ForwardCache empty;
    std::vector<double> g(m.parameters().size(), 0.0);
    CHECK_THROWS_AS(backward(m, empty, 0, g), ArgumentError);
    std::mt19937_64 rng(14);
    const Tensor x = random_tensor({3, 5, 10}, rng);
    ForwardCache cache;
    forward(m, x.data, cache, 1);
    backward(m, cache, 2, g);
    std::vector<double> g2 = g;
    backward(m, cache, 2, g2);
    for (std::size_t i = 0; i < g.size(); ++i) CHECK(g2[i] == doctest::Approx(2 * g[i]));
    std::vector<double> wrong(3);
    CHECK_THROWS_AS(backward(m, cache, 2, wrong), ShapeError);
  }

  TEST_CASE("zero input with zero biases gives zero fc weight gradients") {
    CnnModel m(tiny_config());
    m.initialize(2);
    ForwardCache cache;
    forward(m, std::vector<double>(150, 0.0), cache, 5);
    std::vector<double> g(m.parameters().size(), 0.0);
    backward(m, cache, 3, g);
    const auto& L = m.layout();
    for (std::size_t i = L.fc1_w; i < L.fc1_b; ++i) CHECK(g[i] == 0.0);
    for (std::size_t i = L.fc2_w; i < L.fc2_b; ++i) CHECK(g[i] == 0.0);
  }

  TEST_CASE("dead ReLUs pass no gradient to the layers below") {
    CnnModel m(tiny_config());
    m.initialize(2);
    for (double& v : m.conv_bias()) v = -1e6;
    std::mt19937_64 rng(15);
    const Tensor x = random_tensor({3, 5, 10}, rng);
    ForwardCache cache;
    forward(m, x.data, cache, 5);
    std::vector<double> g(m.parameters().size(), 0.0);
    backward(m, cache, 3, g);
    const auto& L = m.layout();
    for (std::size_t i = L.conv_w; i < L.fc1_b; ++i) CHECK(g[i] == 0.0);
  }

  TEST_CASE("eval forward equals train forward with p = 0") {
    CnnConfig c = tiny_config();
    c.dropout_p = 0.0;
    CnnModel train_m(c);
    train_m.initialize(9);
    CnnConfig ce = tiny_config();
    CnnModel eval_m(ce);
    std::copy(train_m.parameters().begin(), train_m.parameters().end(), eval_m.parameters().begin());
    eval_m.set_mode(Mode::Eval);
    std::mt19937_64 rng(16);
    const Tensor x = random_tensor({3, 5, 10}, rng);
    ForwardCache a, b;
    const auto la = forward(train_m, x.data, a, 123);
    const auto lb = forward(eval_m, x.data, b, 456);
    CHECK(std::equal(la.begin(), la.end(), lb.begin()));
  }

  TEST_CASE("predict requires eval mode; argmax ties go to the lowest index") {
    CnnModel m(tiny_config());
    m.initialize(1);
    ForwardCache cache;
    CHECK_THROWS_AS(predict(m, std::vector<double>(150, 0.0), cache), ArgumentError);
    const std::vector<double> v{1, 3, 3, 2};
    CHECK(argmax(v) == 1);
    // All-zero parameters make every logit equal.
    CnnModel z(tiny_config());
    z.set_mode(Mode::Eval);
    CHECK(predict(z, std::vector<double>(150, 1.0), cache) == 0);
  }

  TEST_CASE("adam: first step moves each parameter by about lr") {
    std::vector<double> p(10, 0.5), g(10);
    for (std::size_t i = 0; i < 10; ++i) g[i] = (i % 2 ? -1.0 : 1.0) * (0.01 + static_cast<double>(i));
    AdamState s(10);
    adam_step(p, g, s);
    CHECK(s.step == 1);
    for (std::size_t i = 0; i < 10; ++i) {
      const double moved = 0.5 - p[i];
      CHECK(std::abs(std::abs(moved) - 1e-4) < 1e-6);
      CHECK((moved > 0) == (g[i] > 0));
    }
  }

  TEST_CASE("adam: bias-corrected update matches the textbook recurrence") {
    std::mt19937_64 rng(17);
    std::normal_distribution<double> n(0, 1);
    std::vector<double> p(6), q(6), m(6, 0), v(6, 0);
    for (std::size_t i = 0; i < 6; ++i) p[i] = q[i] = n(rng);
    AdamConfig cfg;
    cfg.learning_rate = 1e-2;
    AdamState s(6, cfg);
    for (int t = 1; t <= 20; ++t) {
      std::vector<double> g(6);
      for (double& x : g) x = n(rng);
      adam_step(p, g, s);
      for (std::size_t i = 0; i < 6; ++i) {
        m[i] = 0.9 * m[i] + 0.1 * g[i];
        v[i] = 0.999 * v[i] + 0.001 * g[i] * g[i];
        const double mh = m[i] / (1 - std::pow(0.9, t));
        const double vh = v[i] / (1 - std::pow(0.999, t));
        q[i] -= 1e-2 * mh / (std::sqrt(vh) + 1e-8);
      }
    }
    for (std::size_t i = 0; i < 6; ++i) CHECK(p[i] == doctest::Approx(q[i]).epsilon(1e-12));
  }

  TEST_CASE("adam: zero gradients leave parameters alone; shape checks") {
    std::vector<double> p{1, -2, 3}, g(3, 0.0);
    const auto before = p;
    AdamState s(3);
    for (int i = 0; i < 100; ++i) adam_step(p, g, s);
    CHECK(p == before);
    std::vector<double> g2(2, 1.0);
    CHECK_THROWS_AS(adam_step(p, g2, s), ShapeError);
  }

  TEST_CASE("identical seeded runs give bitwise-identical parameters") {
    auto run = [] {
      CnnModel m(tiny_config());
      m.initialize(21);
      AdamState s(m.parameters().size());
      std::mt19937_64 rng(22);
      const Tensor x = random_tensor({3, 5, 10}, rng);
      ForwardCache cache;
      for (std::uint64_t step = 0; step < 10; ++step) {
        std::vector<double> g(m.parameters().size(), 0.0);
        forward(m, x.data, cache, step);
        backward(m, cache, step % 13, g);
        adam_step(m.parameters(), g, s);
      }
      return std::vector<double>(m.parameters().begin(), m.parameters().end());
    };
    CHECK(run() == run());
  }

  TEST_CASE("loss halves within 50 Adam steps on a 64-sample memorization task") {
    CnnConfig c;
    c.in_channels = 12;
    CnnModel m(c);
    m.initialize(31);
    std::mt19937_64 rng(32);
    std::vector<Tensor> xs;
    std::vector<std::size_t> ys;
    for (std::size_t i = 0; i < 64; ++i) {
      xs.push_back(random_tensor({12, 5, 10}, rng));
      ys.push_back(i % 13);
    }
    AdamState s(m.parameters().size());
    ForwardCache cache;
    std::vector<double> losses;
    for (std::uint64_t step = 0; step <= 50; ++step) {
      std::vector<double> g(m.parameters().size(), 0.0);
      double loss = 0;
      for (std::size_t i = 0; i < 64; ++i) {
        forward(m, xs[i].data, cache, step * 64 + i);
        loss += backward(m, cache, ys[i], g) / 64;
      }
      for (double& v : g) v /= 64;
      losses.push_back(loss);
      adam_step(m.parameters(), g, s);
    }
    CHECK(losses[50] < 0.5 * losses[0]);
  }
}
