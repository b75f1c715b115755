#include <cmath>
#include <functional>
#include <sstream>

#include "ctrlab/nn.hpp"
#include "doctest.h"

using namespace ctrlab;
using namespace ctrlab::nn;

namespace {

Network tiny_net(const std::vector<int>& dims, const std::vector<Activation>& acts,
                 Head head, uint64_t seed) {
  auto rng = make_rng(seed, Stream::test_misc);
  return make_network(dims, acts, head, rng);
}

// Central finite differences of an arbitrary scalar loss over every
// parameter; the independent oracle for backward().
double fd_max_rel_error(Network& net, const std::function<double(const Network&)>& loss,
                        const Gradients& analytic, double h = 1e-5) {
  double worst = 0.0;
  for (size_t l = 0; l < net.layers.size(); ++l) {
    auto probe = [&](std::vector<double>& params, const std::vector<double>& grad) {
      for (size_t i = 0; i < params.size(); ++i) {
        const double saved = params[i];
        params[i] = saved + h;
        const double up = loss(net);
        params[i] = saved - h;
        const double down = loss(net);
        params[i] = saved;
        const double numeric = (up - down) / (2.0 * h);
        const double denom = std::max({1e-6, std::abs(numeric), std::abs(grad[i])});
        worst = std::max(worst, std::abs(numeric - grad[i]) / denom);
      }
    };
    probe(net.layers[l].w, analytic.layers[l].w);
    probe(net.layers[l].b, analytic.layers[l].b);
  }
  return worst;
}

}  // namespace

TEST_CASE("identity single layer passes input through") {
  Network net;
  net.layers.push_back({2, 2, {1, 0, 0, 1}, {0, 0}, Activation::identity});
  const auto out = forward(net, std::vector<double>{1.0, 2.0});
  CHECK(out == std::vector<double>{1.0, 2.0});
}

TEST_CASE("softmax head closed forms") {
  Network net;
  net.layers.push_back({2, 2, {1, 0, 0, 1}, {0, 0}, Activation::identity});
  net.head = Head::softmax;

  auto out = forward(net, std::vector<double>{0.0, 0.0});
  CHECK(out[0] == doctest::Approx(0.5).epsilon(1e-12));
  CHECK(out[1] == doctest::Approx(0.5).epsilon(1e-12));

  out = forward(net, std::vector<double>{std::log(2.0), 0.0});
  CHECK(out[0] == doctest::Approx(2.0 / 3.0).epsilon(1e-12));
  CHECK(out[1] == doctest::Approx(1.0 / 3.0).epsilon(1e-12));
}

TEST_CASE("softmax sums to one and shifts cancel") {
  auto net = tiny_net({3, 4}, {Activation::identity}, Head::softmax, 3);
  auto rng = make_rng(4, Stream::test_misc);
  for (int trial = 0; trial < 20; ++trial) {
    std::vector<double> x = {uniform01(rng) * 10 - 5, uniform01(rng) * 10 - 5,
                             uniform01(rng) * 10 - 5};
    const auto p = forward(net, x);
    double sum = 0.0;
    for (const double v : p) sum += v;
    CHECK(std::abs(sum - 1.0) < 1e-9);

    // adding a constant to all logits (via the biases) leaves softmax alone
    Network shifted = net;
    for (auto& b : shifted.layers[0].b) b += 3.7;
    const auto q = forward(shifted, x);
    for (size_t i = 0; i < p.size(); ++i) CHECK(std::abs(p[i] - q[i]) < 1e-9);
  }
}

TEST_CASE("cross entropy closed forms") {
  CHECK(cross_entropy(std::vector<double>{1.0 - 1e-12, 1e-12}, std::vector<double>{1, 0}) ==
        doctest::Approx(0.0).epsilon(1e-9));
  CHECK(cross_entropy(std::vector<double>{0.5, 0.5}, std::vector<double>{1, 0}) ==
        doctest::Approx(std::log(2.0)).epsilon(1e-12));
  CHECK(cross_entropy(std::vector<double>{0.5, 0.5}, std::vector<double>{0.5, 0.5}) ==
        doctest::Approx(std::log(2.0)).epsilon(1e-12));
  CHECK_THROWS_AS(cross_entropy(std::vector<double>{0.5}, std::vector<double>{0.5, 0.5}),
                  std::invalid_argument);
}

TEST_CASE("zero upstream gives zero gradients") {
  auto net = tiny_net({3, 5, 2}, {Activation::relu, Activation::identity}, Head::none, 9);
  Cache cache;
  forward(net, std::vector<double>{0.3, -0.2, 0.9}, cache);
  auto grads = make_gradients(net);
  backward(net, cache, std::vector<double>{0.0, 0.0}, grads);
  for (const auto& l : grads.layers) {
    for (const double v : l.w) CHECK(v == 0.0);
    for (const double v : l.b) CHECK(v == 0.0);
  }
}

TEST_CASE("relu blocks gradient at negative pre-activation") {
  Network net;
  net.layers.push_back({1, 1, {1.0}, {-2.0}, Activation::relu});  // pre = x - 2
  Cache cache;
  forward(net, std::vector<double>{1.0}, cache);  // pre = -1 < 0
  auto grads = make_gradients(net);
  const double up = 1.0;
  backward(net, cache, std::span(&up, 1), grads);
  CHECK(grads.layers[0].w[0] == 0.0);
  CHECK(grads.layers[0].b[0] == 0.0);
}

TEST_CASE("analytic gradients match finite differences") {
  auto rng = make_rng(100, Stream::test_misc);
  const std::vector<double> target = {0.3, 0.7};

  for (uint64_t seed = 1; seed <= 5; ++seed) {
    // softmax-headed net under cross entropy
    auto net = tiny_net({4, 8, 2}, {Activation::relu, Activation::identity},
                        Head::softmax, seed);
    std::vector<double> x = {uniform01(rng), uniform01(rng), uniform01(rng), uniform01(rng)};

    auto loss = [&](const Network& n) { return cross_entropy(forward(n, x), target); };
    Cache cache;
    const auto out = forward(net, x, cache);
    std::vector<double> upstream(out.size());
    for (size_t i = 0; i < out.size(); ++i) upstream[i] = -target[i] / out[i];
    auto grads = make_gradients(net);
    backward(net, cache, upstream, grads);
    CHECK(fd_max_rel_error(net, loss, grads) < 1e-4);

    // sigmoid scalar net under squared error
    auto net2 = tiny_net({4, 6, 1}, {Activation::relu, Activation::sigmoid},
                         Head::none, seed + 50);
    auto loss2 = [&](const Network& n) {
      const double v = forward(n, x)[0];
      return (v - 0.25) * (v - 0.25);
    };
    Cache cache2;
    const auto out2 = forward(net2, x, cache2);
    const double up2 = 2.0 * (out2[0] - 0.25);
    auto grads2 = make_gradients(net2);
    backward(net2, cache2, std::span(&up2, 1), grads2);
    CHECK(fd_max_rel_error(net2, loss2, grads2) < 1e-4);
  }
}

TEST_CASE("sgd and adam update rules") {
  Network net;
  net.layers.push_back({1, 1, {1.0}, {0.0}, Activation::identity});
  Gradients grads = make_gradients(net);
  grads.layers[0].w[0] = 2.0;

  auto sgd = make_optimizer(net, OptimizerState::Algo::sgd, 0.1);
  step(net, grads, sgd);
  CHECK(net.layers[0].w[0] == doctest::Approx(0.8).epsilon(1e-15));

  grads.zero();
  step(net, grads, sgd);
  CHECK(net.layers[0].w[0] == doctest::Approx(0.8).epsilon(1e-15));

  // adam's first bias-corrected step moves by about lr for any nonzero grad
  Network net2;
  net2.layers.push_back({1, 1, {1.0}, {0.0}, Activation::identity});
  auto adam = make_optimizer(net2, OptimizerState::Algo::adam, 1e-3);
  Gradients g2 = make_gradients(net2);
  g2.layers[0].w[0] = 0.37;
  step(net2, g2, adam);
  // first step: m_hat = g, v_hat = g^2 -> delta = lr * g / (|g| + eps)
  const double expected = 1.0 - 1e-3 * 0.37 / (std::sqrt(0.37 * 0.37) + 1e-8);
  CHECK(net2.layers[0].w[0] == doctest::Approx(expected).epsilon(1e-12));
  CHECK(std::abs(1.0 - net2.layers[0].w[0]) == doctest::Approx(1e-3).epsilon(1e-6));
}

TEST_CASE("training drives loss down on a separable toy set") {
  auto rng = make_rng(21, Stream::test_misc);
  // two blobs in 2d, label by which blob
  std::vector<std::vector<double>> xs;
  std::vector<std::vector<double>> targets;
  for (int i = 0; i < 64; ++i) {
    const bool cls = i % 2 == 0;
    const double cx = cls ? 1.0 : -1.0;
    xs.push_back({cx + 0.3 * (uniform01(rng) - 0.5), 0.3 * (uniform01(rng) - 0.5)});
    targets.push_back(cls ? std::vector<double>{1.0, 0.0} : std::vector<double>{0.0, 1.0});
  }

  auto net = tiny_net({2, 8, 8, 2},
                      {Activation::relu, Activation::relu, Activation::identity},
                      Head::softmax, 5);
  auto grads = make_gradients(net);
  auto opt = make_optimizer(net, OptimizerState::Algo::adam, 1e-3);
  Cache cache;

  double loss = 0.0;
  for (int s = 0; s < 5000; ++s) {
    grads.zero();
    loss = 0.0;
    for (size_t i = 0; i < xs.size(); ++i) {
      const auto out = forward(net, xs[i], cache);
      loss += cross_entropy(out, targets[i]);
      std::vector<double> up(out.size());
      for (size_t k = 0; k < out.size(); ++k)
        up[k] = -targets[i][k] / std::max(out[k], 1e-12);
      backward(net, cache, up, grads);
    }
    loss /= static_cast<double>(xs.size());
    grads.scale(1.0 / static_cast<double>(xs.size()));
    step(net, grads, opt);
    if (loss < 0.05) break;
  }
  CHECK(loss < 0.1);
}

TEST_CASE("checkpoints round-trip exactly") {
  auto net = tiny_net({5, 16, 3}, {Activation::relu, Activation::identity},
                      Head::softmax, 77);
  std::stringstream first;
  save_network(net, first);
  auto loaded = load_network(first);

  REQUIRE(loaded.layers.size() == net.layers.size());
  CHECK(loaded.head == net.head);
  for (size_t l = 0; l < net.layers.size(); ++l) {
    CHECK(loaded.layers[l].w == net.layers[l].w);
    CHECK(loaded.layers[l].b == net.layers[l].b);
    CHECK(loaded.layers[l].act == net.layers[l].act);
  }

  std::stringstream second;
  save_network(loaded, second);
  CHECK(first.str() == second.str());
}
