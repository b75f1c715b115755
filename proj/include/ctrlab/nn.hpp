#pragma once
// Minimal feedforward engine: affine layers, relu/sigmoid activations, an
// optional softmax head, analytic backprop, SGD/Adam updates and a
// round-trip-exact text checkpoint.

#include <cstdint>
#include <iosfwd>
#include <span>
#include <string>
#include <vector>

#include "ctrlab/rng.hpp"

namespace ctrlab::nn {

enum class Activation { identity, relu, sigmoid };
enum class Head { none, softmax };

struct Layer {
  int in = 0;
  int out = 0;
  std::vector<double> w;  // row-major, out x in
  std::vector<double> b;
  Activation act = Activation::identity;
};

struct Network {
  std::vector<Layer> layers;
  Head head = Head::none;

  int input_dim() const { return layers.front().in; }
  int output_dim() const { return layers.back().out; }
  size_t num_params() const;
};

// Glorot-uniform weights from the given stream, zero biases.
// dims = {in, h1, ..., out}; acts has one entry per layer.
Network make_network(const std::vector<int>& dims, const std::vector<Activation>& acts,
                     Head head, std::mt19937_64& rng);

struct Gradients {
  struct LayerGrad {
    std::vector<double> w, b;
  };
  std::vector<LayerGrad> layers;

  void zero();
  void scale(double s);
};

Gradients make_gradients(const Network& net);

// Per-example forward state plus backward scratch, reusable across calls.
struct Cache {
  std::vector<double> input;
  std::vector<std::vector<double>> pre;   // affine output per layer
  std::vector<std::vector<double>> post;  // activation output per layer
  std::vector<double> out;                // head output
  std::vector<std::vector<double>> delta;
  std::vector<double> dinput;
};

// Returns the head output (view into the cache).
std::span<const double> forward(const Network& net, std::span<const double> x, Cache& cache);
std::vector<double> forward(const Network& net, std::span<const double> x);

// upstream = dL/d(output). Accumulates parameter gradients into grads and
// returns dL/d(input) as a view into the cache.
std::span<const double> backward(const Network& net, Cache& cache,
                                 std::span<const double> upstream, Gradients& grads);

// -sum target_i * ln(pred_i), predictions clamped to [1e-12, 1-1e-12].
double cross_entropy(std::span<const double> pred, std::span<const double> target);

struct OptimizerState {
  enum class Algo { sgd, adam };
  Algo algo = Algo::adam;
  double lr = 1e-3;
  double beta1 = 0.9;
  double beta2 = 0.999;
  double eps = 1e-8;
  int64_t t = 0;
  std::vector<Gradients::LayerGrad> m, v;
};

OptimizerState make_optimizer(const Network& net, OptimizerState::Algo algo, double lr);
void step(Network& net, const Gradients& grads, OptimizerState& opt);

std::string activation_name(Activation a);
Activation activation_from_name(const std::string& name);

void save_network(const Network& net, std::ostream& out);
Network load_network(std::istream& in);

}  // namespace ctrlab::nn
