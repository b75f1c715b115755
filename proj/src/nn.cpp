#include "ctrlab/nn.hpp"

#include <algorithm>
#include <cmath>
#include <istream>
#include <ostream>
#include <stdexcept>

#include "ctrlab/util.hpp"
#include "json.hpp"

namespace ctrlab::nn {

namespace {

constexpr double kProbEps = 1e-12;

double apply_act(Activation act, double v) {
  switch (act) {
    case Activation::identity: return v;
    case Activation::relu: return v > 0.0 ? v : 0.0;
    case Activation::sigmoid: return 1.0 / (1.0 + std::exp(-v));
  }
  return v;
}

// Derivative in terms of pre-activation (relu) or activation output (sigmoid).
double act_grad(Activation act, double pre, double post) {
  switch (act) {
    case Activation::identity: return 1.0;
    case Activation::relu: return pre > 0.0 ? 1.0 : 0.0;
    case Activation::sigmoid: return post * (1.0 - post);
  }
  return 1.0;
}

}  // namespace

size_t Network::num_params() const {
  size_t n = 0;
  for (const auto& l : layers) n += l.w.size() + l.b.size();
  return n;
}

Network make_network(const std::vector<int>& dims, const std::vector<Activation>& acts,
                     Head head, std::mt19937_64& rng) {
  if (dims.size() < 2 || acts.size() != dims.size() - 1)
    throw std::invalid_argument("make_network: dims/acts mismatch");
  Network net;
  net.head = head;
  net.layers.resize(dims.size() - 1);
  for (size_t l = 0; l < net.layers.size(); ++l) {
    auto& layer = net.layers[l];
    layer.in = dims[l];
    layer.out = dims[l + 1];
    layer.act = acts[l];
    layer.w.resize(static_cast<size_t>(layer.in) * layer.out);
    layer.b.assign(static_cast<size_t>(layer.out), 0.0);
    const double bound = std::sqrt(6.0 / (layer.in + layer.out));
    for (auto& w : layer.w) w = (uniform01(rng) * 2.0 - 1.0) * bound;
  }
  return net;
}

void Gradients::zero() {
  for (auto& l : layers) {
    std::fill(l.w.begin(), l.w.end(), 0.0);
    std::fill(l.b.begin(), l.b.end(), 0.0);
  }
}

void Gradients::scale(double s) {
  for (auto& l : layers) {
    for (auto& v : l.w) v *= s;
    for (auto& v : l.b) v *= s;
  }
}

Gradients make_gradients(const Network& net) {
  Gradients g;
  g.layers.resize(net.layers.size());
  for (size_t l = 0; l < net.layers.size(); ++l) {
    g.layers[l].w.assign(net.layers[l].w.size(), 0.0);
    g.layers[l].b.assign(net.layers[l].b.size(), 0.0);
  }
  return g;
}

std::span<const double> forward(const Network& net, std::span<const double> x, Cache& cache) {
  const size_t n_layers = net.layers.size();
  if (x.size() != static_cast<size_t>(net.input_dim()))
    throw std::invalid_argument("forward: input dimension mismatch");

  cache.input.assign(x.begin(), x.end());
  cache.pre.resize(n_layers);
  cache.post.resize(n_layers);

  const double* in = cache.input.data();
  size_t in_dim = x.size();
  for (size_t l = 0; l < n_layers; ++l) {
    const Layer& layer = net.layers[l];
    auto& pre = cache.pre[l];
    auto& post = cache.post[l];
    pre.resize(static_cast<size_t>(layer.out));
    post.resize(static_cast<size_t>(layer.out));
    const double* w = layer.w.data();
    for (int i = 0; i < layer.out; ++i) {
      double acc = layer.b[static_cast<size_t>(i)];
      const double* row = w + static_cast<size_t>(i) * in_dim;
      for (size_t j = 0; j < in_dim; ++j) acc += row[j] * in[j];
      pre[static_cast<size_t>(i)] = acc;
      post[static_cast<size_t>(i)] = apply_act(layer.act, acc);
    }
    in = post.data();
    in_dim = post.size();
  }

  const auto& last = cache.post.back();
  if (net.head == Head::softmax) {
    cache.out.resize(last.size());
    const double mx = *std::max_element(last.begin(), last.end());
    double sum = 0.0;
    for (size_t i = 0; i < last.size(); ++i) {
      cache.out[i] = std::exp(last[i] - mx);
      sum += cache.out[i];
    }
    for (auto& v : cache.out) v /= sum;
  } else {
    cache.out = last;
  }
  return cache.out;
}

std::vector<double> forward(const Network& net, std::span<const double> x) {
  Cache cache;
  forward(net, x, cache);
  return cache.out;
}

std::span<const double> backward(const Network& net, Cache& cache,
                                 std::span<const double> upstream, Gradients& grads) {
  const size_t n_layers = net.layers.size();
  if (grads.layers.size() != n_layers)
    throw std::invalid_argument("backward: gradient shape mismatch");
  if (upstream.size() != cache.out.size())
    throw std::invalid_argument("backward: upstream dimension mismatch");

  cache.delta.resize(n_layers);

  // d = dL/d(post) of the last layer.
  auto& last_delta = cache.delta[n_layers - 1];
  last_delta.resize(upstream.size());
  if (net.head == Head::softmax) {
    const auto& p = cache.out;
    double dot = 0.0;
    for (size_t i = 0; i < p.size(); ++i) dot += upstream[i] * p[i];
    for (size_t i = 0; i < p.size(); ++i) last_delta[i] = p[i] * (upstream[i] - dot);
  } else {
    std::copy(upstream.begin(), upstream.end(), last_delta.begin());
  }

  for (size_t l = n_layers; l-- > 0;) {
    const Layer& layer = net.layers[l];
    auto& d = cache.delta[l];  // dL/d(post[l]) on entry
    const auto& pre = cache.pre[l];
    const auto& post = cache.post[l];
    for (int i = 0; i < layer.out; ++i)
      d[static_cast<size_t>(i)] *= act_grad(layer.act, pre[static_cast<size_t>(i)],
                                            post[static_cast<size_t>(i)]);

    const double* in = l == 0 ? cache.input.data() : cache.post[l - 1].data();
    const auto in_dim = static_cast<size_t>(layer.in);
    auto& gw = grads.layers[l].w;
    auto& gb = grads.layers[l].b;
    for (int i = 0; i < layer.out; ++i) {
      const double di = d[static_cast<size_t>(i)];
      gb[static_cast<size_t>(i)] += di;
      double* grow = gw.data() + static_cast<size_t>(i) * in_dim;
      for (size_t j = 0; j < in_dim; ++j) grow[j] += di * in[j];
    }

    auto& down = l == 0 ? cache.dinput : cache.delta[l - 1];
    down.assign(in_dim, 0.0);
    const double* w = layer.w.data();
    for (int i = 0; i < layer.out; ++i) {
      const double di = d[static_cast<size_t>(i)];
      const double* row = w + static_cast<size_t>(i) * in_dim;
      for (size_t j = 0; j < in_dim; ++j) down[j] += di * row[j];
    }
  }
  return cache.dinput;
}

double cross_entropy(std::span<const double> pred, std::span<const double> target) {
  if (pred.size() != target.size())
    throw std::invalid_argument("cross_entropy: length mismatch");
  double loss = 0.0;
  for (size_t i = 0; i < pred.size(); ++i) {
    const double p = std::clamp(pred[i], kProbEps, 1.0 - kProbEps);
    loss -= target[i] * std::log(p);
  }
  return loss;
}

OptimizerState make_optimizer(const Network& net, OptimizerState::Algo algo, double lr) {
  OptimizerState opt;
  opt.algo = algo;
  opt.lr = lr;
  if (algo == OptimizerState::Algo::adam) {
    const Gradients zero = make_gradients(net);
    opt.m = zero.layers;
    opt.v = zero.layers;
  }
  return opt;
}

void step(Network& net, const Gradients& grads, OptimizerState& opt) {
  if (grads.layers.size() != net.layers.size())
    throw std::invalid_argument("step: gradient shape mismatch");

  if (opt.algo == OptimizerState::Algo::sgd) {
    for (size_t l = 0; l < net.layers.size(); ++l) {
      auto& layer = net.layers[l];
      const auto& g = grads.layers[l];
      for (size_t i = 0; i < layer.w.size(); ++i) layer.w[i] -= opt.lr * g.w[i];
      for (size_t i = 0; i < layer.b.size(); ++i) layer.b[i] -= opt.lr * g.b[i];
    }
    return;
  }

  ++opt.t;
  const double bc1 = 1.0 - std::pow(opt.beta1, static_cast<double>(opt.t));
  const double bc2 = 1.0 - std::pow(opt.beta2, static_cast<double>(opt.t));
  auto update = [&](std::vector<double>& p, const std::vector<double>& g,
                    std::vector<double>& m, std::vector<double>& v) {
    for (size_t i = 0; i < p.size(); ++i) {
      m[i] = opt.beta1 * m[i] + (1.0 - opt.beta1) * g[i];
      v[i] = opt.beta2 * v[i] + (1.0 - opt.beta2) * g[i] * g[i];
      const double mhat = m[i] / bc1;
      const double vhat = v[i] / bc2;
      p[i] -= opt.lr * mhat / (std::sqrt(vhat) + opt.eps);
    }
  };
  for (size_t l = 0; l < net.layers.size(); ++l) {
    update(net.layers[l].w, grads.layers[l].w, opt.m[l].w, opt.v[l].w);
    update(net.layers[l].b, grads.layers[l].b, opt.m[l].b, opt.v[l].b);
  }
}

std::string activation_name(Activation a) {
  switch (a) {
    case Activation::identity: return "identity";
    case Activation::relu: return "relu";
    case Activation::sigmoid: return "sigmoid";
  }
  return "identity";
}

Activation activation_from_name(const std::string& name) {
  if (name == "identity") return Activation::identity;
  if (name == "relu") return Activation::relu;
  if (name == "sigmoid") return Activation::sigmoid;
  throw ParseError("unknown activation '" + name + "'");
}

void save_network(const Network& net, std::ostream& out) {
  nlohmann::json j;
  j["head"] = net.head == Head::softmax ? "softmax" : "none";
  j["layers"] = nlohmann::json::array();
  for (const auto& layer : net.layers) {
    j["layers"].push_back({{"in", layer.in},
                           {"out", layer.out},
                           {"activation", activation_name(layer.act)},
                           {"w", layer.w},
                           {"b", layer.b}});
  }
  out << j.dump(1) << '\n';
}

Network load_network(std::istream& in) {
  nlohmann::json j;
  in >> j;
  Network net;
  net.head = j.at("head").get<std::string>() == "softmax" ? Head::softmax : Head::none;
  for (const auto& lj : j.at("layers")) {
    Layer layer;
    layer.in = lj.at("in").get<int>();
    layer.out = lj.at("out").get<int>();
    layer.act = activation_from_name(lj.at("activation").get<std::string>());
    layer.w = lj.at("w").get<std::vector<double>>();
    layer.b = lj.at("b").get<std::vector<double>>();
    if (layer.w.size() != static_cast<size_t>(layer.in) * layer.out ||
        layer.b.size() != static_cast<size_t>(layer.out))
      throw ParseError("network checkpoint: parameter shape mismatch");
    net.layers.push_back(std::move(layer));
  }
  if (net.layers.empty()) throw ParseError("network checkpoint: no layers");
  return net;
}

}  // namespace ctrlab::nn
