#include "ctrlab/models.hpp"

#include <algorithm>
#include <cmath>
#include <ostream>

#include "ctrlab/util.hpp"
#include "json.hpp"

namespace ctrlab {

namespace {

constexpr double kProbEps = 1e-12;

double clamp_prob(double p) { return std::clamp(p, kProbEps, 1.0 - kProbEps); }

// d/dp of -[y ln p + (1-y) ln(1-p)] at the clamped p.
double bce_grad(double p, int y) {
  const double pc = clamp_prob(p);
  return y == 1 ? -1.0 / pc : 1.0 / (1.0 - pc);
}

double bce_loss(double p, int y) {
  const double pc = clamp_prob(p);
  return y == 1 ? -std::log(pc) : -std::log(1.0 - pc);
}

// Two independent 2-way softmaxes over the columns of the raw 2x2 logits.
std::array<double, 4> column_softmax(std::span<const double> z) {
  std::array<double, 4> t{};
  for (int j = 0; j < 2; ++j) {
    const double z0 = z[static_cast<size_t>(j)];      // row y=1
    const double z1 = z[static_cast<size_t>(2 + j)];  // row y=0
    const double mx = std::max(z0, z1);
    const double e0 = std::exp(z0 - mx), e1 = std::exp(z1 - mx);
    t[static_cast<size_t>(j)] = e0 / (e0 + e1);
    t[static_cast<size_t>(2 + j)] = e1 / (e0 + e1);
  }
  return t;
}

}  // namespace

ModelKind model_kind_from_string(const std::string& name) {
  if (name == "iin") return ModelKind::iin;
  if (name == "pal") return ModelKind::pal;
  if (name == "mmoe") return ModelKind::mmoe;
  if (name == "skyline") return ModelKind::skyline;
  throw ConfigError("unknown model '" + name + "' (expected iin|pal|mmoe|skyline)");
}

std::string to_string(ModelKind kind) {
  switch (kind) {
    case ModelKind::iin: return "iin";
    case ModelKind::pal: return "pal";
    case ModelKind::mmoe: return "mmoe";
    case ModelKind::skyline: return "skyline";
  }
  return "iin";
}

// --------------------------------------------------------------------------
// IIN

IINModel make_iin(const ModelDims& dims, double alpha, std::mt19937_64& rng) {
  IINModel model;
  model.dims = dims;
  model.alpha = alpha;
  model.relevance_net = nn::make_network(
      {dims.feature_dim, dims.hidden_main, dims.hidden_main, 2},
      {nn::Activation::relu, nn::Activation::relu, nn::Activation::identity},
      nn::Head::softmax, rng);
  model.bias_net = nn::make_network(
      {dims.bias_dim, dims.hidden_bias, 4},
      {nn::Activation::relu, nn::Activation::identity}, nn::Head::none, rng);
  // Start with t'00 > t'01 in every column pair. A symmetric start is a
  // stationary point of the marginalized loss: with identical columns the
  // relevance head receives no gradient, and once the constraint wall is hit
  // at equality it stays pinned there. Seeding the orientation the
  // constraint demands removes both failure modes.
  auto& out_bias = model.bias_net.layers.back().b;
  out_bias[0] = 1.0;   // z00: P(y=1|r=1) column up
  out_bias[1] = -1.0;  // z01: P(y=1|r=0) column down
  out_bias[2] = -1.0;  // z10
  out_bias[3] = 1.0;   // z11
  return model;
}

IINForward iin_forward(const IINModel& model, std::span<const double> x,
                       std::span<const double> bias) {
  thread_local IINScratch scratch;
  IINForward f;
  const auto r = nn::forward(model.relevance_net, x, scratch.rel_cache);
  f.r = {r[0], r[1]};
  const auto z = nn::forward(model.bias_net, bias, scratch.bias_cache);
  f.t_prime = column_softmax(z);
  for (int i = 0; i < 2; ++i)
    f.p_click[static_cast<size_t>(i)] = f.t_prime[static_cast<size_t>(2 * i)] * f.r[0] +
                                        f.t_prime[static_cast<size_t>(2 * i + 1)] * f.r[1];
  return f;
}

double iin_loss(const IINModel& model, std::span<const double> x,
                std::span<const double> bias, int y) {
  const auto f = iin_forward(model, x, bias);
  const size_t y_idx = y == 1 ? 0 : 1;
  const double ce = -std::log(clamp_prob(f.p_click[y_idx]));
  const double violation = f.t_prime[1] - f.t_prime[0];  // t'01 - t'00
  return ce + model.alpha * (violation > 0.0 ? violation : 0.0);
}

double iin_score(const IINModel& model, std::span<const double> x) {
  thread_local nn::Cache cache;
  return nn::forward(model.relevance_net, x, cache)[0];
}

double iin_backward(const IINModel& model, std::span<const double> x,
                    std::span<const double> bias, int y, nn::Gradients& g_rel,
                    nn::Gradients& g_bias, IINScratch& scratch) {
  const auto r = nn::forward(model.relevance_net, x, scratch.rel_cache);
  const auto z = nn::forward(model.bias_net, bias, scratch.bias_cache);
  const auto t = column_softmax(z);

  std::array<double, 2> p{};
  for (int i = 0; i < 2; ++i)
    p[static_cast<size_t>(i)] =
        t[static_cast<size_t>(2 * i)] * r[0] + t[static_cast<size_t>(2 * i + 1)] * r[1];

  const size_t y_idx = y == 1 ? 0 : 1;
  const double ce = -std::log(clamp_prob(p[y_idx]));
  const double violation = t[1] - t[0];
  const double loss = ce + model.alpha * (violation > 0.0 ? violation : 0.0);

  // dL/dp has a single nonzero entry at the label row.
  const double dp = -1.0 / clamp_prob(p[y_idx]);

  // dL/dr flows through the label row of t'.
  const std::array<double, 2> dr = {dp * t[2 * y_idx], dp * t[2 * y_idx + 1]};

  // dL/dt': the CE touches the label row, the constraint touches t'00/t'01.
  std::array<double, 4> dt{};
  dt[2 * y_idx] = dp * r[0];
  dt[2 * y_idx + 1] = dp * r[1];
  if (violation > 0.0) {
    dt[0] -= model.alpha;
    dt[1] += model.alpha;
  }

  // Through each column's 2-way softmax: dz0 = (g0 - g1) * t0 * t1.
  std::array<double, 4> dz{};
  for (int j = 0; j < 2; ++j) {
    const double t0 = t[static_cast<size_t>(j)], t1 = t[static_cast<size_t>(2 + j)];
    const double common = (dt[static_cast<size_t>(j)] - dt[static_cast<size_t>(2 + j)]) * t0 * t1;
    dz[static_cast<size_t>(j)] = common;
    dz[static_cast<size_t>(2 + j)] = -common;
  }

  nn::backward(model.relevance_net, scratch.rel_cache, dr, g_rel);
  nn::backward(model.bias_net, scratch.bias_cache, dz, g_bias);
  return loss;
}

std::vector<BiasSurfaceEntry> bias_surface(const IINModel& model,
                                           const std::vector<int>& positions,
                                           const std::vector<std::vector<double>>& b_samples) {
  std::vector<std::vector<double>> extras = b_samples;
  if (extras.empty()) extras.push_back({});

  std::vector<BiasSurfaceEntry> table;
  thread_local nn::Cache cache;
  for (const int pos : positions) {
    for (size_t bi = 0; bi < extras.size(); ++bi) {
      std::vector<double> bias(static_cast<size_t>(model.dims.pos_cap), 0.0);
      bias[static_cast<size_t>(std::min(pos, model.dims.pos_cap) - 1)] = 1.0;
      bias.insert(bias.end(), extras[bi].begin(), extras[bi].end());
      if (bias.size() != static_cast<size_t>(model.dims.bias_dim))
        throw std::invalid_argument("bias_surface: sample dimension mismatch");
      const auto z = nn::forward(model.bias_net, bias, cache);
      const auto t = column_softmax(z);
      table.push_back({pos, static_cast<int>(bi), t[0], t[1]});
    }
  }
  return table;
}

// --------------------------------------------------------------------------
// PAL

PALModel make_pal(const ModelDims& dims, std::mt19937_64& rng) {
  PALModel model;
  model.dims = dims;
  model.obs_net = nn::make_network({dims.pos_cap, dims.hidden_bias, 1},
                                   {nn::Activation::relu, nn::Activation::sigmoid},
                                   nn::Head::none, rng);
  model.rel_net = nn::make_network(
      {dims.feature_dim, dims.hidden_main, dims.hidden_main, 1},
      {nn::Activation::relu, nn::Activation::relu, nn::Activation::sigmoid},
      nn::Head::none, rng);
  return model;
}

double pal_forward(const PALModel& model, std::span<const double> x,
                   std::span<const double> pos_one_hot) {
  thread_local nn::Cache obs_cache, rel_cache;
  return nn::forward(model.obs_net, pos_one_hot, obs_cache)[0] *
         nn::forward(model.rel_net, x, rel_cache)[0];
}

double pal_score(const PALModel& model, std::span<const double> x) {
  thread_local nn::Cache cache;
  return nn::forward(model.rel_net, x, cache)[0];
}

double pal_loss(const PALModel& model, std::span<const double> x,
                std::span<const double> pos_one_hot, int y) {
  return bce_loss(pal_forward(model, x, pos_one_hot), y);
}

double pal_backward(const PALModel& model, std::span<const double> x,
                    std::span<const double> pos_one_hot, int y, nn::Gradients& g_obs,
                    nn::Gradients& g_rel, PALScratch& scratch) {
  const double a = nn::forward(model.obs_net, pos_one_hot, scratch.obs_cache)[0];
  const double b = nn::forward(model.rel_net, x, scratch.rel_cache)[0];
  const double dp = bce_grad(a * b, y);
  const double da = dp * b, db = dp * a;
  nn::backward(model.obs_net, scratch.obs_cache, std::span(&da, 1), g_obs);
  nn::backward(model.rel_net, scratch.rel_cache, std::span(&db, 1), g_rel);
  return bce_loss(a * b, y);
}

// --------------------------------------------------------------------------
// MMoE-bias

MMoEBiasModel make_mmoe(const ModelDims& dims, std::mt19937_64& rng) {
  MMoEBiasModel model;
  model.dims = dims;
  model.bias_tower = nn::make_network({dims.bias_dim, dims.hidden_bias, 1},
                                      {nn::Activation::relu, nn::Activation::identity},
                                      nn::Head::none, rng);
  model.main_net = nn::make_network(
      {dims.feature_dim, dims.hidden_main, dims.hidden_main, 1},
      {nn::Activation::relu, nn::Activation::relu, nn::Activation::identity},
      nn::Head::none, rng);
  return model;
}

double mmoe_forward(const MMoEBiasModel& model, std::span<const double> x,
                    std::span<const double> bias) {
  thread_local nn::Cache bias_cache, main_cache;
  const double logit = nn::forward(model.bias_tower, bias, bias_cache)[0] +
                       nn::forward(model.main_net, x, main_cache)[0];
  return 1.0 / (1.0 + std::exp(-logit));
}

double mmoe_score(const MMoEBiasModel& model, std::span<const double> x) {
  thread_local nn::Cache cache;
  const double logit = nn::forward(model.main_net, x, cache)[0];
  return 1.0 / (1.0 + std::exp(-logit));
}

double mmoe_loss(const MMoEBiasModel& model, std::span<const double> x,
                 std::span<const double> bias, int y) {
  return bce_loss(mmoe_forward(model, x, bias), y);
}

double mmoe_backward(const MMoEBiasModel& model, std::span<const double> x,
                     std::span<const double> bias, int y, nn::Gradients& g_bias,
                     nn::Gradients& g_main, MMoEScratch& scratch) {
  const double lb = nn::forward(model.bias_tower, bias, scratch.bias_cache)[0];
  const double lm = nn::forward(model.main_net, x, scratch.main_cache)[0];
  const double p = 1.0 / (1.0 + std::exp(-(lb + lm)));
  const double dlogit = p - y;  // BCE through the sigmoid
  nn::backward(model.bias_tower, scratch.bias_cache, std::span(&dlogit, 1), g_bias);
  nn::backward(model.main_net, scratch.main_cache, std::span(&dlogit, 1), g_main);
  return bce_loss(p, y);
}

// --------------------------------------------------------------------------
// Skyline

SkylineModel make_skyline(const ModelDims& dims, std::mt19937_64& rng) {
  SkylineModel model;
  model.dims = dims;
  model.net = nn::make_network(
      {dims.feature_dim, dims.hidden_main, dims.hidden_main, 1},
      {nn::Activation::relu, nn::Activation::relu, nn::Activation::sigmoid},
      nn::Head::none, rng);
  return model;
}

double skyline_score(const SkylineModel& model, std::span<const double> x) {
  thread_local nn::Cache cache;
  return nn::forward(model.net, x, cache)[0];
}

double skyline_loss(const SkylineModel& model, std::span<const double> x, int y) {
  return bce_loss(skyline_score(model, x), y);
}

double skyline_backward(const SkylineModel& model, std::span<const double> x, int y,
                        nn::Gradients& grads, nn::Cache& cache) {
  const double p = nn::forward(model.net, x, cache)[0];
  const double dp = bce_grad(p, y);
  nn::backward(model.net, cache, std::span(&dp, 1), grads);
  return bce_loss(p, y);
}

// --------------------------------------------------------------------------
// List-wise variant

double listwise_soft_ce(std::span<const double> scores, std::span<const double> soft_labels) {
  if (scores.size() != soft_labels.size() || scores.empty())
    throw std::invalid_argument("listwise_soft_ce: length mismatch");
  double label_sum = 0.0;
  for (const double l : soft_labels) {
    if (l < 0.0) throw std::invalid_argument("listwise_soft_ce: negative label");
    label_sum += l;
  }
  if (label_sum <= 0.0) throw std::invalid_argument("listwise_soft_ce: all-zero labels");

  const double mx = *std::max_element(scores.begin(), scores.end());
  double denom = 0.0;
  for (const double s : scores) denom += std::exp(s - mx);
  double loss = 0.0;
  for (size_t i = 0; i < scores.size(); ++i) {
    const double p = clamp_prob(std::exp(scores[i] - mx) / denom);
    loss -= soft_labels[i] / label_sum * std::log(p);
  }
  return loss;
}

double iin_listwise_loss(const IINModel& model, std::span<const ListItem> items,
                         std::span<const double> soft_labels) {
  std::vector<double> scores(items.size());
  double constraint_sum = 0.0;
  for (size_t i = 0; i < items.size(); ++i) {
    const auto f = iin_forward(model, items[i].x, items[i].bias);
    scores[i] = f.p_click[0];
    const double violation = f.t_prime[1] - f.t_prime[0];
    constraint_sum += violation > 0.0 ? violation : 0.0;
  }
  return listwise_soft_ce(scores, soft_labels) + model.alpha * constraint_sum;
}

// --------------------------------------------------------------------------
// Trainers

namespace {

nlohmann::json network_json(const nn::Network& net) {
  nlohmann::json j;
  j["head"] = net.head == nn::Head::softmax ? "softmax" : "none";
  j["layers"] = nlohmann::json::array();
  for (const auto& layer : net.layers)
    j["layers"].push_back({{"in", layer.in},
                           {"out", layer.out},
                           {"activation", nn::activation_name(layer.act)},
                           {"w", layer.w},
                           {"b", layer.b}});
  return j;
}

class IINTrainer final : public Trainer {
 public:
  IINTrainer(const ModelDims& dims, const TrainerHyper& hyper, uint64_t seed) {
    auto rng = make_rng(seed, Stream::model_init, static_cast<uint64_t>(ModelKind::iin));
    model_ = make_iin(dims, hyper.alpha, rng);
    g_rel_ = nn::make_gradients(model_.relevance_net);
    g_bias_ = nn::make_gradients(model_.bias_net);
    opt_rel_ = nn::make_optimizer(model_.relevance_net, nn::OptimizerState::Algo::adam, hyper.lr);
    // The transition matrix moves on a slower clock than the relevance head:
    // the relevance gradient is proportional to the gap between t' columns,
    // so a fast bias net that immediately squeezes the columns toward the
    // base click rate starves r of signal before it can orient.
    opt_bias_ = nn::make_optimizer(model_.bias_net, nn::OptimizerState::Algo::adam,
                                   0.25 * hyper.lr);
  }

  ModelKind kind() const override { return ModelKind::iin; }

  void train_batch(std::span<const std::span<const double>> xs,
                   std::span<const std::span<const double>> biases,
                   std::span<const int8_t> labels) override {
    g_rel_.zero();
    g_bias_.zero();
    for (size_t i = 0; i < xs.size(); ++i)
      iin_backward(model_, xs[i], biases[i], labels[i], g_rel_, g_bias_, scratch_);
    const double inv = 1.0 / static_cast<double>(xs.size());
    g_rel_.scale(inv);
    g_bias_.scale(inv);
    nn::step(model_.relevance_net, g_rel_, opt_rel_);
    nn::step(model_.bias_net, g_bias_, opt_bias_);
  }

  double score(std::span<const double> x) const override { return iin_score(model_, x); }
  const IINModel* iin() const override { return &model_; }

  void save(std::ostream& out) const override {
    nlohmann::json j;
    j["model"] = "iin";
    j["alpha"] = model_.alpha;
    j["pos_cap"] = model_.dims.pos_cap;
    j["bias_dim"] = model_.dims.bias_dim;
    j["relevance_net"] = network_json(model_.relevance_net);
    j["bias_net"] = network_json(model_.bias_net);
    out << j.dump(1) << '\n';
  }

 private:
  IINModel model_;
  nn::Gradients g_rel_, g_bias_;
  nn::OptimizerState opt_rel_, opt_bias_;
  IINScratch scratch_;
};

class PALTrainer final : public Trainer {
 public:
  PALTrainer(const ModelDims& dims, const TrainerHyper& hyper, uint64_t seed) {
    auto rng = make_rng(seed, Stream::model_init, static_cast<uint64_t>(ModelKind::pal));
    model_ = make_pal(dims, rng);
    g_obs_ = nn::make_gradients(model_.obs_net);
    g_rel_ = nn::make_gradients(model_.rel_net);
    opt_obs_ = nn::make_optimizer(model_.obs_net, nn::OptimizerState::Algo::adam, hyper.lr);
    opt_rel_ = nn::make_optimizer(model_.rel_net, nn::OptimizerState::Algo::adam, hyper.lr);
  }

  ModelKind kind() const override { return ModelKind::pal; }

  void train_batch(std::span<const std::span<const double>> xs,
                   std::span<const std::span<const double>> biases,
                   std::span<const int8_t> labels) override {
    g_obs_.zero();
    g_rel_.zero();
    const auto cap = static_cast<size_t>(model_.dims.pos_cap);
    for (size_t i = 0; i < xs.size(); ++i)
      pal_backward(model_, xs[i], biases[i].first(cap), labels[i], g_obs_, g_rel_,
                   scratch_);
    const double inv = 1.0 / static_cast<double>(xs.size());
    g_obs_.scale(inv);
    g_rel_.scale(inv);
    nn::step(model_.obs_net, g_obs_, opt_obs_);
    nn::step(model_.rel_net, g_rel_, opt_rel_);
  }

  double score(std::span<const double> x) const override { return pal_score(model_, x); }

  void save(std::ostream& out) const override {
    nlohmann::json j;
    j["model"] = "pal";
    j["pos_cap"] = model_.dims.pos_cap;
    j["bias_dim"] = model_.dims.bias_dim;
    j["obs_net"] = network_json(model_.obs_net);
    j["rel_net"] = network_json(model_.rel_net);
    out << j.dump(1) << '\n';
  }

 private:
  PALModel model_;
  nn::Gradients g_obs_, g_rel_;
  nn::OptimizerState opt_obs_, opt_rel_;
  PALScratch scratch_;
};

class MMoETrainer final : public Trainer {
 public:
  MMoETrainer(const ModelDims& dims, const TrainerHyper& hyper, uint64_t seed) {
    auto rng = make_rng(seed, Stream::model_init, static_cast<uint64_t>(ModelKind::mmoe));
    model_ = make_mmoe(dims, rng);
    g_bias_ = nn::make_gradients(model_.bias_tower);
    g_main_ = nn::make_gradients(model_.main_net);
    opt_bias_ = nn::make_optimizer(model_.bias_tower, nn::OptimizerState::Algo::adam, hyper.lr);
    opt_main_ = nn::make_optimizer(model_.main_net, nn::OptimizerState::Algo::adam, hyper.lr);
  }

  ModelKind kind() const override { return ModelKind::mmoe; }

  void train_batch(std::span<const std::span<const double>> xs,
                   std::span<const std::span<const double>> biases,
                   std::span<const int8_t> labels) override {
    g_bias_.zero();
    g_main_.zero();
    for (size_t i = 0; i < xs.size(); ++i)
      mmoe_backward(model_, xs[i], biases[i], labels[i], g_bias_, g_main_, scratch_);
    const double inv = 1.0 / static_cast<double>(xs.size());
    g_bias_.scale(inv);
    g_main_.scale(inv);
    nn::step(model_.bias_tower, g_bias_, opt_bias_);
    nn::step(model_.main_net, g_main_, opt_main_);
  }

  double score(std::span<const double> x) const override { return mmoe_score(model_, x); }

  void save(std::ostream& out) const override {
    nlohmann::json j;
    j["model"] = "mmoe";
    j["pos_cap"] = model_.dims.pos_cap;
    j["bias_dim"] = model_.dims.bias_dim;
    j["bias_tower"] = network_json(model_.bias_tower);
    j["main_net"] = network_json(model_.main_net);
    out << j.dump(1) << '\n';
  }

 private:
  MMoEBiasModel model_;
  nn::Gradients g_bias_, g_main_;
  nn::OptimizerState opt_bias_, opt_main_;
  MMoEScratch scratch_;
};

class SkylineTrainer final : public Trainer {
 public:
  SkylineTrainer(const ModelDims& dims, const TrainerHyper& hyper, uint64_t seed) {
    auto rng = make_rng(seed, Stream::model_init, static_cast<uint64_t>(ModelKind::skyline));
    model_ = make_skyline(dims, rng);
    g_ = nn::make_gradients(model_.net);
    opt_ = nn::make_optimizer(model_.net, nn::OptimizerState::Algo::adam, hyper.lr);
  }

  ModelKind kind() const override { return ModelKind::skyline; }

  void train_batch(std::span<const std::span<const double>> xs,
                   std::span<const std::span<const double>>,
                   std::span<const int8_t> labels) override {
    g_.zero();
    for (size_t i = 0; i < xs.size(); ++i)
      skyline_backward(model_, xs[i], labels[i], g_, cache_);
    g_.scale(1.0 / static_cast<double>(xs.size()));
    nn::step(model_.net, g_, opt_);
  }

  double score(std::span<const double> x) const override { return skyline_score(model_, x); }

  void save(std::ostream& out) const override {
    nlohmann::json j;
    j["model"] = "skyline";
    j["pos_cap"] = model_.dims.pos_cap;
    j["bias_dim"] = model_.dims.bias_dim;
    j["net"] = network_json(model_.net);
    out << j.dump(1) << '\n';
  }

 private:
  SkylineModel model_;
  nn::Gradients g_;
  nn::OptimizerState opt_;
  nn::Cache cache_;
};

}  // namespace

std::unique_ptr<Trainer> make_trainer(ModelKind kind, const ModelDims& dims,
                                      const TrainerHyper& hyper, uint64_t master_seed) {
  switch (kind) {
    case ModelKind::iin: return std::make_unique<IINTrainer>(dims, hyper, master_seed);
    case ModelKind::pal: return std::make_unique<PALTrainer>(dims, hyper, master_seed);
    case ModelKind::mmoe: return std::make_unique<MMoETrainer>(dims, hyper, master_seed);
    case ModelKind::skyline: return std::make_unique<SkylineTrainer>(dims, hyper, master_seed);
  }
  throw ConfigError("unknown model kind");
}

}  // namespace ctrlab
