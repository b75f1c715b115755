#pragma once
// The four trainable models. IIN marginalizes the click over a latent
// relevance variable through a bias-conditioned 2x2 transition matrix; PAL
// multiplies an examination probability with a conditional click rate;
// MMoE-bias adds a bias-tower logit to a relevance logit; the skyline trains
// directly on true relevance labels as an upper reference. Each model exposes
// a training forward pass (position/bias aware) and a position-free inference
// scorer.

#include <array>
#include <cstdint>
#include <iosfwd>
#include <memory>
#include <span>
#include <vector>

#include "ctrlab/nn.hpp"

namespace ctrlab {

enum class ModelKind { iin, pal, mmoe, skyline };

ModelKind model_kind_from_string(const std::string& name);
std::string to_string(ModelKind kind);

struct ModelDims {
  int feature_dim = 0;
  int bias_dim = 0;  // position one-hot width plus extra bias features
  int pos_cap = 10;  // leading one-hot width inside the bias vector
  int hidden_main = 64;
  int hidden_bias = 16;
};

// --------------------------------------------------------------------------
// IIN

struct IINModel {
  nn::Network relevance_net;  // x -> 2-way softmax r = [P(r=1|x), P(r=0|x)]
  nn::Network bias_net;       // bias vec -> 4 logits, column-softmaxed to t'
  double alpha = 100.0;
  ModelDims dims;
};

IINModel make_iin(const ModelDims& dims, double alpha, std::mt19937_64& rng);

// t_prime is row-major 2x2: row i is y in {1, 0}, column j is r in {1, 0};
// each column sums to 1. p_click = [P(y=1|x,pos,b), P(y=0|x,pos,b)].
struct IINForward {
  std::array<double, 2> r;
  std::array<double, 4> t_prime;
  std::array<double, 2> p_click;
};

IINForward iin_forward(const IINModel& model, std::span<const double> x,
                       std::span<const double> bias);

// CE(p_click, one-hot(y)) + alpha * relu(t'01 - t'00).
double iin_loss(const IINModel& model, std::span<const double> x,
                std::span<const double> bias, int y);

// P(r=1|x); position and bias inputs are not consumed.
double iin_score(const IINModel& model, std::span<const double> x);

struct IINScratch {
  nn::Cache rel_cache, bias_cache;
};

// Accumulates gradients for both networks; returns the loss.
double iin_backward(const IINModel& model, std::span<const double> x,
                    std::span<const double> bias, int y, nn::Gradients& g_rel,
                    nn::Gradients& g_bias, IINScratch& scratch);

// t' row 0 evaluated over a (position, extra-bias sample) grid.
struct BiasSurfaceEntry {
  int pos = 0;
  int b_index = 0;
  double p_click_rel = 0.0;    // P(y=1 | r=1, pos, b)
  double p_click_irrel = 0.0;  // P(y=1 | r=0, pos, b)
};

std::vector<BiasSurfaceEntry> bias_surface(const IINModel& model,
                                           const std::vector<int>& positions,
                                           const std::vector<std::vector<double>>& b_samples);

// --------------------------------------------------------------------------
// Baselines and skyline

struct PALModel {
  nn::Network obs_net;  // position one-hot -> sigmoid scalar
  nn::Network rel_net;  // x -> sigmoid scalar
  ModelDims dims;
};

PALModel make_pal(const ModelDims& dims, std::mt19937_64& rng);
double pal_forward(const PALModel& model, std::span<const double> x,
                   std::span<const double> pos_one_hot);
double pal_score(const PALModel& model, std::span<const double> x);
double pal_loss(const PALModel& model, std::span<const double> x,
                std::span<const double> pos_one_hot, int y);

struct PALScratch {
  nn::Cache obs_cache, rel_cache;
};

double pal_backward(const PALModel& model, std::span<const double> x,
                    std::span<const double> pos_one_hot, int y, nn::Gradients& g_obs,
                    nn::Gradients& g_rel, PALScratch& scratch);

struct MMoEBiasModel {
  nn::Network bias_tower;  // bias vec -> scalar logit
  nn::Network main_net;    // x -> scalar logit
  ModelDims dims;
};

MMoEBiasModel make_mmoe(const ModelDims& dims, std::mt19937_64& rng);
double mmoe_forward(const MMoEBiasModel& model, std::span<const double> x,
                    std::span<const double> bias);
double mmoe_score(const MMoEBiasModel& model, std::span<const double> x);
double mmoe_loss(const MMoEBiasModel& model, std::span<const double> x,
                 std::span<const double> bias, int y);

struct MMoEScratch {
  nn::Cache bias_cache, main_cache;
};

double mmoe_backward(const MMoEBiasModel& model, std::span<const double> x,
                     std::span<const double> bias, int y, nn::Gradients& g_bias,
                     nn::Gradients& g_main, MMoEScratch& scratch);

struct SkylineModel {
  nn::Network net;  // x -> sigmoid scalar
  ModelDims dims;
};

SkylineModel make_skyline(const ModelDims& dims, std::mt19937_64& rng);
double skyline_score(const SkylineModel& model, std::span<const double> x);
double skyline_loss(const SkylineModel& model, std::span<const double> x, int y);
double skyline_backward(const SkylineModel& model, std::span<const double> x, int y,
                        nn::Gradients& grads, nn::Cache& cache);

// --------------------------------------------------------------------------
// List-wise variant

// CE between softmax(scores) and soft_labels normalized to sum 1.
double listwise_soft_ce(std::span<const double> scores, std::span<const double> soft_labels);

struct ListItem {
  std::span<const double> x;
  std::span<const double> bias;
};

// List-wise soft CE over per-item P(y=1), plus alpha times the summed
// per-item constraint values.
double iin_listwise_loss(const IINModel& model, std::span<const ListItem> items,
                         std::span<const double> soft_labels);

// --------------------------------------------------------------------------
// Uniform training interface used by the harness

class Trainer {
 public:
  virtual ~Trainer() = default;
  virtual ModelKind kind() const = 0;
  // One optimizer step on the mean gradient of the batch. x/bias point at
  // per-example vectors; labels are clicks, or true relevance for skyline.
  virtual void train_batch(std::span<const std::span<const double>> xs,
                           std::span<const std::span<const double>> biases,
                           std::span<const int8_t> labels) = 0;
  virtual double score(std::span<const double> x) const = 0;
  virtual const IINModel* iin() const { return nullptr; }
  virtual void save(std::ostream& out) const = 0;
};

struct TrainerHyper {
  double lr = 1e-3;
  double alpha = 100.0;
};

std::unique_ptr<Trainer> make_trainer(ModelKind kind, const ModelDims& dims,
                                      const TrainerHyper& hyper, uint64_t master_seed);

}  // namespace ctrlab
