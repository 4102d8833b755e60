#pragma once

#include <optional>
#include <string>
#include <vector>

#include "fcrx/featurizer.hpp"
#include "fcrx/nn.hpp"
#include "fcrx/synth.hpp"

namespace fcrx {

enum class Variant { comb, bce_encoder, frozen_encoder, dual_head };

Variant variant_from_string(const std::string& name);
std::string variant_to_string(Variant v);

struct ModelConfig {
  int image_dim = 768;
  int text_dim = 512;
  int proj_dim = 512;    // regressor input is 2 * proj_dim
  int hidden_dim = 512;
  double dropout = 0.1;
  double tau = 0.07;
  int epochs = 100;
  int batch_size = 32;
  double max_lr = 1e-5;
  double weight_decay = 0.01;
  long warmup_steps = 50;
  Variant variant = Variant::comb;
  bool include_positive = false;   // Eq.-style denominator also covering the positive
  int contrastive_warm_epochs = 0; // optional contrastive-only warm phase
};

// Projection layers are single linear maps without bias so that scaling
// an embedding before L2 normalization cannot change predictions.
struct ModelParams {
  nn::Mat Wi;  // proj_dim x image_dim
  nn::Mat Wt;  // proj_dim x text_dim
  nn::Mat W1;  // hidden x 2*proj_dim
  nn::Mat b1;  // hidden x 1
  nn::Mat W2;  // 5 x hidden (single-head variants)
  nn::Mat b2;
  nn::Mat W2box;  // 4 x hidden (dual_head)
  nn::Mat b2box;
  nn::Mat W2cls;  // 1 x hidden (dual_head)
  nn::Mat b2cls;
};

struct EpochLoss {
  double encoder = 0.0;
  double regression = 0.0;
};

struct ModelCheckpoint {
  int version = 1;
  ModelConfig config;
  ModelParams params;
  nn::AdamWState opt;
  long step = 0;
  std::uint64_t seed = 0;
  std::string rng_state;
  std::vector<EpochLoss> loss_log;
};

// Predicted boxes with area below this are reported as the exact zero box,
// the sentinel for "no location" (sigmoid heads can only approach it).
inline constexpr double kZeroSnapArea = 4e-3;

struct Prediction {
  double e_hat = 0.0;  // sigmoid veracity in (0,1)
  BBox box;
  bool verdict() const { return e_hat >= 0.5; }
};

struct Metrics {
  double accuracy = 0.0;
  double miou = 0.0;
  int miou_pairs = 0;
  int miou_excluded = 0;  // zero-box ground truths
  int n_pairs = 0;
  std::vector<std::pair<double, double>> roc;  // (fpr, tpr) per threshold
};

ModelCheckpoint train(const std::vector<Sample>& dataset, const Featurizer& featurizer,
                      const ModelConfig& config, std::uint64_t seed);

Prediction predict(const ModelCheckpoint& ckpt, const Featurizer& featurizer,
                   const std::string& image_id, bool present, const std::string& core);

Metrics evaluate(const ModelCheckpoint& ckpt, const Featurizer& featurizer,
                 const std::vector<Sample>& dataset);

void save_checkpoint(const ModelCheckpoint& ckpt, const std::string& path);
ModelCheckpoint load_checkpoint(const std::string& path);

}  // namespace fcrx
