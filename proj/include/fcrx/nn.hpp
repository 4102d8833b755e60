#pragma once

#include <Eigen/Dense>
#include <cstdint>
#include <random>
#include <vector>

#include "fcrx/bbox.hpp"

namespace fcrx::nn {

using Vec = Eigen::VectorXd;
using Mat = Eigen::MatrixXd;
using Vec5 = Eigen::Matrix<double, 5, 1>;

// ---- Contrastive loss -------------------------------------------------

struct SupConResult {
  double loss = 0.0;
  Vec d_image;
  std::vector<Vec> d_real;
  std::vector<Vec> d_fake;
};

// Multi-label cross-modal contrastive loss over one sample:
//   -1/|R| sum_{r in R} log( exp(s_r/tau) / sum_{f in F} exp(s_f/tau) )
// with s the dot products of the (caller-normalized) embeddings.  The
// denominator ranges over the fake set only; include_positive adds the
// positive term for comparison with the standard InfoNCE form.
SupConResult supcon_loss(const Vec& z_image, const std::vector<Vec>& z_real,
                         const std::vector<Vec>& z_fake, double tau,
                         bool include_positive = false);

// ---- Combined regression loss -----------------------------------------

struct RegLossResult {
  double loss = 0.0;
  double l1 = 0.0;
  double giou = 0.0;  // 1 - GIoU term
  double mse = 0.0;
  double bce = 0.0;
  Vec5 grad;  // d loss / d y
};

// L1(box) + (1 - GIoU)(box) + MSE(5-vector) + BCE(E).  y carries a
// post-sigmoid veracity in (0,1); y_gt's veracity is 0 or 1.  Two
// zero-area boxes contribute no GIoU term.
RegLossResult regression_loss(const Vec5& y, const Vec5& y_gt);

double bce(double p, double target);

// ---- Elementwise / layer primitives -----------------------------------

Vec relu(const Vec& x);
Vec relu_backward(const Vec& x, const Vec& dy);
Vec sigmoid(const Vec& x);
inline double sigmoid(double x) { return 1.0 / (1.0 + std::exp(-x)); }
// d/dx given the forward output s = sigmoid(x).
Vec sigmoid_backward(const Vec& s, const Vec& dy);

// Inverted dropout; identity when p == 0.  The returned mask already
// carries the 1/(1-p) scale so backward is a plain product.
Vec dropout_mask(Eigen::Index n, double p, std::mt19937_64& rng);

Vec l2_normalize(const Vec& x);
Vec l2_normalize_backward(const Vec& x, const Vec& dz);

double cosine_similarity(const Vec& a, const Vec& b);

struct LinearGrads {
  Mat dW;
  Vec db;
  Vec dx;
};
Vec linear_forward(const Mat& W, const Vec& b, const Vec& x);
LinearGrads linear_backward(const Mat& W, const Vec& x, const Vec& dy);

// ---- Optimizer and schedule -------------------------------------------

struct Schedule {
  double max_lr = 1e-5;
  long warmup_steps = 50;
  long total_steps = 1000;
};

// Linear ramp 0 -> max_lr over warmup_steps, then cosine decay to 0.
double lr_schedule(long step, const Schedule& s);

struct AdamWConfig {
  double beta1 = 0.9;
  double beta2 = 0.999;
  double eps = 1e-8;
  double weight_decay = 0.01;
};

// One slot per parameter block, shapes fixed at first use.
struct AdamWState {
  std::vector<Mat> m;
  std::vector<Mat> v;
  long step = 0;
};

// Decoupled weight decay with standard bias correction.  params and
// grads are parallel lists of blocks; lr comes from the schedule.
void adamw_step(std::vector<Mat*> params, const std::vector<const Mat*>& grads,
                AdamWState& state, double lr, const AdamWConfig& cfg);

}  // namespace fcrx::nn
