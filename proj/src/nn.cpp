#include "fcrx/nn.hpp"

#include <cmath>

#include "fcrx/error.hpp"

namespace fcrx::nn {

SupConResult supcon_loss(const Vec& z_image, const std::vector<Vec>& z_real,
                         const std::vector<Vec>& z_fake, double tau,
                         bool include_positive) {
  if (z_fake.empty()) throw usage_error("supcon_loss: fake set is empty");
  if (z_real.empty()) throw usage_error("supcon_loss: real set is empty");
  if (tau <= 0.0) throw usage_error("supcon_loss: tau must be positive");
  const Eigen::Index d = z_image.size();
  for (const auto& z : z_real)
    if (z.size() != d) throw usage_error("supcon_loss: real embedding dim mismatch");
  for (const auto& z : z_fake)
    if (z.size() != d) throw usage_error("supcon_loss: fake embedding dim mismatch");

  const size_t nr = z_real.size(), nf = z_fake.size();
  std::vector<double> s_real(nr), s_fake(nf);
  for (size_t j = 0; j < nr; ++j) s_real[j] = z_image.dot(z_real[j]);
  for (size_t k = 0; k < nf; ++k) s_fake[k] = z_image.dot(z_fake[k]);

  SupConResult out;
  out.d_image = Vec::Zero(d);
  out.d_real.assign(nr, Vec::Zero(d));
  out.d_fake.assign(nf, Vec::Zero(d));

  // Stable log-sum-exp over the fake similarities (shared by every real
  // term when the positive is excluded from the denominator).
  double mf = s_fake[0];
  for (double s : s_fake) mf = std::max(mf, s);

  std::vector<double> w_fake_total(nf, 0.0);
  std::vector<double> w_real(nr, 0.0);
  for (size_t j = 0; j < nr; ++j) {
    double m = include_positive ? std::max(mf, s_real[j]) : mf;
    double denom = 0.0;
    for (double s : s_fake) denom += std::exp((s - m) / tau);
    if (include_positive) denom += std::exp((s_real[j] - m) / tau);
    out.loss += -(s_real[j] - m) / tau + std::log(denom);

    // d(-log term)/d s_fake_k = softmax_k / tau; d/d s_real_j = (p_pos - 1)/tau.
    double p_pos = include_positive ? std::exp((s_real[j] - m) / tau) / denom : 0.0;
    w_real[j] = (p_pos - 1.0) / tau;
    for (size_t k = 0; k < nf; ++k)
      w_fake_total[k] += std::exp((s_fake[k] - m) / tau) / denom / tau;
  }
  const double inv_nr = 1.0 / static_cast<double>(nr);
  out.loss *= inv_nr;

  for (size_t j = 0; j < nr; ++j) {
    double wj = w_real[j] * inv_nr;
    out.d_real[j] = wj * z_image;
    out.d_image += wj * z_real[j];
  }
  for (size_t k = 0; k < nf; ++k) {
    double wk = w_fake_total[k] * inv_nr;
    out.d_fake[k] = wk * z_image;
    out.d_image += wk * z_fake[k];
  }
  return out;
}

double bce(double p, double target) {
  if (p <= 0.0 || p >= 1.0) throw usage_error("bce: probability must lie in (0,1)");
  return -(target * std::log(p) + (1.0 - target) * std::log(1.0 - p));
}

RegLossResult regression_loss(const Vec5& y, const Vec5& y_gt) {
  RegLossResult out;
  out.grad.setZero();

  // L1 over the box coordinates.
  for (int i = 0; i < 4; ++i) {
    double d = y[i] - y_gt[i];
    out.l1 += std::abs(d);
    out.grad[i] += d > 0.0 ? 1.0 : (d < 0.0 ? -1.0 : 0.0);
  }

  // 1 - GIoU; two zero-area boxes contribute nothing.
  BBox a{y[0], y[1], y[2], y[3]};
  BBox b{y_gt[0], y_gt[1], y_gt[2], y_gt[3]};
  if (a.area() > 0.0 || b.area() > 0.0) {
    out.giou = 1.0 - giou(a, b);
    auto g = giou_grad(a, b);
    for (int i = 0; i < 4; ++i) out.grad[i] -= g[i];
  }

  // MSE over the full 5-vector (squared L2 norm).
  Vec5 diff = y - y_gt;
  out.mse = diff.squaredNorm();
  out.grad += 2.0 * diff;

  // BCE on the veracity bit.
  double e = y[4], eg = y_gt[4];
  out.bce = bce(e, eg);
  out.grad[4] += -(eg / e) + (1.0 - eg) / (1.0 - e);

  out.loss = out.l1 + out.giou + out.mse + out.bce;
  return out;
}

Vec relu(const Vec& x) { return x.cwiseMax(0.0); }

Vec relu_backward(const Vec& x, const Vec& dy) {
  return (x.array() > 0.0).select(dy, Vec::Zero(dy.size()));
}

Vec sigmoid(const Vec& x) {
  return x.unaryExpr([](double v) { return sigmoid(v); });
}

Vec sigmoid_backward(const Vec& s, const Vec& dy) {
  return dy.array() * s.array() * (1.0 - s.array());
}

Vec dropout_mask(Eigen::Index n, double p, std::mt19937_64& rng) {
  if (p < 0.0 || p >= 1.0) throw usage_error("dropout: p must lie in [0,1)");
  if (p == 0.0) return Vec::Ones(n);
  std::uniform_real_distribution<double> u(0.0, 1.0);
  Vec mask(n);
  const double scale = 1.0 / (1.0 - p);
  for (Eigen::Index i = 0; i < n; ++i) mask[i] = u(rng) < p ? 0.0 : scale;
  return mask;
}

Vec l2_normalize(const Vec& x) {
  double n = x.norm();
  if (n == 0.0) return x;
  return x / n;
}

Vec l2_normalize_backward(const Vec& x, const Vec& dz) {
  double n = x.norm();
  if (n == 0.0) return dz;
  Vec z = x / n;
  return (dz - z * z.dot(dz)) / n;
}

double cosine_similarity(const Vec& a, const Vec& b) {
  if (a.size() != b.size())
    throw usage_error("cosine_similarity: dim mismatch " + std::to_string(a.size()) +
                      " vs " + std::to_string(b.size()));
  double na = a.norm(), nb = b.norm();
  if (na == 0.0 || nb == 0.0) return 0.0;
  return a.dot(b) / (na * nb);
}

Vec linear_forward(const Mat& W, const Vec& b, const Vec& x) {
  if (W.cols() != x.size())
    throw usage_error("linear: weight cols " + std::to_string(W.cols()) +
                      " vs input " + std::to_string(x.size()));
  if (b.size() == 0) return W * x;
  return W * x + b;
}

LinearGrads linear_backward(const Mat& W, const Vec& x, const Vec& dy) {
  LinearGrads g;
  g.dW = dy * x.transpose();
  g.db = dy;
  g.dx = W.transpose() * dy;
  return g;
}

double lr_schedule(long step, const Schedule& s) {
  if (s.warmup_steps > 0 && step < s.warmup_steps)
    return s.max_lr * static_cast<double>(step) / static_cast<double>(s.warmup_steps);
  long decay_steps = s.total_steps - s.warmup_steps;
  if (decay_steps <= 0) return s.max_lr;
  double t = static_cast<double>(step - s.warmup_steps) / static_cast<double>(decay_steps);
  t = std::min(t, 1.0);
  return 0.5 * s.max_lr * (1.0 + std::cos(M_PI * t));
}

void adamw_step(std::vector<Mat*> params, const std::vector<const Mat*>& grads,
                AdamWState& state, double lr, const AdamWConfig& cfg) {
  if (params.size() != grads.size())
    throw usage_error("adamw: params/grads count mismatch");
  if (state.m.empty()) {
    for (const Mat* p : params) {
      state.m.emplace_back(Mat::Zero(p->rows(), p->cols()));
      state.v.emplace_back(Mat::Zero(p->rows(), p->cols()));
    }
  }
  state.step += 1;
  const double bc1 = 1.0 - std::pow(cfg.beta1, static_cast<double>(state.step));
  const double bc2 = 1.0 - std::pow(cfg.beta2, static_cast<double>(state.step));
  for (size_t i = 0; i < params.size(); ++i) {
    Mat& p = *params[i];
    const Mat& g = *grads[i];
    Mat& m = state.m[i];
    Mat& v = state.v[i];
    m = cfg.beta1 * m + (1.0 - cfg.beta1) * g;
    v = cfg.beta2 * v + (1.0 - cfg.beta2) * g.cwiseProduct(g);
    Mat mhat = m / bc1;
    Mat vhat = v / bc2;
    p.array() -= lr * cfg.weight_decay * p.array();  // decoupled decay
    p.array() -= lr * mhat.array() / (vhat.array().sqrt() + cfg.eps);
  }
}

}  // namespace fcrx::nn
