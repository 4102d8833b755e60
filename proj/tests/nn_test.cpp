#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include "doctest.h"

#include <cmath>
#include <random>

#include "fcrx/bbox.hpp"
#include "fcrx/nn.hpp"

using namespace fcrx;
using nn::Mat;
using nn::Vec;
using nn::Vec5;

namespace {

constexpr double kFdStep = 1e-5;
constexpr double kGradTol = 1e-4;

double rel_err(double got, double want) {
  double denom = std::max({std::abs(got), std::abs(want), 1e-8});
  return std::abs(got - want) / denom;
}

Vec random_vec(int n, std::mt19937_64& rng, double scale = 1.0) {
  std::normal_distribution<double> g(0.0, scale);
  Vec v(n);
  for (int i = 0; i < n; ++i) v[i] = g(rng);
  return v;
}

}  // namespace

TEST_CASE("iou and giou basics") {
  BBox a{0.0, 0.0, 0.2, 0.2};
  BBox b{0.8, 0.8, 0.2, 0.2};
  CHECK(iou(a, b) == doctest::Approx(0.0));
  // Disjoint corners: union 0.08, hull 1.0, so giou = 0 - 0.92.
  CHECK(std::abs(giou(a, b) - (-0.92)) < 1e-9);
  CHECK(iou(a, a) == doctest::Approx(1.0));
  CHECK(giou(a, a) == doctest::Approx(1.0));
  CHECK(iou(BBox{}, BBox{}) == doctest::Approx(1.0));

  BBox c{0.1, 0.1, 0.4, 0.4};
  BBox d{0.3, 0.3, 0.4, 0.4};
  // Overlap 0.2x0.2 = 0.04; union 0.32 - 0.04 = 0.28.
  CHECK(iou(c, d) == doctest::Approx(0.04 / 0.28));
  CHECK(giou(c, d) <= iou(c, d));
  CHECK(giou(c, d) >= -1.0);
}

TEST_CASE("giou gradient matches finite differences") {
  std::mt19937_64 rng(7);
  std::uniform_real_distribution<double> u(0.05, 0.45);
  int checked = 0;
  for (int trial = 0; trial < 40; ++trial) {
    BBox a{u(rng), u(rng), u(rng), u(rng)};
    BBox b{u(rng), u(rng), u(rng), u(rng)};
    auto g = giou_grad(a, b);
    double* fields[4] = {&a.x, &a.y, &a.w, &a.h};
    for (int k = 0; k < 4; ++k) {
      double saved = *fields[k];
      *fields[k] = saved + kFdStep;
      double up = giou(a, b);
      *fields[k] = saved - kFdStep;
      double dn = giou(a, b);
      *fields[k] = saved;
      double fd = (up - dn) / (2 * kFdStep);
      if (std::abs(fd) < 1e-7 && std::abs(g[k]) < 1e-7) continue;
      CHECK(rel_err(g[k], fd) < kGradTol);
      ++checked;
    }
  }
  CHECK(checked >= 10);
}

TEST_CASE("supcon equal-similarity single pair is exactly zero") {
  Vec z = Vec::Zero(4);
  z[0] = 1.0;
  std::vector<Vec> real{z}, fake{z};
  auto r = nn::supcon_loss(z, real, fake, 0.07);
  CHECK(r.loss == doctest::Approx(0.0).epsilon(1e-12));
}

TEST_CASE("supcon can be negative when the positive dominates") {
  // s_pos = 1, s_fake = 0, tau = 1: loss = -(1 - log... ) = -(1) + log(e^0) = -1.
  Vec img = Vec::Zero(3), pos = Vec::Zero(3), fake = Vec::Zero(3);
  img[0] = 1.0;
  pos[0] = 1.0;
  fake[1] = 1.0;  // orthogonal
  auto r = nn::supcon_loss(img, {pos}, {fake}, 1.0);
  CHECK(r.loss == doctest::Approx(-1.0).epsilon(1e-12));
}

TEST_CASE("supcon include_positive reproduces InfoNCE and is non-negative") {
  std::mt19937_64 rng(3);
  for (int t = 0; t < 20; ++t) {
    Vec img = random_vec(6, rng);
    std::vector<Vec> real{random_vec(6, rng)};
    std::vector<Vec> fake{random_vec(6, rng), random_vec(6, rng)};
    auto r = nn::supcon_loss(img, real, fake, 0.5, true);
    CHECK(r.loss >= -1e-12);
  }
}

TEST_CASE("supcon gradients match finite differences") {
  std::mt19937_64 rng(11);
  for (int trial = 0; trial < 12; ++trial) {
    int d = 5;
    Vec img = random_vec(d, rng);
    std::vector<Vec> real{random_vec(d, rng), random_vec(d, rng)};
    std::vector<Vec> fake{random_vec(d, rng), random_vec(d, rng), random_vec(d, rng)};
    bool incl = trial % 2 == 0;
    auto r = nn::supcon_loss(img, real, fake, 0.3, incl);

    auto loss_at = [&]() { return nn::supcon_loss(img, real, fake, 0.3, incl).loss; };
    auto check_vec = [&](Vec& v, const Vec& grad) {
      for (int i = 0; i < d; ++i) {
        double saved = v[i];
        v[i] = saved + kFdStep;
        double up = loss_at();
        v[i] = saved - kFdStep;
        double dn = loss_at();
        v[i] = saved;
        CHECK(rel_err(grad[i], (up - dn) / (2 * kFdStep)) < kGradTol);
      }
    };
    check_vec(img, r.d_image);
    for (size_t j = 0; j < real.size(); ++j) check_vec(real[j], r.d_real[j]);
    for (size_t k = 0; k < fake.size(); ++k) check_vec(fake[k], r.d_fake[k]);
  }
}

TEST_CASE("regression loss: both-zero boxes contribute no giou term") {
  Vec5 y, gt;
  y << 0, 0, 0, 0, 0.5;
  gt << 0, 0, 0, 0, 1.0;
  auto r = nn::regression_loss(y, gt);
  CHECK(r.giou == doctest::Approx(0.0));
  CHECK(r.l1 == doctest::Approx(0.0));
  CHECK(r.bce == doctest::Approx(-std::log(0.5)));
}

TEST_CASE("regression loss decomposition on the disjoint-box case") {
  Vec5 y, gt;
  y << 0.0, 0.0, 0.2, 0.2, 0.9;
  gt << 0.8, 0.8, 0.2, 0.2, 1.0;
  auto r = nn::regression_loss(y, gt);
  CHECK(r.l1 == doctest::Approx(1.6));  // |dx|+|dy|+|dw|+|dh| = .8+.8+0+0
  CHECK(r.giou == doctest::Approx(1.92));     // 1 - (-0.92)
  double mse = (0.64 + 0.64 + 0.0 + 0.0 + 0.01);
  CHECK(r.mse == doctest::Approx(mse));
  CHECK(r.bce == doctest::Approx(-std::log(0.9)));
  CHECK(r.loss == doctest::Approx(r.l1 + r.giou + r.mse + r.bce));
}

TEST_CASE("regression loss gradient matches finite differences") {
  std::mt19937_64 rng(23);
  std::uniform_real_distribution<double> u(0.1, 0.4);
  std::uniform_real_distribution<double> p(0.05, 0.95);
  for (int trial = 0; trial < 15; ++trial) {
    Vec5 y, gt;
    y << u(rng), u(rng), u(rng), u(rng), p(rng);
    gt << u(rng), u(rng), u(rng), u(rng), (trial % 2 ? 1.0 : 0.0);
    auto r = nn::regression_loss(y, gt);
    for (int i = 0; i < 5; ++i) {
      double saved = y[i];
      y[i] = saved + kFdStep;
      double up = nn::regression_loss(y, gt).loss;
      y[i] = saved - kFdStep;
      double dn = nn::regression_loss(y, gt).loss;
      y[i] = saved;
      CHECK(rel_err(r.grad[i], (up - dn) / (2 * kFdStep)) < kGradTol);
    }
  }
}

TEST_CASE("linear / relu / sigmoid / l2-normalize backward vs finite differences") {
  std::mt19937_64 rng(5);
  for (int trial = 0; trial < 10; ++trial) {
    int n = 4, m = 3;
    Mat W(m, n);
    for (int i = 0; i < m; ++i)
      for (int j = 0; j < n; ++j) W(i, j) = random_vec(1, rng)[0];
    Vec b = random_vec(m, rng);
    Vec x = random_vec(n, rng);
    Vec dy = random_vec(m, rng);

    auto scalarize = [&](const Vec& y) { return dy.dot(y); };
    auto lg = nn::linear_backward(W, x, dy);
    for (int j = 0; j < n; ++j) {
      double saved = x[j];
      x[j] = saved + kFdStep;
      double up = scalarize(nn::linear_forward(W, b, x));
      x[j] = saved - kFdStep;
      double dn = scalarize(nn::linear_forward(W, b, x));
      x[j] = saved;
      CHECK(rel_err(lg.dx[j], (up - dn) / (2 * kFdStep)) < kGradTol);
    }
    for (int i = 0; i < m; ++i)
      for (int j = 0; j < n; ++j) {
        double saved = W(i, j);
        W(i, j) = saved + kFdStep;
        double up = scalarize(nn::linear_forward(W, b, x));
        W(i, j) = saved - kFdStep;
        double dn = scalarize(nn::linear_forward(W, b, x));
        W(i, j) = saved;
        CHECK(rel_err(lg.dW(i, j), (up - dn) / (2 * kFdStep)) < kGradTol);
      }
    CHECK((lg.db - dy).norm() == doctest::Approx(0.0));

    Vec xr = random_vec(n, rng);
    Vec dyr = random_vec(n, rng);
    Vec gr = nn::relu_backward(xr, dyr);
    Vec gs = nn::sigmoid_backward(nn::sigmoid(xr), dyr);
    Vec gn = nn::l2_normalize_backward(xr, dyr);
    for (int j = 0; j < n; ++j) {
      double saved = xr[j];
      auto fd = [&](auto&& f) {
        xr[j] = saved + kFdStep;
        double up = dyr.dot(f(xr));
        xr[j] = saved - kFdStep;
        double dn = dyr.dot(f(xr));
        xr[j] = saved;
        return (up - dn) / (2 * kFdStep);
      };
      if (std::abs(xr[j]) > 1e-3)  // relu kink
        CHECK(rel_err(gr[j], fd([](const Vec& v) { return nn::relu(v); })) < kGradTol);
      CHECK(rel_err(gs[j], fd([](const Vec& v) { return nn::sigmoid(v); })) < kGradTol);
      CHECK(rel_err(gn[j], fd([](const Vec& v) { return nn::l2_normalize(v); })) < kGradTol);
    }
  }
}

TEST_CASE("dropout mask is inverted-scaled and identity at p=0") {
  std::mt19937_64 rng(9);
  Vec m0 = nn::dropout_mask(8, 0.0, rng);
  CHECK((m0.array() == 1.0).all());
  int kept = 0;
  const double p = 0.4;
  for (int t = 0; t < 200; ++t) {
    Vec m = nn::dropout_mask(50, p, rng);
    for (int i = 0; i < m.size(); ++i) {
      CHECK((m[i] == 0.0 || m[i] == doctest::Approx(1.0 / (1.0 - p))));
      if (m[i] != 0.0) ++kept;
    }
  }
  double keep_rate = kept / (200.0 * 50.0);
  CHECK(keep_rate == doctest::Approx(1.0 - p).epsilon(0.05));
}

TEST_CASE("lr schedule endpoints and shape") {
  nn::Schedule s{1e-3, 50, 1000};
  CHECK(nn::lr_schedule(0, s) == doctest::Approx(0.0));
  CHECK(nn::lr_schedule(25, s) == doctest::Approx(0.5e-3));
  CHECK(nn::lr_schedule(50, s) == doctest::Approx(1e-3));
  CHECK(nn::lr_schedule(1000, s) == doctest::Approx(0.0).epsilon(1e-9));
  // Cosine midpoint between warmup and the end.
  CHECK(nn::lr_schedule(525, s) == doctest::Approx(0.5e-3));
  // Monotone decay after warmup.
  for (long t = 51; t <= 999; ++t)
    CHECK(nn::lr_schedule(t + 1, s) <= nn::lr_schedule(t, s) + 1e-15);
}

TEST_CASE("adamw: single step matches hand computation, decay decoupled") {
  Mat p(1, 1), g(1, 1);
  p(0, 0) = 1.0;
  g(0, 0) = 0.5;
  nn::AdamWConfig cfg;
  cfg.weight_decay = 0.1;
  nn::AdamWState st;
  double lr = 0.01;
  nn::adamw_step({&p}, {&g}, st, lr, cfg);
  // After bias correction the first-step moment ratio is g/sqrt(g^2) = 1,
  // so the update is decay plus lr * g/(|g| + eps').
  double expect = 1.0 - lr * 0.1 * 1.0 - lr * (0.5 / (0.5 + cfg.eps));
  CHECK(p(0, 0) == doctest::Approx(expect).epsilon(1e-6));

  // Zero gradient with decay only shrinks the weight.
  Mat p2(1, 1), g2(1, 1);
  p2(0, 0) = 2.0;
  g2(0, 0) = 0.0;
  nn::AdamWState st2;
  nn::adamw_step({&p2}, {&g2}, st2, lr, cfg);
  CHECK(p2(0, 0) == doctest::Approx(2.0 * (1.0 - lr * 0.1)));
}

TEST_CASE("cosine similarity of l2-normalized vectors is their dot product") {
  std::mt19937_64 rng(2);
  for (int t = 0; t < 10; ++t) {
    Vec a = random_vec(6, rng), b = random_vec(6, rng);
    double c = nn::cosine_similarity(a, b);
    CHECK(c == doctest::Approx(nn::l2_normalize(a).dot(nn::l2_normalize(b))));
    CHECK(c <= 1.0 + 1e-12);
    CHECK(c >= -1.0 - 1e-12);
  }
}
