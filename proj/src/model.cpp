#include "fcrx/model.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <numeric>
#include <sstream>

#include "fcrx/error.hpp"
#include "json.hpp"

namespace fcrx {

using nn::Mat;
using nn::Vec;
using nn::Vec5;

Variant variant_from_string(const std::string& name) {
  if (name == "comb") return Variant::comb;
  if (name == "bce_encoder") return Variant::bce_encoder;
  if (name == "frozen_encoder") return Variant::frozen_encoder;
  if (name == "dual_head") return Variant::dual_head;
  throw usage_error("unknown model variant '" + name + "'");
}

std::string variant_to_string(Variant v) {
  switch (v) {
    case Variant::comb: return "comb";
    case Variant::bce_encoder: return "bce_encoder";
    case Variant::frozen_encoder: return "frozen_encoder";
    case Variant::dual_head: return "dual_head";
  }
  return "comb";
}

namespace {

Mat init_weight(Eigen::Index rows, Eigen::Index cols, std::mt19937_64& rng) {
  std::normal_distribution<double> gauss(0.0, 1.0 / std::sqrt(static_cast<double>(cols)));
  Mat w(rows, cols);
  for (Eigen::Index j = 0; j < cols; ++j)
    for (Eigen::Index i = 0; i < rows; ++i) w(i, j) = gauss(rng);
  return w;
}

ModelParams init_params(const ModelConfig& cfg, std::mt19937_64& rng) {
  ModelParams p;
  p.Wi = init_weight(cfg.proj_dim, cfg.image_dim, rng);
  p.Wt = init_weight(cfg.proj_dim, cfg.text_dim, rng);
  p.W1 = init_weight(cfg.hidden_dim, 2 * cfg.proj_dim, rng);
  p.b1 = Mat::Zero(cfg.hidden_dim, 1);
  p.W2 = init_weight(5, cfg.hidden_dim, rng);
  p.b2 = Mat::Zero(5, 1);
  p.W2box = init_weight(4, cfg.hidden_dim, rng);
  p.b2box = Mat::Zero(4, 1);
  p.W2cls = init_weight(1, cfg.hidden_dim, rng);
  p.b2cls = Mat::Zero(1, 1);
  return p;
}

struct Grads {
  Mat Wi, Wt, W1, b1, W2, b2, W2box, b2box, W2cls, b2cls;
  explicit Grads(const ModelParams& p)
      : Wi(Mat::Zero(p.Wi.rows(), p.Wi.cols())),
        Wt(Mat::Zero(p.Wt.rows(), p.Wt.cols())),
        W1(Mat::Zero(p.W1.rows(), p.W1.cols())),
        b1(Mat::Zero(p.b1.rows(), 1)),
        W2(Mat::Zero(p.W2.rows(), p.W2.cols())),
        b2(Mat::Zero(p.b2.rows(), 1)),
        W2box(Mat::Zero(p.W2box.rows(), p.W2box.cols())),
        b2box(Mat::Zero(p.b2box.rows(), 1)),
        W2cls(Mat::Zero(p.W2cls.rows(), p.W2cls.cols())),
        b2cls(Mat::Zero(p.b2cls.rows(), 1)) {}
};

struct ImageCache {
  Vec x;   // featurizer output
  Vec pi;  // projection pre-normalization
  Vec zi;  // normalized projection
};

struct TextCache {
  Vec t, pt, zt;
};

ImageCache project_image(const ModelParams& p, Vec x) {
  ImageCache c;
  c.x = std::move(x);
  c.pi = p.Wi * c.x;
  c.zi = nn::l2_normalize(c.pi);
  return c;
}

TextCache project_text(const ModelParams& p, Vec t) {
  TextCache c;
  c.t = std::move(t);
  c.pt = p.Wt * c.t;
  c.zt = nn::l2_normalize(c.pt);
  return c;
}

struct PairCache {
  Vec u, m1, ud, a1, h, m2, hd;
  Vec5 o, y;
};

PairCache forward_pair(const ModelParams& p, const ModelConfig& cfg, const Vec& zi,
                       const Vec& zt, bool training, std::mt19937_64& rng) {
  PairCache c;
  c.u = Vec(zi.size() + zt.size());
  c.u << zi, zt;
  c.m1 = training ? nn::dropout_mask(c.u.size(), cfg.dropout, rng) : Vec::Ones(c.u.size());
  c.ud = c.u.cwiseProduct(c.m1);
  c.a1 = p.W1 * c.ud + p.b1.col(0);
  c.h = nn::relu(c.a1);
  c.m2 = training ? nn::dropout_mask(c.h.size(), cfg.dropout, rng) : Vec::Ones(c.h.size());
  c.hd = c.h.cwiseProduct(c.m2);
  if (cfg.variant == Variant::dual_head) {
    Vec ob = p.W2box * c.hd + p.b2box.col(0);
    Vec oc = p.W2cls * c.hd + p.b2cls.col(0);
    c.o << ob[0], ob[1], ob[2], ob[3], oc[0];
  } else {
    Vec o = p.W2 * c.hd + p.b2.col(0);
    c.o = o;
  }
  for (int i = 0; i < 5; ++i) c.y[i] = nn::sigmoid(c.o[i]);
  return c;
}

// Combined loss per pair.  dual_head keeps the box and veracity heads
// fully separate: L1 + (1-GIoU) + MSE over the box only, BCE on E.
nn::RegLossResult pair_loss(const ModelConfig& cfg, const Vec5& y, const Vec5& y_gt) {
  if (cfg.variant != Variant::dual_head) return nn::regression_loss(y, y_gt);

  nn::RegLossResult out;
  out.grad.setZero();
  for (int i = 0; i < 4; ++i) {
    double d = y[i] - y_gt[i];
    out.l1 += std::abs(d);
    out.grad[i] += d > 0.0 ? 1.0 : (d < 0.0 ? -1.0 : 0.0);
    out.mse += d * d;
    out.grad[i] += 2.0 * d;
  }
  BBox a{y[0], y[1], y[2], y[3]};
  BBox b{y_gt[0], y_gt[1], y_gt[2], y_gt[3]};
  if (a.area() > 0.0 || b.area() > 0.0) {
    out.giou = 1.0 - giou(a, b);
    auto g = giou_grad(a, b);
    for (int i = 0; i < 4; ++i) out.grad[i] -= g[i];
  }
  out.bce = nn::bce(y[4], y_gt[4]);
  out.grad[4] += -(y_gt[4] / y[4]) + (1.0 - y_gt[4]) / (1.0 - y[4]);
  out.loss = out.l1 + out.giou + out.mse + out.bce;
  return out;
}

// Backward through the regressor for one pair; returns d loss / d zi so
// the caller can fold image-side gradients over all pairs of the sample.
Vec backward_pair(const ModelParams& p, const ModelConfig& cfg, const PairCache& c,
                  const TextCache& tc, const Vec5& dy, Grads& g, bool update_encoder) {
  Vec5 do_;
  for (int i = 0; i < 5; ++i) do_[i] = dy[i] * c.y[i] * (1.0 - c.y[i]);

  Vec dhd;
  if (cfg.variant == Variant::dual_head) {
    Vec dob = do_.head<4>();
    Vec doc = do_.tail<1>();
    g.W2box += dob * c.hd.transpose();
    g.b2box.col(0) += dob;
    g.W2cls += doc * c.hd.transpose();
    g.b2cls.col(0) += doc;
    dhd = p.W2box.transpose() * dob + p.W2cls.transpose() * doc;
  } else {
    Vec dov = do_;
    g.W2 += dov * c.hd.transpose();
    g.b2.col(0) += dov;
    dhd = p.W2.transpose() * dov;
  }

  Vec dh = dhd.cwiseProduct(c.m2);
  Vec da1 = nn::relu_backward(c.a1, dh);
  g.W1 += da1 * c.ud.transpose();
  g.b1.col(0) += da1;
  Vec dud = p.W1.transpose() * da1;
  Vec du = dud.cwiseProduct(c.m1);

  Eigen::Index pd = c.u.size() / 2;
  Vec dzi = du.head(pd);
  if (update_encoder) {
    Vec dzt = du.tail(pd);
    Vec dpt = nn::l2_normalize_backward(tc.pt, dzt);
    g.Wt += dpt * tc.t.transpose();
  }
  return dzi;
}

struct PairRef {
  const FLPair* pair;
  const Sample* sample;
};

Vec5 target_of(const FLPair& p) {
  Vec5 t;
  t << p.location.x, p.location.y, p.location.w, p.location.h, p.real ? 1.0 : 0.0;
  return t;
}

}  // namespace

ModelCheckpoint train(const std::vector<Sample>& dataset, const Featurizer& featurizer,
                      const ModelConfig& cfg, std::uint64_t seed) {
  std::size_t total_pairs = 0;
  for (const auto& s : dataset) total_pairs += s.real_pairs.size() + s.fake_pairs.size();
  if (dataset.empty() || total_pairs == 0)
    throw data_error("train: dataset has no finding-location pairs");
  if (featurizer.image_dim() != cfg.image_dim || featurizer.text_dim() != cfg.text_dim)
    throw usage_error("train: featurizer dims (" + std::to_string(featurizer.image_dim()) +
                      "," + std::to_string(featurizer.text_dim()) +
                      ") do not match config dims (" + std::to_string(cfg.image_dim) + "," +
                      std::to_string(cfg.text_dim) + ")");

  std::mt19937_64 rng(stream_seed(seed, "train"));

  ModelCheckpoint ckpt;
  ckpt.config = cfg;
  ckpt.seed = seed;
  ckpt.params = init_params(cfg, rng);

  const long batches_per_epoch =
      (static_cast<long>(dataset.size()) + cfg.batch_size - 1) / cfg.batch_size;
  nn::Schedule schedule{cfg.max_lr, cfg.warmup_steps,
                        static_cast<long>(cfg.epochs) * batches_per_epoch};
  nn::AdamWConfig adamw{0.9, 0.999, 1e-8, cfg.weight_decay};

  const bool frozen = cfg.variant == Variant::frozen_encoder;

  std::vector<std::size_t> order(dataset.size());
  std::iota(order.begin(), order.end(), 0);

  for (int epoch = 0; epoch < cfg.epochs; ++epoch) {
    std::shuffle(order.begin(), order.end(), rng);
    const bool warm = epoch < cfg.contrastive_warm_epochs;

    double epoch_enc = 0.0, epoch_reg = 0.0;
    long enc_samples = 0, reg_pairs = 0;

    for (std::size_t b0 = 0; b0 < order.size(); b0 += cfg.batch_size) {
      const std::size_t b1 = std::min(b0 + cfg.batch_size, order.size());

      // Normalizers for the two heads over this batch.
      long n_pairs = 0, n_enc = 0;
      for (std::size_t k = b0; k < b1; ++k) {
        const Sample& s = dataset[order[k]];
        n_pairs += static_cast<long>(s.real_pairs.size() + s.fake_pairs.size());
        if (!s.real_pairs.empty() && !s.fake_pairs.empty()) ++n_enc;
      }

      Grads grads(ckpt.params);
      double batch_enc = 0.0, batch_reg = 0.0;

      for (std::size_t k = b0; k < b1; ++k) {
        const Sample& s = dataset[order[k]];
        ImageCache ic = project_image(ckpt.params, featurizer.image_vector(s.image_id));
        Vec dzi_total = Vec::Zero(ic.zi.size());

        std::vector<const FLPair*> pairs;
        for (const auto& p : s.real_pairs) pairs.push_back(&p);
        for (const auto& p : s.fake_pairs) pairs.push_back(&p);

        std::vector<TextCache> tcs;
        tcs.reserve(pairs.size());
        for (const FLPair* p : pairs)
          tcs.push_back(project_text(ckpt.params,
                                     featurizer.finding_vector(p->present, p->core)));

        // Regression head.
        if (!warm && n_pairs > 0) {
          const double scale = 1.0 / static_cast<double>(n_pairs);
          for (std::size_t pi = 0; pi < pairs.size(); ++pi) {
            PairCache pc = forward_pair(ckpt.params, cfg, ic.zi, tcs[pi].zt, true, rng);
            auto rl = pair_loss(cfg, pc.y, target_of(*pairs[pi]));
            batch_reg += rl.loss * scale;
            Vec5 dy = rl.grad * scale;
            dzi_total += backward_pair(ckpt.params, cfg, pc, tcs[pi], dy, grads, !frozen);
          }
        }

        // Encoder head.
        if (!frozen && n_enc > 0 && !s.real_pairs.empty() && !s.fake_pairs.empty()) {
          const double scale = 1.0 / static_cast<double>(n_enc);
          if (cfg.variant == Variant::bce_encoder) {
            // Realness BCE on the scaled cosine similarity of each pair.
            const double per_pair = scale / static_cast<double>(pairs.size());
            for (std::size_t pi = 0; pi < pairs.size(); ++pi) {
              double sim = ic.zi.dot(tcs[pi].zt);
              double prob = nn::sigmoid(sim / cfg.tau);
              double e = pairs[pi]->real ? 1.0 : 0.0;
              batch_enc += nn::bce(prob, e) * per_pair;
              double ds = (prob - e) / cfg.tau * per_pair;
              Vec dzt = ds * ic.zi;
              dzi_total += ds * tcs[pi].zt;
              Vec dpt = nn::l2_normalize_backward(tcs[pi].pt, dzt);
              grads.Wt += dpt * tcs[pi].t.transpose();
            }
          } else {
            std::vector<Vec> z_real, z_fake;
            std::vector<std::size_t> ri, fi;
            for (std::size_t pi = 0; pi < pairs.size(); ++pi) {
              if (pairs[pi]->real) { z_real.push_back(tcs[pi].zt); ri.push_back(pi); }
              else { z_fake.push_back(tcs[pi].zt); fi.push_back(pi); }
            }
            auto sc = nn::supcon_loss(ic.zi, z_real, z_fake, cfg.tau, cfg.include_positive);
            batch_enc += sc.loss * scale;
            dzi_total += scale * sc.d_image;
            for (std::size_t j = 0; j < ri.size(); ++j) {
              Vec dpt = nn::l2_normalize_backward(tcs[ri[j]].pt, scale * sc.d_real[j]);
              grads.Wt += dpt * tcs[ri[j]].t.transpose();
            }
            for (std::size_t j = 0; j < fi.size(); ++j) {
              Vec dpt = nn::l2_normalize_backward(tcs[fi[j]].pt, scale * sc.d_fake[j]);
              grads.Wt += dpt * tcs[fi[j]].t.transpose();
            }
          }
        }

        if (!frozen) {
          Vec dpi = nn::l2_normalize_backward(ic.pi, dzi_total);
          grads.Wi += dpi * ic.x.transpose();
        }
      }

      if (!std::isfinite(batch_enc) || !std::isfinite(batch_reg))
        throw numerical_error("train: non-finite loss at epoch " + std::to_string(epoch));

      std::vector<Mat*> params;
      std::vector<const Mat*> grad_list;
      auto push = [&](Mat& p, const Mat& g) { params.push_back(&p); grad_list.push_back(&g); };
      if (!frozen) {
        push(ckpt.params.Wi, grads.Wi);
        push(ckpt.params.Wt, grads.Wt);
      }
      push(ckpt.params.W1, grads.W1);
      push(ckpt.params.b1, grads.b1);
      if (cfg.variant == Variant::dual_head) {
        push(ckpt.params.W2box, grads.W2box);
        push(ckpt.params.b2box, grads.b2box);
        push(ckpt.params.W2cls, grads.W2cls);
        push(ckpt.params.b2cls, grads.b2cls);
      } else {
        push(ckpt.params.W2, grads.W2);
        push(ckpt.params.b2, grads.b2);
      }
      double lr = nn::lr_schedule(ckpt.opt.step + 1, schedule);
      nn::adamw_step(params, grad_list, ckpt.opt, lr, adamw);

      epoch_enc += batch_enc;
      epoch_reg += batch_reg;
      ++enc_samples;
      ++reg_pairs;
    }

    // Batch means averaged over batches of the epoch.
    EpochLoss el;
    el.encoder = enc_samples ? epoch_enc / static_cast<double>(enc_samples) : 0.0;
    el.regression = reg_pairs ? epoch_reg / static_cast<double>(reg_pairs) : 0.0;
    ckpt.loss_log.push_back(el);
  }

  ckpt.step = ckpt.opt.step;
  std::ostringstream state;
  state << rng;
  ckpt.rng_state = state.str();
  return ckpt;
}

Prediction predict(const ModelCheckpoint& ckpt, const Featurizer& featurizer,
                   const std::string& image_id, bool present, const std::string& core) {
  ImageCache ic = project_image(ckpt.params, featurizer.image_vector(image_id));
  TextCache tc = project_text(ckpt.params, featurizer.finding_vector(present, core));
  std::mt19937_64 unused(0);
  PairCache pc = forward_pair(ckpt.params, ckpt.config, ic.zi, tc.zt, false, unused);
  Prediction out;
  out.e_hat = pc.y[4];
  out.box = BBox{pc.y[0], pc.y[1], pc.y[2], pc.y[3]};
  // The zero box is a sentinel ("no location"); sigmoid outputs can only
  // approach it, so tiny boxes are snapped to it exactly.
  if (out.box.w * out.box.h < kZeroSnapArea) out.box = BBox{};
  return out;
}

Metrics evaluate(const ModelCheckpoint& ckpt, const Featurizer& featurizer,
                 const std::vector<Sample>& dataset) {
  Metrics m;
  long correct = 0;
  double iou_sum = 0.0;
  std::vector<std::pair<double, bool>> scores;  // (e_hat, is_real)

  for (const auto& s : dataset) {
    std::vector<const FLPair*> pairs;
    for (const auto& p : s.real_pairs) pairs.push_back(&p);
    for (const auto& p : s.fake_pairs) pairs.push_back(&p);
    for (const FLPair* p : pairs) {
      Prediction pred = predict(ckpt, featurizer, s.image_id, p->present, p->core);
      ++m.n_pairs;
      if (pred.verdict() == p->real) ++correct;
      scores.emplace_back(pred.e_hat, p->real);
      if (p->location.is_zero()) {
        ++m.miou_excluded;
      } else {
        iou_sum += iou(pred.box, p->location);
        ++m.miou_pairs;
      }
    }
  }

  m.accuracy = m.n_pairs ? static_cast<double>(correct) / m.n_pairs : 0.0;
  m.miou = m.miou_pairs ? iou_sum / m.miou_pairs : 0.0;

  long n_real = std::count_if(scores.begin(), scores.end(),
                              [](const auto& s) { return s.second; });
  long n_fake = static_cast<long>(scores.size()) - n_real;
  for (int ti = 0; ti <= 20; ++ti) {
    double t = ti / 20.0;
    long tp = 0, fp = 0;
    for (const auto& [e, real] : scores) {
      if (e >= t) real ? ++tp : ++fp;
    }
    double tpr = n_real ? static_cast<double>(tp) / n_real : 0.0;
    double fpr = n_fake ? static_cast<double>(fp) / n_fake : 0.0;
    m.roc.emplace_back(fpr, tpr);
  }
  return m;
}

namespace {

using nlohmann::json;

json mat_to_json(const Mat& m) {
  json j;
  j["rows"] = m.rows();
  j["cols"] = m.cols();
  json data = json::array();
  for (Eigen::Index i = 0; i < m.rows(); ++i)
    for (Eigen::Index c = 0; c < m.cols(); ++c) data.push_back(m(i, c));
  j["data"] = std::move(data);
  return j;
}

Mat mat_from_json(const json& j) {
  Eigen::Index rows = j.at("rows").get<Eigen::Index>();
  Eigen::Index cols = j.at("cols").get<Eigen::Index>();
  const auto& data = j.at("data");
  if (static_cast<Eigen::Index>(data.size()) != rows * cols)
    throw data_error("checkpoint: matrix payload size mismatch");
  Mat m(rows, cols);
  std::size_t k = 0;
  for (Eigen::Index i = 0; i < rows; ++i)
    for (Eigen::Index c = 0; c < cols; ++c) m(i, c) = data[k++].get<double>();
  return m;
}

json config_to_json(const ModelConfig& c) {
  return json{{"image_dim", c.image_dim},
              {"text_dim", c.text_dim},
              {"proj_dim", c.proj_dim},
              {"hidden_dim", c.hidden_dim},
              {"dropout", c.dropout},
              {"tau", c.tau},
              {"epochs", c.epochs},
              {"batch_size", c.batch_size},
              {"max_lr", c.max_lr},
              {"weight_decay", c.weight_decay},
              {"warmup_steps", c.warmup_steps},
              {"variant", variant_to_string(c.variant)},
              {"include_positive", c.include_positive},
              {"contrastive_warm_epochs", c.contrastive_warm_epochs}};
}

ModelConfig config_from_json(const json& j) {
  ModelConfig c;
  c.image_dim = j.at("image_dim").get<int>();
  c.text_dim = j.at("text_dim").get<int>();
  c.proj_dim = j.at("proj_dim").get<int>();
  c.hidden_dim = j.at("hidden_dim").get<int>();
  c.dropout = j.at("dropout").get<double>();
  c.tau = j.at("tau").get<double>();
  c.epochs = j.at("epochs").get<int>();
  c.batch_size = j.at("batch_size").get<int>();
  c.max_lr = j.at("max_lr").get<double>();
  c.weight_decay = j.at("weight_decay").get<double>();
  c.warmup_steps = j.at("warmup_steps").get<long>();
  c.variant = variant_from_string(j.at("variant").get<std::string>());
  c.include_positive = j.at("include_positive").get<bool>();
  c.contrastive_warm_epochs = j.at("contrastive_warm_epochs").get<int>();
  return c;
}

}  // namespace

void save_checkpoint(const ModelCheckpoint& ckpt, const std::string& path) {
  json j;
  j["format"] = "fcrx-checkpoint";
  j["version"] = ckpt.version;
  j["seed"] = ckpt.seed;
  j["step"] = ckpt.step;
  j["rng_state"] = ckpt.rng_state;
  j["config"] = config_to_json(ckpt.config);
  json params;
  params["Wi"] = mat_to_json(ckpt.params.Wi);
  params["Wt"] = mat_to_json(ckpt.params.Wt);
  params["W1"] = mat_to_json(ckpt.params.W1);
  params["b1"] = mat_to_json(ckpt.params.b1);
  params["W2"] = mat_to_json(ckpt.params.W2);
  params["b2"] = mat_to_json(ckpt.params.b2);
  params["W2box"] = mat_to_json(ckpt.params.W2box);
  params["b2box"] = mat_to_json(ckpt.params.b2box);
  params["W2cls"] = mat_to_json(ckpt.params.W2cls);
  params["b2cls"] = mat_to_json(ckpt.params.b2cls);
  j["params"] = std::move(params);
  json opt;
  opt["step"] = ckpt.opt.step;
  json om = json::array(), ov = json::array();
  for (const auto& m : ckpt.opt.m) om.push_back(mat_to_json(m));
  for (const auto& v : ckpt.opt.v) ov.push_back(mat_to_json(v));
  opt["m"] = std::move(om);
  opt["v"] = std::move(ov);
  j["opt"] = std::move(opt);
  json losses = json::array();
  for (const auto& l : ckpt.loss_log)
    losses.push_back(json{{"encoder", l.encoder}, {"regression", l.regression}});
  j["loss_log"] = std::move(losses);

  std::ofstream out(path);
  if (!out) throw data_error("checkpoint: cannot write " + path);
  out << j.dump() << "\n";
}

ModelCheckpoint load_checkpoint(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw data_error("checkpoint: cannot open " + path);
  json j;
  try {
    j = json::parse(in);
  } catch (const json::parse_error& e) {
    throw data_error("checkpoint: parse error in " + path + ": " + e.what());
  }
  if (j.value("format", "") != "fcrx-checkpoint")
    throw data_error("checkpoint: " + path + " is not a checkpoint file");

  ModelCheckpoint ckpt;
  try {
    ckpt.version = j.at("version").get<int>();
    ckpt.seed = j.at("seed").get<std::uint64_t>();
    ckpt.step = j.at("step").get<long>();
    ckpt.rng_state = j.at("rng_state").get<std::string>();
    ckpt.config = config_from_json(j.at("config"));
    const auto& p = j.at("params");
    ckpt.params.Wi = mat_from_json(p.at("Wi"));
    ckpt.params.Wt = mat_from_json(p.at("Wt"));
    ckpt.params.W1 = mat_from_json(p.at("W1"));
    ckpt.params.b1 = mat_from_json(p.at("b1"));
    ckpt.params.W2 = mat_from_json(p.at("W2"));
    ckpt.params.b2 = mat_from_json(p.at("b2"));
    ckpt.params.W2box = mat_from_json(p.at("W2box"));
    ckpt.params.b2box = mat_from_json(p.at("b2box"));
    ckpt.params.W2cls = mat_from_json(p.at("W2cls"));
    ckpt.params.b2cls = mat_from_json(p.at("b2cls"));
    const auto& o = j.at("opt");
    ckpt.opt.step = o.at("step").get<long>();
    for (const auto& m : o.at("m")) ckpt.opt.m.push_back(mat_from_json(m));
    for (const auto& v : o.at("v")) ckpt.opt.v.push_back(mat_from_json(v));
    for (const auto& l : j.at("loss_log"))
      ckpt.loss_log.push_back({l.at("encoder").get<double>(), l.at("regression").get<double>()});
  } catch (const json::exception& e) {
    throw data_error("checkpoint: bad payload in " + path + ": " + e.what());
  }
  return ckpt;
}

}  // namespace fcrx
