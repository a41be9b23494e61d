#include "strokenet/train.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

namespace strokenet {

void TrainConfig::validate() const {
  auto fail = [](const std::string& what) { throw std::invalid_argument("train config: " + what); };
  if (batch_size < 1) fail("batch_size must be positive");
  if (adam_steps < 0 || sgd_steps < 0) fail("step counts must be non-negative");
  if (adam_steps + sgd_steps == 0) fail("no training steps");
  if (adam_lr <= 0.0 || sgd_lr <= 0.0) fail("learning rates must be positive");
  if (!(decay > 0.0 && decay < 1.0)) fail("decay must lie in (0, 1)");
  if (decay_every < 1) fail("decay_every must be positive");
  if (flip_prob < 0.0 || flip_prob > 1.0) fail("flip_prob must lie in [0, 1]");
  if (beta1 < 0.0 || beta1 >= 1.0 || beta2 < 0.0 || beta2 >= 1.0) fail("betas must lie in [0, 1)");
  if (momentum < 0.0 || momentum >= 1.0) fail("momentum must lie in [0, 1)");
  if (sample.max_strokes < 0 || sample.max_pivots < 0 || sample.jitter < 0.0) fail("sampling options must be non-negative");
}

json TrainConfig::to_json() const {
  return {{"seed", seed},         {"batch_size", batch_size}, {"flip_prob", flip_prob},
          {"clip_norm", clip_norm}, {"adam_steps", adam_steps}, {"adam_lr", adam_lr},
          {"beta1", beta1},       {"beta2", beta2},           {"eps", eps},
          {"sgd_steps", sgd_steps}, {"sgd_lr", sgd_lr},       {"momentum", momentum},
          {"decay", decay},       {"decay_every", decay_every}, {"max_strokes", sample.max_strokes},
          {"max_pivots", sample.max_pivots}, {"jitter", sample.jitter}};
}

void Adam::step(const std::vector<Param*>& params, double lr) {
  if (m_.empty()) {
    for (const Param* p : params) {
      m_.push_back(Mat::Zero(p->value.rows(), p->value.cols()));
      v_.push_back(Mat::Zero(p->value.rows(), p->value.cols()));
    }
  }
  ++t_;
  const double c1 = 1.0 - std::pow(beta1_, static_cast<double>(t_));
  const double c2 = 1.0 - std::pow(beta2_, static_cast<double>(t_));
  for (std::size_t i = 0; i < params.size(); ++i) {
    const Mat& g = params[i]->grad;
    m_[i] = beta1_ * m_[i] + (1.0 - beta1_) * g;
    v_[i] = beta2_ * v_[i] + (1.0 - beta2_) * g.cwiseProduct(g);
    params[i]->value.array() -= lr * (m_[i].array() / c1) / ((v_[i].array() / c2).sqrt() + eps_);
  }
}

void Sgd::step(const std::vector<Param*>& params, double lr) {
  if (velocity_.empty())
    for (const Param* p : params) velocity_.push_back(Mat::Zero(p->value.rows(), p->value.cols()));
  for (std::size_t i = 0; i < params.size(); ++i) {
    velocity_[i] = momentum_ * velocity_[i] + params[i]->grad;
    params[i]->value -= lr * velocity_[i];
  }
}

double clip_grad_norm(const std::vector<Param*>& params, double max_norm) {
  double sq = 0.0;
  for (const Param* p : params) sq += p->grad.squaredNorm();
  const double norm = std::sqrt(sq);
  if (max_norm > 0.0 && norm > max_norm)
    for (Param* p : params) p->grad *= max_norm / norm;
  return norm;
}

json StepRecord::to_json() const {
  return {{"step", step},           {"phase", phase},       {"lr", lr},
          {"grad_norm", grad_norm}, {"total", loss.total},  {"ta", loss.ta},
          {"tca", loss.tca},        {"sin", loss.sin},      {"cos", loss.cos},
          {"h", loss.h},            {"mse", loss.mse},      {"ssim", loss.ssim},
          {"linkage", loss.linkage}, {"strokes", loss.strokes}, {"links", loss.links}};
}

namespace {

bool all_finite(const LossBreakdown& l) {
  for (double v : {l.total, l.ta, l.tca, l.sin, l.cos, l.h, l.mse, l.ssim, l.linkage})
    if (!std::isfinite(v)) return false;
  return true;
}

}  // namespace

TrainResult train(Model& model, const std::vector<TrainSample>& data, const TrainConfig& cfg,
                  const StepCallback& on_step) {
  cfg.validate();
  if (data.empty()) throw std::invalid_argument("train: empty dataset");
  const std::vector<Param*> params = model.params().all();
  Adam adam(cfg.beta1, cfg.beta2, cfg.eps);
  Sgd sgd(cfg.momentum);
  Rng order_rng(cfg.seed);
  std::vector<int> order(data.size());
  std::size_t cursor = order.size();

  auto next_index = [&] {
    if (cursor == order.size()) {
      std::iota(order.begin(), order.end(), 0);
      for (std::size_t i = order.size(); i > 1; --i)
        std::swap(order[i - 1], order[static_cast<std::size_t>(order_rng.uniform_int(0, static_cast<int>(i) - 1))]);
      cursor = 0;
    }
    return order[cursor++];
  };

  TrainResult result;
  std::vector<Mat> last_good;
  for (const Param* p : params) last_good.push_back(p->value);
  auto restore = [&] {
    for (std::size_t i = 0; i < params.size(); ++i) params[i]->value = last_good[i];
  };
  const int total_steps = cfg.adam_steps + cfg.sgd_steps;
  for (int step = 0; step < total_steps; ++step) {
    const bool phase1 = step < cfg.adam_steps;
    const double lr = phase1 ? cfg.adam_lr
                             : cfg.sgd_lr * std::pow(cfg.decay, (step - cfg.adam_steps) / cfg.decay_every);
    model.params().zero_grad();
    StepRecord rec;
    rec.step = step;
    rec.phase = phase1 ? "adam" : "sgd";
    rec.lr = lr;
    const double w = 1.0 / cfg.batch_size;
    for (int b = 0; b < cfg.batch_size; ++b) {
      const int idx = next_index();
      Rng rng(cfg.seed ^ (0x9e3779b97f4a7c15ull * static_cast<std::uint64_t>(step * cfg.batch_size + b + 1)));
      const bool flip = rng.bernoulli(cfg.flip_prob);
      Tape t;
      const TrainSample& src = data[static_cast<std::size_t>(idx)];
      const LossGraph lg = flip ? model.build_loss(t, flip_horizontal(src), cfg.sample, rng)
                                : model.build_loss(t, src, cfg.sample, rng);
      if (!all_finite(lg.parts)) {
        restore();
        throw NonFiniteLoss(step, "non-finite loss at step " + std::to_string(step) + " on sample " +
                                      std::to_string(idx) + (flip ? " (flipped)" : "") +
                                      ": total=" + std::to_string(lg.parts.total) +
                                      " linkage=" + std::to_string(lg.parts.linkage));
      }
      t.backward(lg.total, w);
      rec.loss += lg.parts.scaled(w);  // counts are summed, not averaged
    }
    rec.grad_norm = clip_grad_norm(params, cfg.clip_norm);
    if (!std::isfinite(rec.grad_norm)) {
      restore();
      throw NonFiniteLoss(step, "non-finite gradient at step " + std::to_string(step));
    }
    if (phase1)
      adam.step(params, lr);
    else
      sgd.step(params, lr);
    for (std::size_t i = 0; i < params.size(); ++i) {
      if (!params[i]->value.allFinite()) {
        restore();
        throw NonFiniteLoss(step, "non-finite parameter " + params[i]->name + " after step " + std::to_string(step));
      }
    }
    for (std::size_t i = 0; i < params.size(); ++i) last_good[i] = params[i]->value;
    if (on_step) on_step(rec);
    result.steps.push_back(std::move(rec));
  }
  return result;
}

}  // namespace strokenet
