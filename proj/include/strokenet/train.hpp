#pragma once

// Optimisers and the training loop.

#include "strokenet/model.hpp"

#include <functional>
#include <stdexcept>
#include <string>
#include <vector>

namespace strokenet {

struct TrainConfig {
  std::uint64_t seed = 7;
  int batch_size = 8;
  double flip_prob = 0.5;
  double clip_norm = 5.0;  // global gradient norm, <= 0 disables
  // Phase 1: Adam.
  int adam_steps = 200;
  double adam_lr = 2e-3;
  double beta1 = 0.9;
  double beta2 = 0.999;
  double eps = 1e-8;
  // Phase 2: SGD with momentum and step decay; 0 steps disables it.
  int sgd_steps = 0;
  double sgd_lr = 0.03;
  double momentum = 0.9;
  double decay = 0.5;
  int decay_every = 100;
  TrainOptions sample;

  // Throws std::invalid_argument on non-positive sizes or a decay outside (0, 1).
  void validate() const;
  json to_json() const;
};

class Adam {
 public:
  Adam(double beta1, double beta2, double eps) : beta1_(beta1), beta2_(beta2), eps_(eps) {}
  void step(const std::vector<Param*>& params, double lr);

 private:
  double beta1_, beta2_, eps_;
  long t_ = 0;
  std::vector<Mat> m_, v_;
};

class Sgd {
 public:
  explicit Sgd(double momentum) : momentum_(momentum) {}
  void step(const std::vector<Param*>& params, double lr);

 private:
  double momentum_;
  std::vector<Mat> velocity_;
};

// Scales gradients so their global L2 norm is at most max_norm; returns the
// norm before clipping.
double clip_grad_norm(const std::vector<Param*>& params, double max_norm);

struct StepRecord {
  int step = 0;
  std::string phase;
  double lr = 0.0;
  double grad_norm = 0.0;
  LossBreakdown loss;  // batch mean

  json to_json() const;
};

struct TrainResult {
  std::vector<StepRecord> steps;
};

// Raised on a non-finite loss; the model is restored to the last finite
// parameters before the throw.
struct NonFiniteLoss : std::runtime_error {
  int step;
  NonFiniteLoss(int s, const std::string& what) : std::runtime_error(what), step(s) {}
};

using StepCallback = std::function<void(const StepRecord&)>;

// Samples are visited in a seeded shuffled order, epoch by epoch.
TrainResult train(Model& model, const std::vector<TrainSample>& data, const TrainConfig& cfg,
                  const StepCallback& on_step = {});

}  // namespace strokenet
