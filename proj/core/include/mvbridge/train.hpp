#pragma once

#include <cstdint>
#include <functional>
#include <optional>
#include <string>
#include <vector>

#include "mvbridge/bridge.hpp"
#include "mvbridge/losses.hpp"
#include "mvbridge/model.hpp"
#include "mvbridge/optim.hpp"
#include "mvbridge/scene.hpp"
#include "mvbridge/tape.hpp"

namespace mvbridge {

struct TrainConfig {
  ModelConfig model;
  AdamConfig adam;  // desk-scale default lr 1e-3
  double lambda_lpips = kDefaultLambdaLpips;
  double lambda_gram = kDefaultLambdaGram;
  double sigma = kDefaultSigma;
  int steps = 2000;
  std::uint64_t seed = 0;
  std::uint64_t extractor_seed = 99;
  int checkpoint_every = 500;
  bool use_reference = true;  // attach one reference when the ViewSet has any
};

struct StepLosses {
  std::int64_t step = 0;
  double flow = 0.0;
  double pixel = 0.0;
  double lpips = 0.0;
  double gram = 0.0;
  double total = 0.0;
};

// One training example: paired latents for N degraded views plus optional
// reference latents, with the step's t draw and noise seed. All step
// randomness is derived from (config seed, step index), so training is
// resumable without carrying generator state.
struct TrainBatch {
  std::vector<Tensor> z_d;
  std::vector<Tensor> z_gt;
  std::vector<Tensor> refs;
  double t = 0.0;
  std::uint64_t noise_seed = 0;
};

TrainBatch sample_batch(const std::vector<ViewSet>& dataset, const TrainConfig& config, std::int64_t step);

// Full per-step objective on the tape:
// total = flow + pixel + lambda_lpips * lpips + lambda_gram * gram, with the
// image losses computed on decoded clean-latent predictions.
Tape::Id training_loss(Tape& tape, const ModelParams& params, const std::vector<Tape::Id>& param_ids,
                       const TrainBatch& batch, const FeatureExtractor& extractor, const TrainConfig& config,
                       StepLosses* components = nullptr);

struct Checkpoint {
  ModelParams params;
  AdamState adam;
  std::int64_t step = 0;  // steps completed
};

void save_checkpoint(const std::string& dir, const Checkpoint& checkpoint);
Checkpoint load_checkpoint(const std::string& dir);

struct TrainResult {
  ModelParams params;
  AdamState adam;
  std::vector<StepLosses> log;  // one row per step run in this call
};

using StepCallback = std::function<bool(const StepLosses&, const ModelParams&)>;

// Runs steps [start_step, config.steps). Deterministic given (config,
// dataset); callback may stop training early by returning false. A non-finite
// loss aborts with the step index and component values.
TrainResult train(const TrainConfig& config, const std::vector<ViewSet>& dataset,
                  std::optional<Checkpoint> resume_from = std::nullopt, const std::string& checkpoint_dir = "",
                  const StepCallback& callback = nullptr);

}  // namespace mvbridge
