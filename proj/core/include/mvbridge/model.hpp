#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "mvbridge/tape.hpp"
#include "mvbridge/tensor.hpp"

namespace mvbridge {

// Velocity-network hyperparameters. The network is a small transformer over
// the concatenated tokens of all views: per-view patch tokens with shared
// within-view positional encodings, a role embedding (degraded vs
// reference), full joint self-attention, and an output head applied to
// degraded-view tokens only. There are deliberately no view-index
// embeddings: outputs must be equivariant under view permutation.
struct ModelConfig {
  int patch = 4;
  int token_dim = 64;
  int heads = 4;
  int layers = 4;
  int mlp_dim = 128;
  int time_embed_dim = 32;
  int max_views = 8;  // soft cap for memory accounting only

  int latent_channels() const { return 3 * patch * patch; }
  void validate() const;
};

// All learnable weights, name-addressable and flat-addressable.
struct ModelParams {
  ModelConfig config;
  std::vector<std::string> names;
  std::vector<Tensor> tensors;

  static ModelParams init(const ModelConfig& config, std::uint64_t seed);

  std::int64_t total_size() const;
  Tensor& find(const std::string& name);
  const Tensor& find(const std::string& name) const;

  // Flat view across all tensors in registration order.
  std::vector<double> flatten() const;
  void unflatten(const std::vector<double>& flat);
};

struct ForwardHooks {
  // Test hook: adds a large negative bias to attention scores targeting
  // reference tokens, silencing them as keys/values.
  bool mask_reference_attention = false;
};

// Builds the forward pass on `tape`. `param_ids` must be tape leaves aligned
// with params.tensors. z_t and z_cond are per-degraded-view latents
// (h, w, c); refs are reference latents. Returns one velocity grid id per
// degraded view.
std::vector<Tape::Id> velocity_forward(Tape& tape, const ModelParams& params, const std::vector<Tape::Id>& param_ids,
                                       const std::vector<Tape::Id>& z_t, const std::vector<Tape::Id>& z_cond,
                                       const std::vector<Tape::Id>& refs, double t,
                                       const ForwardHooks& hooks = {});

// Non-tape convenience: velocities as plain tensors (used at inference).
std::vector<Tensor> velocity_eval(const ModelParams& params, const std::vector<Tensor>& z_t,
                                  const std::vector<Tensor>& z_cond, const std::vector<Tensor>& refs, double t,
                                  const ForwardHooks& hooks = {});

// Sinusoidal features shared by the forward pass; exposed for tests.
Tensor positional_encoding(std::int64_t grid_h, std::int64_t grid_w, int dim);
Tensor time_features(double t, int dim);

void save_params(const std::string& dir, const ModelParams& params);
ModelParams load_params(const std::string& dir);

}  // namespace mvbridge
