#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "mvbridge/tensor.hpp"

namespace mvbridge {

struct AdamConfig {
  double learning_rate = 1e-3;
  double beta1 = 0.9;
  double beta2 = 0.999;
  double epsilon = 1e-8;
};

// Per-parameter first/second moment accumulators plus the shared step count.
struct AdamState {
  AdamConfig config;
  std::vector<Tensor> m;
  std::vector<Tensor> v;
  std::int64_t step = 0;

  static AdamState init(const std::vector<Tensor>& params, AdamConfig config);
};

// One Adam update with bias correction. params, grads and state moments must
// be index- and shape-aligned. Throws on a non-finite gradient, naming the
// offending parameter index.
void adam_step(std::vector<Tensor>& params, const std::vector<Tensor>& grads, AdamState& state);

}  // namespace mvbridge
