#pragma once

#include <cstdint>
#include <functional>
#include <vector>

#include "mvbridge/image.hpp"
#include "mvbridge/model.hpp"
#include "mvbridge/tape.hpp"
#include "mvbridge/tensor.hpp"

namespace mvbridge {

// State on the stochastic path z_t = (1-t) z_D + t z_GT + sigma sqrt(t(1-t)) eps.
// Endpoints are exact: the noise coefficient vanishes at t in {0,1} and the
// construction returns the endpoint tensors unchanged.
struct BridgeSample {
  std::vector<Tensor> z_t;  // one latent grid per view
  double t = 0.0;
  double sigma = 0.0;
  std::uint64_t epsilon_seed = 0;
};

inline constexpr double kDefaultSigma = 0.1;

BridgeSample sample_bridge(const std::vector<Tensor>& z_d, const std::vector<Tensor>& z_gt, double t, double sigma,
                           std::uint64_t seed);

// Clean-latent estimate from the current state: z_hat = z_t + (1-t) v.
// Exact under the oracle velocity z_GT - z_D at every t; equals the
// one-step rule z_D + v at t = 0.
Tensor predict_clean(const Tensor& z_t, const Tensor& velocity, double t);
Tape::Id predict_clean(Tape& tape, Tape::Id z_t, Tape::Id velocity, double t);

// Mean squared error between the predicted velocities and Z_GT - Z_D,
// averaged over views and elements (equal element counts per view).
Tape::Id flow_loss(Tape& tape, const std::vector<Tape::Id>& velocities, const std::vector<Tape::Id>& z_d,
                   const std::vector<Tape::Id>& z_gt);

// Image <-> tensor bridges (H,W,3) and the on-tape codec used to decode
// predicted latents differentiably. The tape codec computes the same index
// mapping as codec.hpp, via reshape/transpose primitives.
Tensor image_to_tensor(const Image& img);
Image tensor_to_image(const Tensor& t);
Tape::Id tape_decode(Tape& tape, Tape::Id latent, int patch);

// Velocity field abstraction for inference. The production field wraps the
// trained network; tests may substitute an analytic field.
using VelocityFn = std::function<std::vector<Tensor>(const std::vector<Tensor>& z_t, double t)>;

// Encode -> Euler-integrate the field from t=0 over `steps` -> decode.
// Outputs are snapped to the 8-bit unit grid all pipeline images live on.
std::vector<Image> infer_with_velocity(const VelocityFn& field, const std::vector<Image>& distorted, int steps,
                                       int patch);

// Production inference: conditions the network on the distorted latents and
// optional clean references. Any view count is accepted.
std::vector<Image> infer(const ModelParams& params, const std::vector<Image>& distorted,
                         const std::vector<Image>& references, int steps = 1);

}  // namespace mvbridge
