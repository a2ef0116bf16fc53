#include "mvbridge/bridge.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

#include "mvbridge/codec.hpp"
#include "mvbridge/rng.hpp"

namespace mvbridge {

BridgeSample sample_bridge(const std::vector<Tensor>& z_d, const std::vector<Tensor>& z_gt, double t, double sigma,
                           std::uint64_t seed) {
  if (z_d.size() != z_gt.size()) throw std::invalid_argument("sample_bridge: view counts differ");
  if (t < 0.0 || t > 1.0) throw std::invalid_argument("sample_bridge: t outside [0,1]");
  if (sigma < 0.0) throw std::invalid_argument("sample_bridge: sigma must be non-negative");

  BridgeSample sample;
  sample.t = t;
  sample.sigma = sigma;
  sample.epsilon_seed = seed;
  sample.z_t.reserve(z_d.size());

  for (std::size_t v = 0; v < z_d.size(); ++v) {
    if (!z_d[v].same_shape(z_gt[v]))
      throw std::invalid_argument("sample_bridge: view " + std::to_string(v) + " shapes " + z_d[v].shape_str() +
                                  " vs " + z_gt[v].shape_str());
    if (t == 0.0) {
      sample.z_t.push_back(z_d[v]);
      continue;
    }
    if (t == 1.0) {
      sample.z_t.push_back(z_gt[v]);
      continue;
    }
    Rng rng(mix_seed(seed, static_cast<std::uint64_t>(v)));
    const double noise_coeff = sigma * std::sqrt(t * (1.0 - t));
    Tensor z(z_d[v].shape());
    for (std::int64_t i = 0; i < z.size(); ++i)
      z[i] = (1.0 - t) * z_d[v][i] + t * z_gt[v][i] + noise_coeff * rng.normal();
    sample.z_t.push_back(std::move(z));
  }
  return sample;
}

Tensor predict_clean(const Tensor& z_t, const Tensor& velocity, double t) {
  if (!z_t.same_shape(velocity))
    throw std::invalid_argument("predict_clean: shapes " + z_t.shape_str() + " vs " + velocity.shape_str());
  Tensor out(z_t.shape());
  const double w = 1.0 - t;
  for (std::int64_t i = 0; i < out.size(); ++i) out[i] = z_t[i] + w * velocity[i];
  return out;
}

Tape::Id predict_clean(Tape& tape, Tape::Id z_t, Tape::Id velocity, double t) {
  return tape.add(z_t, tape.scale(velocity, 1.0 - t));
}

Tape::Id flow_loss(Tape& tape, const std::vector<Tape::Id>& velocities, const std::vector<Tape::Id>& z_d,
                   const std::vector<Tape::Id>& z_gt) {
  if (velocities.empty() || velocities.size() != z_d.size() || z_d.size() != z_gt.size())
    throw std::invalid_argument("flow_loss: view counts differ");
  std::vector<Tape::Id> sq_terms;
  sq_terms.reserve(velocities.size());
  for (std::size_t v = 0; v < velocities.size(); ++v) {
    const Tape::Id target = tape.sub(z_gt[v], z_d[v]);
    const std::int64_t n = tape.value(target).size();
    sq_terms.push_back(tape.reshape(tape.square(tape.sub(velocities[v], target)), {n}));
  }
  return tape.mean(sq_terms.size() == 1 ? sq_terms[0] : tape.concat(sq_terms, 0));
}

Tensor image_to_tensor(const Image& img) {
  Tensor t({img.height, img.width, 3});
  std::copy(img.data.begin(), img.data.end(), t.data());
  return t;
}

Image tensor_to_image(const Tensor& t) {
  if (t.rank() != 3 || t.shape()[2] != 3)
    throw std::invalid_argument("tensor_to_image: expected (H,W,3), got " + t.shape_str());
  Image img(static_cast<int>(t.shape()[0]), static_cast<int>(t.shape()[1]));
  img.data.assign(t.data(), t.data() + t.size());
  return img;
}

Tape::Id tape_decode(Tape& tape, Tape::Id latent, int patch) {
  const auto& s = tape.value(latent).shape();
  if (s.size() != 3 || s[2] != 3LL * patch * patch)
    throw std::invalid_argument("tape_decode: latent shape " + tape.value(latent).shape_str() +
                                " incompatible with patch " + std::to_string(patch));
  const std::int64_t h = s[0], w = s[1], p = patch;
  // (h, w, p, p, 3) -> (h, p, w, p, 3) -> (H, W, 3); mirrors codec.hpp's map.
  const Tape::Id split = tape.reshape(latent, {h, w, p, p, 3});
  const Tape::Id swapped = tape.transpose(split, {0, 2, 1, 3, 4});
  return tape.reshape(swapped, {h * p, w * p, 3});
}

std::vector<Image> infer_with_velocity(const VelocityFn& field, const std::vector<Image>& distorted, int steps,
                                       int patch) {
  if (distorted.empty()) throw std::invalid_argument("infer: need at least one input view");
  if (steps < 1) throw std::invalid_argument("infer: steps must be >= 1");
  for (const Image& img : distorted)
    if (!img.same_shape(distorted.front()))
      throw std::invalid_argument("infer: mixed input resolutions");

  std::vector<Tensor> z;
  z.reserve(distorted.size());
  for (const Image& img : distorted) z.push_back(encode_image(img, patch));

  const double h = 1.0 / static_cast<double>(steps);
  for (int k = 0; k < steps; ++k) {
    const double t = static_cast<double>(k) * h;
    const std::vector<Tensor> v = field(z, t);
    if (v.size() != z.size()) throw std::runtime_error("infer: velocity field returned wrong view count");
    for (std::size_t i = 0; i < z.size(); ++i) {
      if (!v[i].same_shape(z[i])) throw std::runtime_error("infer: velocity shape mismatch");
      for (std::int64_t j = 0; j < z[i].size(); ++j) z[i][j] += h * v[i][j];
    }
  }

  std::vector<Image> out;
  out.reserve(z.size());
  for (const Tensor& latent : z) out.push_back(quantize(decode_latent(latent, patch)));
  return out;
}

std::vector<Image> infer(const ModelParams& params, const std::vector<Image>& distorted,
                         const std::vector<Image>& references, int steps) {
  const int patch = params.config.patch;
  for (const Image& img : distorted)
    if (img.height % patch != 0 || img.width % patch != 0)
      throw std::invalid_argument("infer: image " + std::to_string(img.width) + "x" + std::to_string(img.height) +
                                  " not divisible by patch " + std::to_string(patch));

  std::vector<Tensor> z_cond;
  z_cond.reserve(distorted.size());
  for (const Image& img : distorted) z_cond.push_back(encode_image(img, patch));
  std::vector<Tensor> refs;
  refs.reserve(references.size());
  for (const Image& img : references) {
    if (!img.same_shape(distorted.front())) throw std::invalid_argument("infer: mixed input resolutions");
    refs.push_back(encode_image(img, patch));
  }

  const VelocityFn field = [&](const std::vector<Tensor>& z_t, double t) {
    return velocity_eval(params, z_t, z_cond, refs, t);
  };
  return infer_with_velocity(field, distorted, steps, patch);
}

}  // namespace mvbridge
