#include "mvbridge/losses.hpp"

#include <cmath>
#include <stdexcept>

#include "mvbridge/bridge.hpp"
#include "mvbridge/rng.hpp"

namespace mvbridge {

namespace {

constexpr int kScaleChannels[2] = {16, 32};

// Valid-window strided convolution via slice/concat/matmul primitives.
// Channel blocks are ordered (dy, dx, c) to match the filter layout.
Tape::Id conv_valid(Tape& tape, Tape::Id x, const Tensor& filter, const Tensor& bias, int kernel, int stride) {
  const auto& s = tape.value(x).shape();
  const std::int64_t h = s[0], w = s[1], c = s[2];
  const std::int64_t oh = (h - kernel) / stride + 1;
  const std::int64_t ow = (w - kernel) / stride + 1;
  if (oh < 1 || ow < 1) throw std::invalid_argument("conv_valid: image too small for kernel");

  std::vector<Tape::Id> windows;
  windows.reserve(static_cast<std::size_t>(kernel) * kernel);
  for (int dy = 0; dy < kernel; ++dy) {
    const Tape::Id rows = tape.slice(x, 0, dy, dy + stride * (oh - 1) + 1, stride);
    for (int dx = 0; dx < kernel; ++dx)
      windows.push_back(tape.slice(rows, 1, dx, dx + stride * (ow - 1) + 1, stride));
  }
  const Tape::Id stacked = tape.concat(windows, 2);  // (oh, ow, k*k*c)
  const Tape::Id flat = tape.reshape(stacked, {oh * ow, static_cast<std::int64_t>(kernel) * kernel * c});
  const Tape::Id out = tape.add(tape.matmul(flat, tape.constant(filter)), tape.constant(bias));
  return tape.reshape(out, {oh, ow, filter.shape()[1]});
}

}  // namespace

FeatureExtractor::FeatureExtractor(std::uint64_t seed) : seed_(seed) {
  Rng rng(mix_seed(seed, 0xfea704e));
  int in_ch = 3;
  for (int out_ch : kScaleChannels) {
    const std::int64_t fan_in = static_cast<std::int64_t>(kKernel) * kKernel * in_ch;
    filters_.push_back(Tensor::normal({fan_in, out_ch}, 1.0 / std::sqrt(static_cast<double>(fan_in)), rng));
    biases_.push_back(Tensor::uniform({out_ch}, 0.05, rng));
    in_ch = out_ch;
  }
}

std::vector<Tape::Id> FeatureExtractor::apply(Tape& tape, Tape::Id image) const {
  const auto& s = tape.value(image).shape();
  if (s.size() != 3 || s[2] != 3)
    throw std::invalid_argument("feature extractor: expected (H,W,3), got " + tape.value(image).shape_str());
  std::vector<Tape::Id> maps;
  Tape::Id x = image;
  for (std::size_t scale = 0; scale < filters_.size(); ++scale) {
    x = tape.gelu(conv_valid(tape, x, filters_[scale], biases_[scale], kKernel, kStride));
    maps.push_back(x);
  }
  return maps;
}

std::vector<Tensor> FeatureExtractor::features(const Image& image) const {
  Tape tape;
  const auto ids = apply(tape, tape.constant(image_to_tensor(image)));
  std::vector<Tensor> out;
  out.reserve(ids.size());
  for (Tape::Id id : ids) out.push_back(tape.value(id));
  return out;
}

Tensor gram_matrix(const Tensor& features) {
  if (features.rank() != 2) throw std::invalid_argument("gram_matrix: expected (n, c), got " + features.shape_str());
  const std::int64_t n = features.shape()[0], c = features.shape()[1];
  Tensor g({c, c});
  for (std::int64_t i = 0; i < c; ++i)
    for (std::int64_t j = i; j < c; ++j) {
      double acc = 0.0;
      for (std::int64_t k = 0; k < n; ++k) acc += features[k * c + i] * features[k * c + j];
      acc /= static_cast<double>(n);
      g.at({i, j}) = acc;
      g.at({j, i}) = acc;
    }
  return g;
}

namespace {

void check_counts(std::size_t pred, std::size_t target, const char* what) {
  if (pred == 0 || pred != target)
    throw std::invalid_argument(std::string(what) + ": pred/target view counts differ or empty");
}

std::vector<Tape::Id> as_flat_views(Tape& tape, const std::vector<Image>& images) {
  std::vector<Tape::Id> ids;
  ids.reserve(images.size());
  for (const Image& img : images) ids.push_back(tape.constant(image_to_tensor(img)));
  return ids;
}

Tape::Id gram_on_tape(Tape& tape, Tape::Id feature_map) {
  const auto& s = tape.value(feature_map).shape();
  const std::int64_t n = s[0] * s[1], c = s[2];
  const Tape::Id flat = tape.reshape(feature_map, {n, c});
  return tape.scale(tape.matmul(tape.transpose(flat, {1, 0}), flat), 1.0 / static_cast<double>(n));
}

}  // namespace

Tape::Id pixel_l1(Tape& tape, const std::vector<Tape::Id>& pred, const std::vector<Tape::Id>& target) {
  check_counts(pred.size(), target.size(), "pixel_l1");
  std::vector<Tape::Id> diffs;
  for (std::size_t v = 0; v < pred.size(); ++v) {
    if (!tape.value(pred[v]).same_shape(tape.value(target[v])))
      throw std::invalid_argument("pixel_l1: view " + std::to_string(v) + " shapes " +
                                  tape.value(pred[v]).shape_str() + " vs " + tape.value(target[v]).shape_str());
    const std::int64_t n = tape.value(pred[v]).size();
    diffs.push_back(tape.reshape(tape.abs(tape.sub(pred[v], target[v])), {n}));
  }
  return tape.mean(diffs.size() == 1 ? diffs[0] : tape.concat(diffs, 0));
}

double pixel_l1(const std::vector<Image>& pred, const std::vector<Image>& target) {
  Tape tape;
  return tape.value(pixel_l1(tape, as_flat_views(tape, pred), as_flat_views(tape, target)))[0];
}

Tape::Id perceptual_loss(Tape& tape, const FeatureExtractor& extractor, const std::vector<Tape::Id>& pred,
                         const std::vector<Tape::Id>& target) {
  check_counts(pred.size(), target.size(), "perceptual_loss");
  Tape::Id total = -1;
  for (std::size_t v = 0; v < pred.size(); ++v) {
    const auto fp = extractor.apply(tape, pred[v]);
    const auto ft = extractor.apply(tape, target[v]);
    for (std::size_t s = 0; s < fp.size(); ++s) {
      const Tape::Id term = tape.mse(fp[s], ft[s]);
      total = total < 0 ? term : tape.add(total, term);
    }
  }
  // average over views, sum over scales
  return tape.scale(total, 1.0 / static_cast<double>(pred.size()));
}

double perceptual_loss(const FeatureExtractor& extractor, const std::vector<Image>& pred,
                       const std::vector<Image>& target) {
  Tape tape;
  return tape.value(perceptual_loss(tape, extractor, as_flat_views(tape, pred), as_flat_views(tape, target)))[0];
}

Tape::Id gram_loss(Tape& tape, const FeatureExtractor& extractor, const std::vector<Tape::Id>& pred,
                   const std::vector<Tape::Id>& target) {
  check_counts(pred.size(), target.size(), "gram_loss");
  Tape::Id total = -1;
  for (std::size_t v = 0; v < pred.size(); ++v) {
    const auto fp = extractor.apply(tape, pred[v]);
    const auto ft = extractor.apply(tape, target[v]);
    for (std::size_t s = 0; s < fp.size(); ++s) {
      const Tape::Id term = tape.mse(gram_on_tape(tape, fp[s]), gram_on_tape(tape, ft[s]));
      total = total < 0 ? term : tape.add(total, term);
    }
  }
  return tape.scale(total, 1.0 / static_cast<double>(pred.size()));
}

double gram_loss(const FeatureExtractor& extractor, const std::vector<Image>& pred, const std::vector<Image>& target) {
  Tape tape;
  return tape.value(gram_loss(tape, extractor, as_flat_views(tape, pred), as_flat_views(tape, target)))[0];
}

double total_loss(double flow, double pixel, double lpips, double gram, double lambda_lpips, double lambda_gram) {
  for (double v : {flow, pixel, lpips, gram})
    if (v < 0.0 || !std::isfinite(v))
      throw std::invalid_argument("total_loss: components are norms and must be finite and non-negative");
  return flow + pixel + lambda_lpips * lpips + lambda_gram * gram;
}

}  // namespace mvbridge
