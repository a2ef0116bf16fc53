#include "mvbridge/codec.hpp"

#include <stdexcept>
#include <string>

namespace mvbridge {

std::vector<std::int64_t> latent_shape(int height, int width, int patch) {
  if (patch <= 0 || height % patch != 0 || width % patch != 0)
    throw std::invalid_argument("codec: patch " + std::to_string(patch) + " does not divide " +
                                std::to_string(height) + "x" + std::to_string(width));
  return {height / patch, width / patch, 3LL * patch * patch};
}

Tensor encode_image(const Image& img, int patch) {
  const auto shape = latent_shape(img.height, img.width, patch);
  Tensor latent(shape);
  const std::int64_t h = shape[0], w = shape[1], c = shape[2];
  for (std::int64_t y = 0; y < h; ++y)
    for (std::int64_t x = 0; x < w; ++x)
      for (int dy = 0; dy < patch; ++dy)
        for (int dx = 0; dx < patch; ++dx)
          for (int ch = 0; ch < 3; ++ch)
            latent[(y * w + x) * c + (static_cast<std::int64_t>(dy) * patch + dx) * 3 + ch] =
                img.at(static_cast<int>(y) * patch + dy, static_cast<int>(x) * patch + dx, ch);
  return latent;
}

Image decode_latent(const Tensor& latent, int patch) {
  if (latent.rank() != 3)
    throw std::invalid_argument("codec: latent must be rank 3, got " + latent.shape_str());
  const std::int64_t h = latent.shape()[0], w = latent.shape()[1], c = latent.shape()[2];
  if (c != 3LL * patch * patch)
    throw std::invalid_argument("codec: latent has " + std::to_string(c) + " channels, expected " +
                                std::to_string(3 * patch * patch) + " for patch " + std::to_string(patch));
  Image img(static_cast<int>(h) * patch, static_cast<int>(w) * patch);
  for (std::int64_t y = 0; y < h; ++y)
    for (std::int64_t x = 0; x < w; ++x)
      for (int dy = 0; dy < patch; ++dy)
        for (int dx = 0; dx < patch; ++dx)
          for (int ch = 0; ch < 3; ++ch)
            img.at(static_cast<int>(y) * patch + dy, static_cast<int>(x) * patch + dx, ch) =
                latent[(y * w + x) * c + (static_cast<std::int64_t>(dy) * patch + dx) * 3 + ch];
  return img;
}

}  // namespace mvbridge
