#pragma once

#include "mvbridge/image.hpp"
#include "mvbridge/tensor.hpp"

namespace mvbridge {

// Invertible space-to-depth codec between images and latent grids. An H×W×3
// image with patch size p maps to an (H/p)×(W/p)×(3p²) latent; values are
// rearranged, never transformed, so encode/decode are bit-exact inverses.
//
// Index mapping: image(y·p+dy, x·p+dx, ch) == latent(y, x, (dy·p+dx)·3+ch).

inline constexpr int kDefaultPatch = 4;

Tensor encode_image(const Image& img, int patch);
Image decode_latent(const Tensor& latent, int patch);

// Shape of encode's output for an H×W input, without doing the work.
std::vector<std::int64_t> latent_shape(int height, int width, int patch);

}  // namespace mvbridge
