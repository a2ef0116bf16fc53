#pragma once

#include <cstdint>
#include <string>
#include <vector>

namespace mvbridge {

// H×W×3 intensities in [0,1], interleaved row-major RGB. Pipeline images
// are kept on the 256-level grid k/255 so that PPM round-trips are
// lossless; quantize() snaps to that grid.
struct Image {
  int height = 0;
  int width = 0;
  std::vector<double> data;  // height*width*3

  Image() = default;
  Image(int h, int w) : height(h), width(w), data(static_cast<std::size_t>(h) * w * 3, 0.0) {}

  double& at(int y, int x, int c) { return data[(static_cast<std::size_t>(y) * width + x) * 3 + c]; }
  double at(int y, int x, int c) const { return data[(static_cast<std::size_t>(y) * width + x) * 3 + c]; }

  bool same_shape(const Image& o) const { return height == o.height && width == o.width; }
};

// Clamp to [0,1] and snap to the k/255 grid.
double quantize_unit(double v);
Image quantize(const Image& img);

// Rec.709 luma; the fixed grayscale used by the keypoint pipeline.
std::vector<double> to_gray(const Image& img);

// Binary PPM (P6, 8-bit). Writing assumes values already on the unit grid;
// out-of-range values are clamped.
void write_ppm(const std::string& path, const Image& img);
Image read_ppm(const std::string& path);

// 8-bit grayscale PGM (P5); values clamped to [0,1].
void write_pgm(const std::string& path, const std::vector<double>& values, int height, int width);

double mean_abs_diff(const Image& a, const Image& b);

}  // namespace mvbridge
