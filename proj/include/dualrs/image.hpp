#pragma once

#include <cmath>
#include <cstddef>
#include <stdexcept>
#include <string>
#include <vector>

namespace dualrs {

struct ShapeError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

/// Dense float image, row-major (y, x, c). Values are nominally in [0, 1];
/// intermediate results may leave the range, disk round-trips restore it.
struct ImageBuf {
  int width = 0;
  int height = 0;
  int channels = 0;
  std::vector<float> pixels;

  ImageBuf() = default;
  ImageBuf(int w, int h, int c, float fill = 0.0f);

  bool empty() const { return pixels.empty(); }

  std::size_t index(int x, int y, int c) const {
    return (static_cast<std::size_t>(y) * width + x) * channels + c;
  }
  float& at(int x, int y, int c) { return pixels[index(x, y, c)]; }
  float at(int x, int y, int c) const { return pixels[index(x, y, c)]; }

  bool same_shape(const ImageBuf& other) const {
    return width == other.width && height == other.height &&
           channels == other.channels;
  }
};

/// N x H x W x C scalar block, row-major n -> y -> x -> c. Shared container
/// for flow, velocity, time, mask and residual data; the per-use constraints
/// live with the code that builds each specialization.
struct Cube {
  int n_frames = 0;
  int height = 0;
  int width = 0;
  int channels = 0;
  std::vector<float> data;

  Cube() = default;
  Cube(int n, int h, int w, int c, float fill = 0.0f);

  bool empty() const { return data.empty(); }

  std::size_t index(int n, int y, int x, int c) const {
    return ((static_cast<std::size_t>(n) * height + y) * width + x) * channels + c;
  }
  float& at(int n, int y, int x, int c) { return data[index(n, y, x, c)]; }
  float at(int n, int y, int x, int c) const { return data[index(n, y, x, c)]; }

  bool same_shape(const Cube& other) const {
    return n_frames == other.n_frames && height == other.height &&
           width == other.width && channels == other.channels;
  }

  /// The n-th slice as an image.
  ImageBuf slice(int n) const;
};

/// Bilinear interpolation of the four pixels around (x, y), clamp-to-edge
/// outside [0, W-1] x [0, H-1]. Total for any finite coordinates; callers
/// that care about out-of-range samples track validity separately.
float bilinear_sample(const ImageBuf& img, float x, float y, int c);

/// Derivative of bilinear_sample with respect to x and y at (x, y).
/// Piecewise constant per cell; zero in the clamped direction at the border.
void bilinear_gradient(const ImageBuf& img, float x, float y, int c,
                       float& dx, float& dy);

}  // namespace dualrs
