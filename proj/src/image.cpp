#include "dualrs/image.hpp"

#include <algorithm>

namespace dualrs {

ImageBuf::ImageBuf(int w, int h, int c, float fill)
    : width(w), height(h), channels(c) {
  if (w <= 0 || h <= 0 || (c != 1 && c != 3)) {
    throw ShapeError("ImageBuf: bad dimensions " + std::to_string(w) + "x" +
                     std::to_string(h) + "x" + std::to_string(c));
  }
  pixels.assign(static_cast<std::size_t>(w) * h * c, fill);
}

Cube::Cube(int n, int h, int w, int c, float fill)
    : n_frames(n), height(h), width(w), channels(c) {
  if (n <= 0 || h <= 0 || w <= 0 || c <= 0) {
    throw ShapeError("Cube: bad dimensions " + std::to_string(n) + "x" +
                     std::to_string(h) + "x" + std::to_string(w) + "x" +
                     std::to_string(c));
  }
  data.assign(static_cast<std::size_t>(n) * h * w * c, fill);
}

ImageBuf Cube::slice(int n) const {
  ImageBuf out(width, height, channels);
  const std::size_t plane = static_cast<std::size_t>(height) * width * channels;
  std::copy_n(data.begin() + static_cast<std::ptrdiff_t>(plane) * n, plane,
              out.pixels.begin());
  return out;
}

float bilinear_sample(const ImageBuf& img, float x, float y, int c) {
  if (img.empty()) throw std::invalid_argument("bilinear_sample: empty image");
  if (!std::isfinite(x) || !std::isfinite(y)) {
    throw std::invalid_argument("bilinear_sample: non-finite coordinates");
  }
  const float cx = std::clamp(x, 0.0f, static_cast<float>(img.width - 1));
  const float cy = std::clamp(y, 0.0f, static_cast<float>(img.height - 1));
  const int x0 = static_cast<int>(cx);
  const int y0 = static_cast<int>(cy);
  const int x1 = std::min(x0 + 1, img.width - 1);
  const int y1 = std::min(y0 + 1, img.height - 1);
  const float fx = cx - static_cast<float>(x0);
  const float fy = cy - static_cast<float>(y0);

  const float v00 = img.at(x0, y0, c);
  const float v10 = img.at(x1, y0, c);
  const float v01 = img.at(x0, y1, c);
  const float v11 = img.at(x1, y1, c);
  const float top = v00 + fx * (v10 - v00);
  const float bot = v01 + fx * (v11 - v01);
  return top + fy * (bot - top);
}

void bilinear_gradient(const ImageBuf& img, float x, float y, int c,
                       float& dx, float& dy) {
  if (img.empty()) throw std::invalid_argument("bilinear_gradient: empty image");
  if (!std::isfinite(x) || !std::isfinite(y)) {
    throw std::invalid_argument("bilinear_gradient: non-finite coordinates");
  }
  const bool clamped_x = x < 0.0f || x > static_cast<float>(img.width - 1);
  const bool clamped_y = y < 0.0f || y > static_cast<float>(img.height - 1);
  const float cx = std::clamp(x, 0.0f, static_cast<float>(img.width - 1));
  const float cy = std::clamp(y, 0.0f, static_cast<float>(img.height - 1));
  const int x0 = static_cast<int>(cx);
  const int y0 = static_cast<int>(cy);
  const int x1 = std::min(x0 + 1, img.width - 1);
  const int y1 = std::min(y0 + 1, img.height - 1);
  const float fx = cx - static_cast<float>(x0);
  const float fy = cy - static_cast<float>(y0);

  const float v00 = img.at(x0, y0, c);
  const float v10 = img.at(x1, y0, c);
  const float v01 = img.at(x0, y1, c);
  const float v11 = img.at(x1, y1, c);
  dx = clamped_x ? 0.0f
                 : (1.0f - fy) * (v10 - v00) + fy * (v11 - v01);
  dy = clamped_y ? 0.0f
                 : (1.0f - fx) * (v01 - v00) + fx * (v11 - v10);
}

}  // namespace dualrs
