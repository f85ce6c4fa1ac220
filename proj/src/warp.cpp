#include "dualrs/warp.hpp"

#include <algorithm>
#include <cmath>
#include <string>

#include "dualrs/parallel.hpp"

namespace dualrs {

WarpResult backward_warp(const ImageBuf& src, const FlowCube& flow) {
  const Cube& f = flow.values;
  if (f.height != src.height || f.width != src.width) {
    throw ShapeError("backward_warp: flow grid " + std::to_string(f.width) +
                     "x" + std::to_string(f.height) + " != image " +
                     std::to_string(src.width) + "x" +
                     std::to_string(src.height));
  }
  WarpResult out;
  out.warped = Cube(f.n_frames, src.height, src.width, src.channels);
  out.validity = Cube(f.n_frames, src.height, src.width, 1);

  parallel_for(0, f.n_frames * src.height, [&](int job) {
    const int n = job / src.height;
    const int y = job % src.height;
    for (int x = 0; x < src.width; ++x) {
      const float sx = static_cast<float>(x) + f.at(n, y, x, 0);
      const float sy = static_cast<float>(y) + f.at(n, y, x, 1);
      const bool inside = sx >= 0.0f && sx <= static_cast<float>(src.width - 1) &&
                          sy >= 0.0f && sy <= static_cast<float>(src.height - 1);
      out.validity.at(n, y, x, 0) = inside ? 1.0f : 0.0f;
      for (int c = 0; c < src.channels; ++c) {
        out.warped.at(n, y, x, c) = bilinear_sample(src, sx, sy, c);
      }
    }
  });
  return out;
}

Cube proximity_mask(const TimeCube& t2b, const TimeCube& b2t) {
  if (t2b.targets() != b2t.targets() || t2b.rows() != b2t.rows()) {
    throw ShapeError("proximity_mask: time cubes disagree in shape");
  }
  Cube mask(t2b.targets(), t2b.rows(), 1, 1);
  for (int n = 0; n < t2b.targets(); ++n)
    for (int m = 0; m < t2b.rows(); ++m) {
      const double a = std::abs(t2b.at(n, m));
      const double b = std::abs(b2t.at(n, m));
      mask.at(n, m, 0, 0) = (a + b < 1e-12)
                                ? 0.5f
                                : static_cast<float>(b / (a + b));
    }
  return mask;
}

namespace {

// Broadcast accessor: axes of size 1 repeat along the output grid.
inline float bcast(const Cube& c, int n, int y, int x, int ch) {
  return c.at(n % c.n_frames, c.height == 1 ? 0 : y, c.width == 1 ? 0 : x,
              ch % c.channels);
}

}  // namespace

std::vector<ImageBuf> blend_warped(const WarpResult& w_t2b,
                                   const WarpResult& w_b2t, const Cube& mask,
                                   const Cube& residual) {
  const Cube& a = w_t2b.warped;
  const Cube& b = w_b2t.warped;
  if (!a.same_shape(b)) throw ShapeError("blend_warped: warped cubes differ in shape");
  if (mask.n_frames != a.n_frames || (mask.height != 1 && mask.height != a.height) ||
      (mask.width != 1 && mask.width != a.width)) {
    throw ShapeError("blend_warped: mask shape incompatible with warped cubes");
  }
  if (!residual.empty() &&
      (residual.n_frames != a.n_frames || residual.height != a.height ||
       residual.width != a.width)) {
    throw ShapeError("blend_warped: residual shape incompatible");
  }

  std::vector<ImageBuf> frames;
  frames.reserve(a.n_frames);
  for (int n = 0; n < a.n_frames; ++n) {
    ImageBuf img(a.width, a.height, a.channels);
    for (int y = 0; y < a.height; ++y)
      for (int x = 0; x < a.width; ++x) {
        const bool va = w_t2b.validity.at(n, y, x, 0) > 0.5f;
        const bool vb = w_b2t.validity.at(n, y, x, 0) > 0.5f;
        float m = bcast(mask, n, y, x, 0);
        if (va != vb) m = va ? 1.0f : 0.0f;
        for (int c = 0; c < a.channels; ++c) {
          float v = m * a.at(n, y, x, c) + (1.0f - m) * b.at(n, y, x, c);
          if (!residual.empty()) v += bcast(residual, n, y, x, c);
          img.at(x, y, c) = std::clamp(v, 0.0f, 1.0f);
        }
      }
    frames.push_back(std::move(img));
  }
  return frames;
}

}  // namespace dualrs
