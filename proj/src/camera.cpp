#include "dualrs/camera.hpp"

#include <algorithm>
#include <cmath>

namespace dualrs {

const char* to_string(ScanDirection dir) {
  return dir == ScanDirection::T2B ? "t2b" : "b2t";
}

void RsConfig::validate() const {
  if (rows < 2) throw ShapeError("RsConfig: rows must be >= 2");
  if (!(row_readout > 0)) throw ShapeError("RsConfig: row_readout must be > 0");
  if (!std::isfinite(midpoint)) throw ShapeError("RsConfig: non-finite midpoint");
}

void FrameStack::validate() const {
  if (frames.size() < 2) throw ShapeError("FrameStack: needs at least 2 frames");
  if (!(dt > 0)) throw ShapeError("FrameStack: dt must be > 0");
  for (const auto& f : frames) {
    if (!f.same_shape(frames.front())) {
      throw ShapeError("FrameStack: frames differ in shape");
    }
  }
}

namespace {

// Bracketing frame pair and blend weight for instant tau. Tolerates float
// rounding at the stack endpoints by dt * 1e-6.
void locate(const FrameStack& stack, double tau, std::size_t& j0,
            std::size_t& j1, double& alpha) {
  const double tol = stack.dt * 1e-6;
  const double t_end = stack.time_end();
  if (tau < stack.t0 - tol || tau > t_end + tol) {
    throw CoverageError("stack does not cover instant " + std::to_string(tau) +
                        " (span [" + std::to_string(stack.t0) + ", " +
                        std::to_string(t_end) + "])");
  }
  const double u = std::clamp((tau - stack.t0) / stack.dt, 0.0,
                              static_cast<double>(stack.frames.size() - 1));
  j0 = static_cast<std::size_t>(u);
  j0 = std::min(j0, stack.frames.size() - 2);
  j1 = j0 + 1;
  alpha = u - static_cast<double>(j0);
}

}  // namespace

void FrameStack::sample_row(double tau, int row, float* out) const {
  std::size_t j0, j1;
  double alpha;
  locate(*this, tau, j0, j1, alpha);
  const ImageBuf& a = frames[j0];
  const int count = a.width * a.channels;
  const float* ra = &a.pixels[a.index(0, row, 0)];
  if (alpha == 0.0) {
    std::copy_n(ra, count, out);
    return;
  }
  const ImageBuf& b = frames[j1];
  const float* rb = &b.pixels[b.index(0, row, 0)];
  const float w = static_cast<float>(alpha);
  for (int i = 0; i < count; ++i) out[i] = ra[i] + w * (rb[i] - ra[i]);
}

ImageBuf FrameStack::sample_frame(double tau) const {
  ImageBuf out(width(), height(), channels());
  for (int y = 0; y < out.height; ++y) {
    sample_row(tau, y, &out.pixels[out.index(0, y, 0)]);
  }
  return out;
}

}  // namespace dualrs
