#pragma once

#include <cstdint>
#include <functional>

#include "dualrs/camera.hpp"

namespace dualrs {

/// Continuous scene model: intensity as a function of image position and
/// time. Procedural scenes are evaluated analytically, so any instant can be
/// rendered without resampling error; that is what makes them usable as
/// oracles for the shutter simulation.
class Scene {
 public:
  using SampleFn = std::function<float(double x, double y, double t, int c)>;

  Scene() = default;
  Scene(int channels, SampleFn fn) : channels_(channels), fn_(std::move(fn)) {}

  int channels() const { return channels_; }
  float sample(double x, double y, double t, int c) const {
    return fn_(x, y, t, c);
  }

  ImageBuf render(int width, int height, double t) const;

 private:
  int channels_ = 1;
  SampleFn fn_;
};

FrameStack render_stack(const Scene& scene, int width, int height, double t0,
                        double dt, int count);

/// Stack whose span contains [t_begin, t_end] with one frame of margin on
/// each side, frames aligned to multiples of dt from t_anchor so that scan
/// instants that are multiples of dt blend exactly (alpha = 0).
FrameStack render_stack_covering(const Scene& scene, int width, int height,
                                 double t_begin, double t_end, double dt,
                                 double t_anchor = 0.0);

/// Band-limited random texture translating rigidly at (vx, vy) px/s.
/// Wavelengths stay above `min_wavelength` so the texture survives
/// coarse-scale area downsampling. `flat_border` > 0 fades the texture to
/// its mean within that many pixels of the [0,w)x[0,h) canvas border.
Scene smooth_noise_scene(std::uint64_t seed, double vx, double vy,
                         double min_wavelength = 24.0,
                         double max_wavelength = 80.0, int waves = 24,
                         double flat_border = 0.0, int width = 0,
                         int height = 0);

/// Soft-edged vertical bar translating horizontally at vx px/s. `tilt` skews
/// the bar by that many pixels per row, anchored at `center_row`.
Scene bar_scene(double center_x, double bar_width, double edge_width,
                double vx, double tilt = 0.0, double center_row = 0.0,
                double fg = 0.9, double bg = 0.1);

/// Thin vertical line translating horizontally at vx px/s, rendered with
/// exact pixel-coverage antialiasing (each pixel integrates the line's
/// overlap with its footprint), so intensity centroids recover the line
/// position to well below a pixel.
Scene line_scene(double center_x, double thickness, double vx);

/// Smooth texture spinning at `omega` rad/s about (cx, cy).
Scene spinning_scene(std::uint64_t seed, double omega, double cx, double cy,
                     double min_wavelength = 24.0, double max_wavelength = 80.0,
                     int waves = 24);

/// Static checkerboard helper for metric tests.
ImageBuf make_checker(int width, int height, int cell, float a = 0.0f,
                      float b = 1.0f);

/// splitmix64: tiny deterministic generator used for procedural parameters,
/// stable across platforms and standard-library versions.
struct SplitMix64 {
  std::uint64_t state;
  explicit SplitMix64(std::uint64_t seed) : state(seed) {}
  std::uint64_t next();
  double uniform();  // [0, 1)
  double uniform(double lo, double hi);
};

}  // namespace dualrs
