#include "dualrs/scenes.hpp"

#include <algorithm>
#include <cmath>
#include <vector>

namespace dualrs {

std::uint64_t SplitMix64::next() {
  state += 0x9e3779b97f4a7c15ULL;
  std::uint64_t z = state;
  z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
  z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
  return z ^ (z >> 31);
}

double SplitMix64::uniform() {
  return static_cast<double>(next() >> 11) * 0x1.0p-53;
}

double SplitMix64::uniform(double lo, double hi) {
  return lo + (hi - lo) * uniform();
}

ImageBuf Scene::render(int width, int height, double t) const {
  ImageBuf out(width, height, channels_);
  for (int y = 0; y < height; ++y)
    for (int x = 0; x < width; ++x)
      for (int c = 0; c < channels_; ++c)
        out.at(x, y, c) = fn_(static_cast<double>(x), static_cast<double>(y), t, c);
  return out;
}

FrameStack render_stack(const Scene& scene, int width, int height, double t0,
                        double dt, int count) {
  FrameStack stack;
  stack.t0 = t0;
  stack.dt = dt;
  stack.frames.reserve(count);
  for (int j = 0; j < count; ++j) {
    stack.frames.push_back(scene.render(width, height, t0 + dt * j));
  }
  stack.validate();
  return stack;
}

FrameStack render_stack_covering(const Scene& scene, int width, int height,
                                 double t_begin, double t_end, double dt,
                                 double t_anchor) {
  const auto j_begin =
      static_cast<long long>(std::floor((t_begin - t_anchor) / dt)) - 1;
  const auto j_end =
      static_cast<long long>(std::ceil((t_end - t_anchor) / dt)) + 1;
  const double t0 = t_anchor + dt * static_cast<double>(j_begin);
  return render_stack(scene, width, height, t0, dt,
                      static_cast<int>(j_end - j_begin) + 1);
}

namespace {

struct Wave {
  double kx, ky, phase, amp;
};

std::vector<Wave> make_waves(std::uint64_t seed, double min_wavelength,
                             double max_wavelength, int waves) {
  SplitMix64 rng(seed);
  std::vector<Wave> out(waves);
  for (auto& w : out) {
    const double wavelength = rng.uniform(min_wavelength, max_wavelength);
    const double angle = rng.uniform(0.0, 2.0 * M_PI);
    const double k = 2.0 * M_PI / wavelength;
    w.kx = k * std::cos(angle);
    w.ky = k * std::sin(angle);
    w.phase = rng.uniform(0.0, 2.0 * M_PI);
    w.amp = rng.uniform(0.5, 1.0);
  }
  // Normalize so peak deviation from the mid level stays inside [0.1, 0.9].
  double total = 0.0;
  for (const auto& w : out) total += w.amp;
  for (auto& w : out) w.amp *= 0.4 / total;
  return out;
}

double texture_value(const std::vector<Wave>& waves, double x, double y) {
  double v = 0.5;
  for (const auto& w : waves) {
    v += w.amp * std::sin(w.kx * x + w.ky * y + w.phase);
  }
  return v;
}

double border_fade(double x, double y, double margin, int width, int height) {
  const double d = std::min(std::min(x, width - 1.0 - x),
                            std::min(y, height - 1.0 - y));
  const double u = std::clamp(d / margin, 0.0, 1.0);
  return u * u * (3.0 - 2.0 * u);
}

}  // namespace

Scene smooth_noise_scene(std::uint64_t seed, double vx, double vy,
                         double min_wavelength, double max_wavelength,
                         int waves, double flat_border, int width, int height) {
  auto w = make_waves(seed, min_wavelength, max_wavelength, waves);
  return Scene(1, [=](double x, double y, double t, int) -> float {
    double v = texture_value(w, x - vx * t, y - vy * t);
    if (flat_border > 0.0) {
      v = 0.5 + (v - 0.5) * border_fade(x, y, flat_border, width, height);
    }
    return static_cast<float>(std::clamp(v, 0.0, 1.0));
  });
}

Scene bar_scene(double center_x, double bar_width, double edge_width,
                double vx, double tilt, double center_row, double fg,
                double bg) {
  return Scene(1, [=](double x, double y, double t, int) -> float {
    const double cx = center_x + vx * t + tilt * (y - center_row);
    const double d = std::abs(x - cx) - bar_width * 0.5;
    const double u = std::clamp(0.5 - d / edge_width, 0.0, 1.0);
    const double s = u * u * (3.0 - 2.0 * u);
    return static_cast<float>(bg + (fg - bg) * s);
  });
}

Scene line_scene(double center_x, double thickness, double vx) {
  return Scene(1, [=](double x, double y, double t, int) -> float {
    (void)y;
    const double cx = center_x + vx * t;
    const double lo = std::max(x - 0.5, cx - thickness * 0.5);
    const double hi = std::min(x + 0.5, cx + thickness * 0.5);
    return static_cast<float>(std::max(0.0, hi - lo));
  });
}

Scene spinning_scene(std::uint64_t seed, double omega, double cx, double cy,
                     double min_wavelength, double max_wavelength, int waves) {
  auto w = make_waves(seed, min_wavelength, max_wavelength, waves);
  return Scene(1, [=](double x, double y, double t, int) -> float {
    const double a = -omega * t;
    const double ca = std::cos(a), sa = std::sin(a);
    const double dx = x - cx, dy = y - cy;
    const double rx = cx + ca * dx - sa * dy;
    const double ry = cy + sa * dx + ca * dy;
    return static_cast<float>(std::clamp(texture_value(w, rx, ry), 0.0, 1.0));
  });
}

ImageBuf make_checker(int width, int height, int cell, float a, float b) {
  ImageBuf out(width, height, 1);
  for (int y = 0; y < height; ++y)
    for (int x = 0; x < width; ++x)
      out.at(x, y, 0) = ((x / cell + y / cell) % 2 == 0) ? a : b;
  return out;
}

}  // namespace dualrs
