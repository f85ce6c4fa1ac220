#pragma once

#include <cmath>
#include <utility>
#include <vector>

#include "dualrs/scenes.hpp"
#include "dualrs/simulator.hpp"

namespace dualrs::test {

inline ImageBuf random_image(std::uint64_t seed, int w, int h, int c = 1) {
  SplitMix64 rng(seed);
  ImageBuf img(w, h, c);
  for (auto& v : img.pixels) v = static_cast<float>(rng.uniform());
  return img;
}

inline ImageBuf vflip(const ImageBuf& img) {
  ImageBuf out(img.width, img.height, img.channels);
  for (int y = 0; y < img.height; ++y)
    for (int x = 0; x < img.width; ++x)
      for (int c = 0; c < img.channels; ++c)
        out.at(x, y, c) = img.at(x, img.height - 1 - y, c);
  return out;
}

inline FrameStack vflip(const FrameStack& stack) {
  FrameStack out = stack;
  for (auto& f : out.frames) f = vflip(f);
  return out;
}

/// Intensity centroid of one row, in pixels.
inline double row_centroid(const ImageBuf& img, int row, int c = 0) {
  double wsum = 0.0, xsum = 0.0;
  for (int x = 0; x < img.width; ++x) {
    const double v = img.at(x, row, c);
    wsum += v;
    xsum += v * x;
  }
  return wsum > 0.0 ? xsum / wsum : -1.0;
}

/// Least-squares slope of y over x.
inline double fit_slope(const std::vector<double>& xs,
                        const std::vector<double>& ys) {
  double mx = 0.0, my = 0.0;
  for (std::size_t i = 0; i < xs.size(); ++i) {
    mx += xs[i];
    my += ys[i];
  }
  mx /= static_cast<double>(xs.size());
  my /= static_cast<double>(xs.size());
  double num = 0.0, den = 0.0;
  for (std::size_t i = 0; i < xs.size(); ++i) {
    num += (xs[i] - mx) * (ys[i] - my);
    den += (xs[i] - mx) * (xs[i] - mx);
  }
  return num / den;
}

/// Brute-force formation oracle: every row rendered directly from the
/// analytic scene at its scan instant, bypassing the frame stack entirely.
inline ImageBuf analytic_rs_render(const Scene& scene, const RsConfig& cfg,
                                   int width) {
  ImageBuf out(width, cfg.rows, scene.channels());
  for (int row = 0; row < cfg.rows; ++row) {
    const double tau = scan_instant(row, cfg);
    for (int x = 0; x < width; ++x)
      for (int c = 0; c < scene.channels(); ++c)
        out.at(x, row, c) = scene.sample(x, row, tau, c);
  }
  return out;
}

inline double plain_mse(const ImageBuf& a, const ImageBuf& b) {
  double sum = 0.0;
  for (std::size_t i = 0; i < a.pixels.size(); ++i) {
    const double d = static_cast<double>(a.pixels[i]) - b.pixels[i];
    sum += d * d;
  }
  return sum / static_cast<double>(a.pixels.size());
}

/// Oracle scene bundle for round-trip tests: a smooth texture translating at
/// a constant velocity, its dual render, ground truth, and the true velocity
/// cube implied by the motion.
struct OracleScene {
  Scene scene;
  FrameStack stack;
  RsConfig config;
  DualPair pair;
  GsSequence gt;
  VelocityCube true_velocity;
  double vx_per_readout = 0.0;
  double vy_per_readout = 0.0;
};

inline OracleScene make_oracle_scene(int size, int n_frames,
                                     double vx_per_readout,
                                     double vy_per_readout = 0.0,
                                     int misalign_rows = 0,
                                     std::uint64_t seed = 7) {
  OracleScene s;
  s.config = RsConfig{size, 1.0 / 8192.0, 0.0, ScanDirection::T2B};
  const double readout = s.config.frame_readout();
  const double vx = vx_per_readout / readout;  // px/s
  const double vy = vy_per_readout / readout;
  s.scene = smooth_noise_scene(seed, vx, vy, 24.0, 80.0, 24);
  const double shift = misalign_rows * s.config.row_readout;
  const double lo = std::min(s.config.start_time(), s.config.start_time() + shift);
  const double hi = std::max(s.config.end_time(), s.config.end_time() + shift);
  const double dt = s.config.rows * s.config.row_readout / 32.0;
  s.stack = render_stack_covering(s.scene, size, size, lo, hi, dt);
  s.pair = synthesize_dual(s.stack, s.config, misalign_rows);
  s.gt = synthesize_gt(s.stack, s.config, n_frames);
  s.true_velocity = VelocityCube::global_const(
      n_frames, size, size, vx_per_readout, vy_per_readout);
  s.vx_per_readout = vx_per_readout;
  s.vy_per_readout = vy_per_readout;
  return s;
}

}  // namespace dualrs::test
