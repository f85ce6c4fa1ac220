#pragma once

#include "dualrs/image.hpp"

namespace dualrs {

struct CoverageError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

enum class ScanDirection { T2B, B2T };

const char* to_string(ScanDirection dir);

/// Shutter geometry of one rolling-shutter exposure. `midpoint` is the
/// center of the exposure window, so the window is
/// [midpoint - rows*row_readout/2, midpoint + rows*row_readout/2].
struct RsConfig {
  int rows = 0;            // M, equals image height
  double row_readout = 0;  // t_r, seconds between adjacent row scans
  double midpoint = 0;     // seconds
  ScanDirection direction = ScanDirection::T2B;

  double start_time() const { return midpoint - row_readout * rows / 2.0; }
  double end_time() const { return midpoint + row_readout * rows / 2.0; }
  double frame_readout() const { return (rows - 1) * row_readout; }

  void validate() const;
};

/// Time-indexed global-shutter frame sequence with uniform timestamps.
/// Frame j sits at t0 + j*dt.
struct FrameStack {
  std::vector<ImageBuf> frames;
  double t0 = 0;
  double dt = 0;

  int width() const { return frames.empty() ? 0 : frames.front().width; }
  int height() const { return frames.empty() ? 0 : frames.front().height; }
  int channels() const { return frames.empty() ? 0 : frames.front().channels; }
  double time_of(std::size_t j) const { return t0 + dt * static_cast<double>(j); }
  double time_end() const {
    return frames.empty() ? t0 : time_of(frames.size() - 1);
  }

  void validate() const;

  /// Linear blend of the two stack frames bracketing `tau`, single row.
  /// Throws CoverageError when `tau` falls outside the stack span.
  void sample_row(double tau, int row, float* out) const;

  /// Full-frame variant of sample_row.
  ImageBuf sample_frame(double tau) const;
};

/// Simultaneously captured reversed-scan pair sharing midpoint and readout.
/// `row_misalignment` shifts the b2t midpoint by that many row-readout
/// intervals to model imperfect clock synchronization.
struct DualPair {
  ImageBuf t2b;
  ImageBuf b2t;
  RsConfig config;  // direction field is not meaningful for the pair itself
  int row_misalignment = 0;
};

}  // namespace dualrs
