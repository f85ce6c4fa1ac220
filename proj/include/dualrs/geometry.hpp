#pragma once

#include <array>
#include <cstdint>
#include <vector>

#include "dualrs/camera.hpp"

namespace dualrs {

/// Normalized scan-time offsets between each image row and each extraction
/// target, an N x M table (the offset depends on the row only). Entry (n, m)
/// is the offset in units of the full-frame readout (M-1)*t_r; T2B entries
/// increase strictly with m, B2T entries decrease. Kept at double precision
/// so the construction identities hold to rounding, unlike pixel data.
struct TimeCube {
  int n_targets = 0;
  int n_rows = 0;
  std::vector<double> values;  // row-major (target, row)
  ScanDirection direction = ScanDirection::T2B;

  int rows() const { return n_rows; }
  int targets() const { return n_targets; }
  double at(int n, int row) const {
    return values[static_cast<std::size_t>(n) * n_rows + row];
  }

  /// Same cube with a constant normalized offset added, used for the
  /// clock-misalignment variant of the b2t camera.
  TimeCube shifted(double offset) const;
};

TimeCube build_time_cube(int rows, int n_targets, ScanDirection direction);

/// Normalized offset equivalent of a whole-row clock misalignment.
double misalignment_offset(int misalign_rows, int rows);

/// Target instants t_1..t_N. N >= 2 spans [start_time, end_time] inclusive
/// with uniform spacing; N == 1 is pinned to the window midpoint.
std::vector<double> target_times(const RsConfig& cfg, int n_targets);

enum class VelocityModel { GlobalConst, GlobalAffine, Dense };

const char* to_string(VelocityModel model);

/// Per-target motion field, in pixels per full-frame readout (rows-1)*t_r.
///
/// GlobalConst holds one (vx, vy) shared by every target and pixel;
/// GlobalAffine holds 6 coefficients {ax0,ax1,ax2, ay0,ay1,ay2} evaluated
/// against the basis (1, nx, ny) with nx, ny the pixel position relative to
/// the image center, normalized by width/height to [-0.5, 0.5]. Both global
/// forms are expressed in full-resolution pixels and are rescaled on the fly
/// when expanded onto a reduced grid (height/width vs full_height/width).
/// Dense stores per-pixel per-target values in bound-grid pixels.
struct VelocityCube {
  VelocityModel model = VelocityModel::GlobalConst;
  int n_frames = 0;
  int height = 0, width = 0;            // grid the cube is bound to
  int full_height = 0, full_width = 0;  // reference grid for Global* units
  std::vector<double> params;

  static VelocityCube global_const(int n, int h, int w, double vx, double vy);
  static VelocityCube global_affine(int n, int h, int w,
                                    const std::array<double, 6>& coef);
  static VelocityCube dense(int n, int h, int w);

  std::size_t dof() const;

  /// Deterministic expansion to an N x H x W x 2 cube in bound-grid pixels
  /// per full-frame readout.
  Cube to_dense() const;
};

/// Backward-warp displacement fields, N x H x W x 2 in pixels. Entry
/// (n, y, x) moves a target-frame pixel to its sample position in the RS
/// input.
struct FlowCube {
  Cube values;
};

/// Elementwise product of the per-row time offsets and the velocity field,
/// broadcast across columns and both components.
FlowCube flow_from_velocity(const TimeCube& offsets, const VelocityCube& velocity);
FlowCube flow_from_velocity(const TimeCube& offsets, const Cube& dense_velocity);

/// Extracted global-shutter frames with their target instants.
struct GsSequence {
  std::vector<ImageBuf> frames;
  std::vector<double> instants;
};

/// Conversion from scene velocity in pixels per second to the cube's
/// pixels-per-full-frame-readout unit.
double pixels_per_readout(double px_per_second, const RsConfig& cfg);

}  // namespace dualrs
