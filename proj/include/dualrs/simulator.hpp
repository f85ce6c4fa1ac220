#pragma once

#include "dualrs/camera.hpp"
#include "dualrs/geometry.hpp"
#include "dualrs/scenes.hpp"

namespace dualrs {

/// Instant at which row i (0-based) is scanned. T2B sweeps the exposure
/// window forward, B2T sweeps it backward; the two are symmetric about the
/// midpoint, so scan_instant(i, T2B) + scan_instant(i, B2T) == 2t.
double scan_instant(int row, const RsConfig& cfg);

/// Rolling-shutter render: row i of the output is row i of the stack,
/// linearly blended at scan_instant(i). The stack must cover the exposure
/// window.
ImageBuf synthesize_rs(const FrameStack& stack, const RsConfig& cfg);

/// Reversed-scan pair at a shared midpoint. misalign_rows shifts the b2t
/// camera's midpoint by whole row-readout intervals to model imperfect
/// clock synchronization.
DualPair synthesize_dual(const FrameStack& stack, const RsConfig& cfg,
                         int misalign_rows = 0);

/// Ground-truth global-shutter frames at the target instants.
GsSequence synthesize_gt(const FrameStack& stack, const RsConfig& cfg,
                         int n_targets);

/// Readout-ambiguity construction: two scenes whose single-direction renders
/// are pixel-identical while the reversed-direction renders differ. Scene A
/// is an upright bar under readout `readout_a`; scene B pre-tilts the bar by
/// v*(readout_a - readout_b) px/row and uses readout `readout_b`; both
/// translate at `v` px/s. Stack frames are aligned so every scan instant of
/// either config lands exactly on a stack frame.
struct AmbiguityScenes {
  FrameStack stack_a;
  RsConfig config_a;
  FrameStack stack_b;
  RsConfig config_b;
  double tilt_per_row = 0.0;
};

AmbiguityScenes ambiguity_scene(double v = 400.0, double readout_a = 2e-4,
                                double readout_b = 1e-4, int width = 160,
                                int rows = 128);

}  // namespace dualrs
