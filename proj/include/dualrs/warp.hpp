#pragma once

#include "dualrs/geometry.hpp"

namespace dualrs {

/// N warped images plus a {0,1} validity cube. A pixel is invalid when its
/// pre-clamp sample coordinate left [0, W-1] x [0, H-1]; the warped value is
/// still defined there (clamp-to-edge) so downstream fusion decides what to
/// keep.
struct WarpResult {
  Cube warped;    // N x H x W x C
  Cube validity;  // N x H x W x 1
};

/// Backward warp: output (n, y, x) samples src at (x + F_x, y + F_y).
WarpResult backward_warp(const ImageBuf& src, const FlowCube& flow);

/// Per-row fusion weights from the two time cubes: rows scanned closer in
/// time to the target instant get more weight, an exact-row match gets full
/// weight, a tie gets 0.5. Stored N x M x 1 x 1 like the time cubes.
Cube proximity_mask(const TimeCube& t2b, const TimeCube& b2t);

/// mask * warped_t2b + (1 - mask) * warped_b2t + residual, clamped to [0,1].
/// Where exactly one input is invalid the mask is overridden to fully weight
/// the valid one. `mask` and `residual` broadcast along any axis of size 1;
/// an empty residual cube means zero.
std::vector<ImageBuf> blend_warped(const WarpResult& w_t2b,
                                   const WarpResult& w_b2t, const Cube& mask,
                                   const Cube& residual = Cube());

}  // namespace dualrs
