#pragma once

#include <optional>

#include "dualrs/warp.hpp"

namespace dualrs {

/// Configuration of the coarse-to-fine velocity estimator. The pyramid runs
/// the listed scales in order (last must be 1) and warm-starts each scale
/// from the previous one; the first scale starts from zero velocity unless
/// `init` is given.
struct SolverParams {
  VelocityModel model = VelocityModel::GlobalConst;
  int n_frames = 9;
  std::vector<double> scales{0.125, 0.25, 0.5, 1.0};
  int iters_per_scale = 200;
  double step = 0.5;  // 0.05 for Dense, see defaults_for
  double lambda_v = 0.1;
  double charbonnier_eps = 1e-3;
  double min_rel_decrease = 1e-9;
  int max_halvings = 10;
  std::optional<VelocityCube> init;

  static SolverParams defaults_for(VelocityModel model, int n_frames);
  void validate() const;
};

struct ObjectiveBreakdown {
  double data_term = 0.0;
  double tv_term = 0.0;
  double total = 0.0;  // data_term + lambda_v * tv_term
};

/// Mean over elements of sqrt((a-b)^2 + eps^2).
double charbonnier(const ImageBuf& a, const ImageBuf& b, double eps);
double charbonnier(const Cube& a, const Cube& b, double eps);

/// Mean absolute forward difference of the flow field, x and y direction
/// contributions averaged separately over their defined positions and
/// summed.
double total_variation(const FlowCube& flow);

/// Self-supervised objective: per-target Charbonnier distance between the
/// two warped inputs over their co-valid pixels, plus the total-variation
/// penalty of both flow cubes. Uses the pair's row misalignment.
ObjectiveBreakdown dual_objective(const DualPair& pair,
                                  const VelocityCube& velocity,
                                  const SolverParams& params);

struct ObjectiveWithGradient {
  ObjectiveBreakdown value;
  std::vector<double> gradient;  // w.r.t. the model's parameter vector
};

ObjectiveWithGradient dual_objective_with_gradient(const DualPair& pair,
                                                   const VelocityCube& velocity,
                                                   const SolverParams& params);

/// One accepted line-search iterate. Iteration 0 is the scale's starting
/// objective.
struct IterationRecord {
  int scale_index = 0;
  double scale = 1.0;
  int iteration = 0;
  ObjectiveBreakdown objective;
};

struct SolveResult {
  VelocityCube velocity;
  std::vector<IterationRecord> log;
  bool degenerate = false;  // flat-objective input, velocity pinned to zero
};

/// Pyramid gradient descent with backtracking line search on the
/// self-supervised dual objective. The accepted-iterate objective is
/// non-increasing within each scale.
SolveResult estimate_velocity(const DualPair& pair, const SolverParams& params);

/// Benchmarking variant that fits the velocity against provided reference
/// frames (Charbonnier on the fused output plus the flow penalty) instead of
/// dual consistency.
SolveResult estimate_velocity_supervised(const DualPair& pair,
                                         const GsSequence& reference,
                                         const SolverParams& params);

struct ExtractResult {
  GsSequence sequence;
  VelocityCube velocity;
  FlowCube flow_t2b;
  FlowCube flow_b2t;
  std::vector<IterationRecord> log;
  bool degenerate = false;
};

/// Full pipeline: estimate (or take) the velocity cube, build both time and
/// flow cubes, warp both inputs and fuse them with the proximity mask and a
/// zero residual.
ExtractResult extract_frames(const DualPair& pair, const SolverParams& params);
ExtractResult extract_frames(const DualPair& pair, const SolverParams& params,
                             const VelocityCube& velocity);

/// Exact fractional box filter (area average), used by the solver pyramid.
ImageBuf area_downsample(const ImageBuf& img, int new_width, int new_height);

}  // namespace dualrs
