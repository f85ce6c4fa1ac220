#include "dualrs/simulator.hpp"

#include <algorithm>
#include <string>

#include "dualrs/parallel.hpp"

namespace dualrs {

double scan_instant(int row, const RsConfig& cfg) {
  if (row < 0 || row >= cfg.rows) {
    throw ShapeError("scan_instant: row " + std::to_string(row) +
                     " outside [0, " + std::to_string(cfg.rows) + ")");
  }
  const double offset = (row - cfg.rows / 2.0) * cfg.row_readout;
  return cfg.direction == ScanDirection::T2B ? cfg.midpoint + offset
                                             : cfg.midpoint - offset;
}

namespace {

void check_coverage(const FrameStack& stack, const RsConfig& cfg) {
  const double tol = stack.dt * 1e-6;
  if (cfg.start_time() < stack.t0 - tol || cfg.end_time() > stack.time_end() + tol) {
    throw CoverageError(
        "stack span [" + std::to_string(stack.t0) + ", " +
        std::to_string(stack.time_end()) + "] does not cover exposure window [" +
        std::to_string(cfg.start_time()) + ", " + std::to_string(cfg.end_time()) +
        "]");
  }
}

}  // namespace

ImageBuf synthesize_rs(const FrameStack& stack, const RsConfig& cfg) {
  stack.validate();
  cfg.validate();
  if (stack.height() != cfg.rows) {
    throw ShapeError("synthesize_rs: stack height " +
                     std::to_string(stack.height()) + " != config rows " +
                     std::to_string(cfg.rows));
  }
  check_coverage(stack, cfg);

  ImageBuf out(stack.width(), stack.height(), stack.channels());
  parallel_for(0, cfg.rows, [&](int row) {
    stack.sample_row(scan_instant(row, cfg), row, &out.pixels[out.index(0, row, 0)]);
  });
  return out;
}

DualPair synthesize_dual(const FrameStack& stack, const RsConfig& cfg,
                         int misalign_rows) {
  if (std::abs(misalign_rows) >= cfg.rows) {
    throw ShapeError("synthesize_dual: |misalign_rows| must be < rows");
  }
  RsConfig t2b = cfg;
  t2b.direction = ScanDirection::T2B;
  RsConfig b2t = cfg;
  b2t.direction = ScanDirection::B2T;
  b2t.midpoint = cfg.midpoint + misalign_rows * cfg.row_readout;

  DualPair pair;
  pair.t2b = synthesize_rs(stack, t2b);
  pair.b2t = synthesize_rs(stack, b2t);
  pair.config = cfg;
  pair.row_misalignment = misalign_rows;
  return pair;
}

GsSequence synthesize_gt(const FrameStack& stack, const RsConfig& cfg,
                         int n_targets) {
  stack.validate();
  cfg.validate();
  check_coverage(stack, cfg);
  GsSequence seq;
  seq.instants = target_times(cfg, n_targets);
  seq.frames.reserve(n_targets);
  for (double t : seq.instants) seq.frames.push_back(stack.sample_frame(t));
  return seq;
}

AmbiguityScenes ambiguity_scene(double v, double readout_a, double readout_b,
                                int width, int rows) {
  AmbiguityScenes out;
  out.tilt_per_row = v * (readout_a - readout_b);

  const double center_x = width / 2.0;
  const double bar_width = width / 12.0;
  const double edge = 3.0;
  const double center_row = rows / 2.0;
  Scene upright = bar_scene(center_x, bar_width, edge, v);
  Scene tilted =
      bar_scene(center_x, bar_width, edge, v, out.tilt_per_row, center_row);

  out.config_a = {rows, readout_a, 0.0, ScanDirection::T2B};
  out.config_b = {rows, readout_b, 0.0, ScanDirection::T2B};

  // One stack step per b-readout keeps every scan instant of both configs on
  // the frame grid, so renders carry no temporal blend error.
  const double dt = std::min(readout_a, readout_b);
  const double half = std::max(out.config_a.end_time(), out.config_b.end_time());
  out.stack_a = render_stack_covering(upright, width, rows, -half, half, dt);
  out.stack_b = render_stack_covering(tilted, width, rows, -half, half, dt);
  return out;
}

}  // namespace dualrs
