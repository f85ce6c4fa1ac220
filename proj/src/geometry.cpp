#include "dualrs/geometry.hpp"

#include <string>

namespace dualrs {

TimeCube TimeCube::shifted(double offset) const {
  TimeCube out = *this;
  for (double& v : out.values) v += offset;
  return out;
}

TimeCube build_time_cube(int rows, int n_targets, ScanDirection direction) {
  if (rows < 2) throw ShapeError("build_time_cube: rows must be >= 2");
  if (n_targets < 1) throw ShapeError("build_time_cube: n_targets must be >= 1");

  TimeCube cube;
  cube.direction = direction;
  cube.n_targets = n_targets;
  cube.n_rows = rows;
  cube.values.resize(static_cast<std::size_t>(n_targets) * rows);
  for (int n = 0; n < n_targets; ++n) {
    // Single-target extraction is pinned to the window midpoint.
    const double target_frac =
        n_targets == 1 ? 0.5 : static_cast<double>(n) / (n_targets - 1);
    for (int m = 0; m < rows; ++m) {
      // B2T reverses the row index before normalizing, which makes the flip
      // identity bit-exact rather than merely close.
      const int row = direction == ScanDirection::T2B ? m : rows - 1 - m;
      const double row_frac = static_cast<double>(row) / (rows - 1);
      cube.values[static_cast<std::size_t>(n) * rows + m] = row_frac - target_frac;
    }
  }
  return cube;
}

double misalignment_offset(int misalign_rows, int rows) {
  return static_cast<double>(misalign_rows) / (rows - 1);
}

std::vector<double> target_times(const RsConfig& cfg, int n_targets) {
  if (n_targets < 1) throw ShapeError("target_times: n_targets must be >= 1");
  if (n_targets == 1) return {cfg.midpoint};
  std::vector<double> times(n_targets);
  const double t_s = cfg.start_time();
  const double span = cfg.end_time() - t_s;
  for (int n = 0; n < n_targets; ++n) {
    times[n] = t_s + span * static_cast<double>(n) / (n_targets - 1);
  }
  return times;
}

const char* to_string(VelocityModel model) {
  switch (model) {
    case VelocityModel::GlobalConst: return "const";
    case VelocityModel::GlobalAffine: return "affine";
    case VelocityModel::Dense: return "dense";
  }
  return "?";
}

VelocityCube VelocityCube::global_const(int n, int h, int w, double vx, double vy) {
  VelocityCube v;
  v.model = VelocityModel::GlobalConst;
  v.n_frames = n;
  v.height = v.full_height = h;
  v.width = v.full_width = w;
  v.params = {vx, vy};
  return v;
}

VelocityCube VelocityCube::global_affine(int n, int h, int w,
                                         const std::array<double, 6>& coef) {
  VelocityCube v;
  v.model = VelocityModel::GlobalAffine;
  v.n_frames = n;
  v.height = v.full_height = h;
  v.width = v.full_width = w;
  v.params.assign(coef.begin(), coef.end());
  return v;
}

VelocityCube VelocityCube::dense(int n, int h, int w) {
  VelocityCube v;
  v.model = VelocityModel::Dense;
  v.n_frames = n;
  v.height = v.full_height = h;
  v.width = v.full_width = w;
  v.params.assign(static_cast<std::size_t>(n) * h * w * 2, 0.0);
  return v;
}

std::size_t VelocityCube::dof() const {
  switch (model) {
    case VelocityModel::GlobalConst: return 2;
    case VelocityModel::GlobalAffine: return 6;
    case VelocityModel::Dense:
      return static_cast<std::size_t>(n_frames) * height * width * 2;
  }
  return 0;
}

Cube VelocityCube::to_dense() const {
  if (params.size() != dof()) {
    throw ShapeError("VelocityCube: parameter count does not match model");
  }
  Cube out(n_frames, height, width, 2);
  // Reduced-grid pixels shrink with the grid, so global parameters carry a
  // per-axis ratio; dense values are already bound-grid relative.
  const double rx = static_cast<double>(width) / full_width;
  const double ry = static_cast<double>(height) / full_height;
  switch (model) {
    case VelocityModel::GlobalConst: {
      const float vx = static_cast<float>(params[0] * rx);
      const float vy = static_cast<float>(params[1] * ry);
      for (int n = 0; n < n_frames; ++n)
        for (int y = 0; y < height; ++y)
          for (int x = 0; x < width; ++x) {
            out.at(n, y, x, 0) = vx;
            out.at(n, y, x, 1) = vy;
          }
      break;
    }
    case VelocityModel::GlobalAffine: {
      for (int n = 0; n < n_frames; ++n)
        for (int y = 0; y < height; ++y) {
          const double ny = (y - (height - 1) * 0.5) / height;
          for (int x = 0; x < width; ++x) {
            const double nx = (x - (width - 1) * 0.5) / width;
            out.at(n, y, x, 0) = static_cast<float>(
                rx * (params[0] + params[1] * nx + params[2] * ny));
            out.at(n, y, x, 1) = static_cast<float>(
                ry * (params[3] + params[4] * nx + params[5] * ny));
          }
        }
      break;
    }
    case VelocityModel::Dense:
      for (std::size_t i = 0; i < params.size(); ++i) {
        out.data[i] = static_cast<float>(params[i]);
      }
      break;
  }
  return out;
}

FlowCube flow_from_velocity(const TimeCube& offsets, const VelocityCube& velocity) {
  return flow_from_velocity(offsets, velocity.to_dense());
}

FlowCube flow_from_velocity(const TimeCube& offsets, const Cube& dense_velocity) {
  if (dense_velocity.channels != 2) {
    throw ShapeError("flow_from_velocity: velocity cube must have 2 channels");
  }
  if (offsets.targets() != dense_velocity.n_frames ||
      offsets.rows() != dense_velocity.height) {
    throw ShapeError("flow_from_velocity: time cube " +
                     std::to_string(offsets.targets()) + "x" +
                     std::to_string(offsets.rows()) +
                     " does not match velocity cube " +
                     std::to_string(dense_velocity.n_frames) + "x" +
                     std::to_string(dense_velocity.height));
  }
  FlowCube flow;
  flow.values = Cube(dense_velocity.n_frames, dense_velocity.height,
                     dense_velocity.width, 2);
  for (int n = 0; n < dense_velocity.n_frames; ++n)
    for (int y = 0; y < dense_velocity.height; ++y) {
      const float p = static_cast<float>(offsets.at(n, y));
      for (int x = 0; x < dense_velocity.width; ++x) {
        flow.values.at(n, y, x, 0) = p * dense_velocity.at(n, y, x, 0);
        flow.values.at(n, y, x, 1) = p * dense_velocity.at(n, y, x, 1);
      }
    }
  return flow;
}

double pixels_per_readout(double px_per_second, const RsConfig& cfg) {
  return px_per_second * cfg.frame_readout();
}

}  // namespace dualrs
