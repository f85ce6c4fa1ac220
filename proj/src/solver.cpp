#include "dualrs/solver.hpp"

#include <algorithm>
#include <cmath>
#include <string>

#include "dualrs/parallel.hpp"

namespace dualrs {

SolverParams SolverParams::defaults_for(VelocityModel model, int n_frames) {
  SolverParams p;
  p.model = model;
  p.n_frames = n_frames;
  if (model == VelocityModel::Dense) p.step = 0.05;
  return p;
}

void SolverParams::validate() const {
  if (n_frames < 1) throw ShapeError("SolverParams: n_frames must be >= 1");
  if (scales.empty() || scales.back() != 1.0) {
    throw ShapeError("SolverParams: scales must end at 1");
  }
  for (std::size_t i = 1; i < scales.size(); ++i) {
    if (scales[i] <= scales[i - 1]) {
      throw ShapeError("SolverParams: scales must be strictly increasing");
    }
  }
  if (scales.front() <= 0.0) throw ShapeError("SolverParams: scales must be > 0");
  if (iters_per_scale < 0 || max_halvings < 0) {
    throw ShapeError("SolverParams: negative iteration budget");
  }
  if (step <= 0.0 || lambda_v < 0.0 || charbonnier_eps < 0.0) {
    throw ShapeError("SolverParams: weights must be non-negative, step > 0");
  }
}

namespace {

double charbonnier_span(const float* a, const float* b, std::size_t count,
                        double eps) {
  if (count == 0) return 0.0;
  const double e2 = eps * eps;
  double sum = 0.0;
  for (std::size_t i = 0; i < count; ++i) {
    const double d = static_cast<double>(a[i]) - b[i];
    sum += std::sqrt(d * d + e2);
  }
  return sum / static_cast<double>(count);
}

}  // namespace

double charbonnier(const ImageBuf& a, const ImageBuf& b, double eps) {
  if (!a.same_shape(b)) throw ShapeError("charbonnier: image shapes differ");
  return charbonnier_span(a.pixels.data(), b.pixels.data(), a.pixels.size(), eps);
}

double charbonnier(const Cube& a, const Cube& b, double eps) {
  if (!a.same_shape(b)) throw ShapeError("charbonnier: cube shapes differ");
  return charbonnier_span(a.data.data(), b.data.data(), a.data.size(), eps);
}

double total_variation(const FlowCube& flow) {
  const Cube& f = flow.values;
  double sum_x = 0.0, sum_y = 0.0;
  for (int n = 0; n < f.n_frames; ++n)
    for (int y = 0; y < f.height; ++y)
      for (int x = 0; x < f.width; ++x)
        for (int c = 0; c < f.channels; ++c) {
          const float v = f.at(n, y, x, c);
          if (x + 1 < f.width) sum_x += std::abs(f.at(n, y, x + 1, c) - v);
          if (y + 1 < f.height) sum_y += std::abs(f.at(n, y + 1, x, c) - v);
        }
  double tv = 0.0;
  if (f.width > 1) {
    tv += sum_x / (static_cast<double>(f.n_frames) * f.height * (f.width - 1) *
                   f.channels);
  }
  if (f.height > 1) {
    tv += sum_y / (static_cast<double>(f.n_frames) * (f.height - 1) * f.width *
                   f.channels);
  }
  return tv;
}

ImageBuf area_downsample(const ImageBuf& img, int new_width, int new_height) {
  if (new_width == img.width && new_height == img.height) return img;

  // Per-axis fractional spans: output index i covers the source interval
  // [i*S/D, (i+1)*S/D).
  auto spans = [](int src, int dst) {
    std::vector<std::vector<std::pair<int, double>>> all(dst);
    const double ratio = static_cast<double>(src) / dst;
    for (int i = 0; i < dst; ++i) {
      const double lo = i * ratio;
      const double hi = (i + 1) * ratio;
      auto& span = all[i];
      for (int j = static_cast<int>(lo); j < src && j < hi; ++j) {
        const double w =
            std::min(hi, static_cast<double>(j + 1)) - std::max(lo, static_cast<double>(j));
        if (w > 0) span.emplace_back(j, w / ratio);
      }
    }
    return all;
  };
  const auto sx = spans(img.width, new_width);
  const auto sy = spans(img.height, new_height);

  ImageBuf tmp(new_width, img.height, img.channels);
  for (int y = 0; y < img.height; ++y)
    for (int x = 0; x < new_width; ++x)
      for (int c = 0; c < img.channels; ++c) {
        double acc = 0.0;
        for (const auto& [j, w] : sx[x]) acc += w * img.at(j, y, c);
        tmp.at(x, y, c) = static_cast<float>(acc);
      }
  ImageBuf out(new_width, new_height, img.channels);
  for (int y = 0; y < new_height; ++y)
    for (int x = 0; x < new_width; ++x)
      for (int c = 0; c < img.channels; ++c) {
        double acc = 0.0;
        for (const auto& [j, w] : sy[y]) acc += w * tmp.at(x, j, c);
        out.at(x, y, c) = static_cast<float>(acc);
      }
  return out;
}

namespace {

// Double-precision sampling used by the objective so finite-difference
// probes are not limited by float rounding.
inline double sample_d(const ImageBuf& img, double x, double y, int c) {
  const double cx = std::clamp(x, 0.0, static_cast<double>(img.width - 1));
  const double cy = std::clamp(y, 0.0, static_cast<double>(img.height - 1));
  const int x0 = static_cast<int>(cx);
  const int y0 = static_cast<int>(cy);
  const int x1 = std::min(x0 + 1, img.width - 1);
  const int y1 = std::min(y0 + 1, img.height - 1);
  const double fx = cx - x0;
  const double fy = cy - y0;
  const double v00 = img.at(x0, y0, c);
  const double v10 = img.at(x1, y0, c);
  const double v01 = img.at(x0, y1, c);
  const double v11 = img.at(x1, y1, c);
  const double top = v00 + fx * (v10 - v00);
  const double bot = v01 + fx * (v11 - v01);
  return top + fy * (bot - top);
}

inline void gradient_d(const ImageBuf& img, double x, double y, int c,
                       double& gx, double& gy) {
  const bool in_x = x >= 0.0 && x <= static_cast<double>(img.width - 1);
  const bool in_y = y >= 0.0 && y <= static_cast<double>(img.height - 1);
  const double cx = std::clamp(x, 0.0, static_cast<double>(img.width - 1));
  const double cy = std::clamp(y, 0.0, static_cast<double>(img.height - 1));
  const int x0 = static_cast<int>(cx);
  const int y0 = static_cast<int>(cy);
  const int x1 = std::min(x0 + 1, img.width - 1);
  const int y1 = std::min(y0 + 1, img.height - 1);
  const double fx = cx - x0;
  const double fy = cy - y0;
  const double v00 = img.at(x0, y0, c);
  const double v10 = img.at(x1, y0, c);
  const double v01 = img.at(x0, y1, c);
  const double v11 = img.at(x1, y1, c);
  gx = in_x ? (1.0 - fy) * (v10 - v00) + fy * (v11 - v01) : 0.0;
  gy = in_y ? (1.0 - fx) * (v01 - v00) + fx * (v11 - v10) : 0.0;
}

inline bool inside(const ImageBuf& img, double x, double y) {
  return x >= 0.0 && x <= static_cast<double>(img.width - 1) && y >= 0.0 &&
         y <= static_cast<double>(img.height - 1);
}

inline double sgn(double v) { return v > 0.0 ? 1.0 : (v < 0.0 ? -1.0 : 0.0); }

// Model binding for one pyramid level: which grid the parameter vector is
// expanded onto and the reference grid defining Global* units.
struct Binding {
  VelocityModel model;
  int n, h, w;
  int full_h, full_w;

  std::size_t dof() const {
    switch (model) {
      case VelocityModel::GlobalConst: return 2;
      case VelocityModel::GlobalAffine: return 6;
      case VelocityModel::Dense:
        return static_cast<std::size_t>(n) * h * w * 2;
    }
    return 0;
  }
  double rx() const { return static_cast<double>(w) / full_w; }
  double ry() const { return static_cast<double>(h) / full_h; }
};

// Dense bound-grid velocity (n*h*w*2 doubles) from the parameter vector.
std::vector<double> expand_velocity(const Binding& b, const std::vector<double>& p) {
  std::vector<double> v(static_cast<std::size_t>(b.n) * b.h * b.w * 2);
  const double rx = b.rx(), ry = b.ry();
  switch (b.model) {
    case VelocityModel::GlobalConst: {
      const double vx = p[0] * rx, vy = p[1] * ry;
      for (std::size_t i = 0; i < v.size(); i += 2) {
        v[i] = vx;
        v[i + 1] = vy;
      }
      break;
    }
    case VelocityModel::GlobalAffine: {
      std::size_t i = 0;
      for (int n = 0; n < b.n; ++n)
        for (int y = 0; y < b.h; ++y) {
          const double ny = (y - (b.h - 1) * 0.5) / b.h;
          for (int x = 0; x < b.w; ++x, i += 2) {
            const double nx = (x - (b.w - 1) * 0.5) / b.w;
            v[i] = rx * (p[0] + p[1] * nx + p[2] * ny);
            v[i + 1] = ry * (p[3] + p[4] * nx + p[5] * ny);
          }
        }
      break;
    }
    case VelocityModel::Dense:
      v = p;
      break;
  }
  return v;
}

// Chain rule from the dense-velocity gradient back to parameter space.
std::vector<double> project_gradient(const Binding& b,
                                     const std::vector<double>& gv) {
  const double rx = b.rx(), ry = b.ry();
  switch (b.model) {
    case VelocityModel::GlobalConst: {
      double gx = 0.0, gy = 0.0;
      for (std::size_t i = 0; i < gv.size(); i += 2) {
        gx += gv[i];
        gy += gv[i + 1];
      }
      return {gx * rx, gy * ry};
    }
    case VelocityModel::GlobalAffine: {
      std::vector<double> g(6, 0.0);
      std::size_t i = 0;
      for (int n = 0; n < b.n; ++n)
        for (int y = 0; y < b.h; ++y) {
          const double ny = (y - (b.h - 1) * 0.5) / b.h;
          for (int x = 0; x < b.w; ++x, i += 2) {
            const double nx = (x - (b.w - 1) * 0.5) / b.w;
            g[0] += rx * gv[i];
            g[1] += rx * nx * gv[i];
            g[2] += rx * ny * gv[i];
            g[3] += ry * gv[i + 1];
            g[4] += ry * nx * gv[i + 1];
            g[5] += ry * ny * gv[i + 1];
          }
        }
      return g;
    }
    case VelocityModel::Dense:
      return gv;
  }
  return {};
}

// One pyramid level of the objective: the two (possibly downsampled) inputs,
// their time cubes, and for the supervised variant the reference frames and
// fusion mask.
struct LevelContext {
  ImageBuf t2b, b2t;
  TimeCube pt, pb;
  double eps = 1e-3;
  double lambda = 0.1;
  // Smoothing of |d| in the penalty while descending. The exact absolute
  // value has a kink wherever a flow difference crosses zero; the
  // subgradient there points along float noise and strands the line search,
  // so the solver minimizes sqrt(d^2 + delta^2) with a sub-noise delta.
  double tv_delta = 0.0;
  std::vector<ImageBuf> reference;  // empty => self-supervised
  Cube mask;                        // proximity weights (supervised only)

  int n() const { return pt.targets(); }
  int h() const { return t2b.height; }
  int w() const { return t2b.width; }
  int c() const { return t2b.channels; }
};

// Objective and (optionally) its gradient w.r.t. the dense velocity.
// The data term sums Charbonnier residuals over co-valid pixels with a
// fixed full-grid normalization, so a pixel dropping out of the valid set
// perturbs the value by one summand rather than re-weighting everything.
ObjectiveBreakdown eval_level(const LevelContext& ctx,
                              const std::vector<double>& vel,
                              std::vector<double>* grad) {
  const int N = ctx.n(), H = ctx.h(), W = ctx.w(), C = ctx.c();
  const double e2 = ctx.eps * ctx.eps;
  const double w_data = 1.0 / (static_cast<double>(N) * H * W * C);
  const bool supervised = !ctx.reference.empty();

  if (grad) grad->assign(static_cast<std::size_t>(N) * H * W * 2, 0.0);

  // Data term; per-(n,row) partials combined in index order keep the result
  // independent of the worker count.
  std::vector<double> partial(static_cast<std::size_t>(N) * H, 0.0);
  parallel_for(0, N * H, [&](int job) {
    const int n = job / H;
    const int y = job % H;
    const double pt_v = ctx.pt.at(n, y);
    const double pb_v = ctx.pb.at(n, y);
    double acc = 0.0;
    for (int x = 0; x < W; ++x) {
      const std::size_t vi = (static_cast<std::size_t>(job) * W + x) * 2;
      const double vx = vel[vi], vy = vel[vi + 1];
      const double xt = x + pt_v * vx, yt = y + pt_v * vy;
      const double xb = x + pb_v * vx, yb = y + pb_v * vy;
      if (supervised) {
        // The hard validity override is discontinuous where samples sit
        // exactly on the image edge (any V=0 start); rely on clamp sampling
        // instead so the fit stays continuous in the velocity.
        const double m = ctx.mask.at(n, y, 0, 0);
        for (int ch = 0; ch < C; ++ch) {
          const double st = sample_d(ctx.t2b, xt, yt, ch);
          const double sb = sample_d(ctx.b2t, xb, yb, ch);
          const double d = m * st + (1.0 - m) * sb - ctx.reference[n].at(x, y, ch);
          const double rho = std::sqrt(d * d + e2);
          acc += rho;
          if (grad) {
            const double rp = rho > 0.0 ? d / rho : 0.0;
            double gxt, gyt, gxb, gyb;
            gradient_d(ctx.t2b, xt, yt, ch, gxt, gyt);
            gradient_d(ctx.b2t, xb, yb, ch, gxb, gyb);
            (*grad)[vi] += w_data * rp * (m * pt_v * gxt + (1.0 - m) * pb_v * gxb);
            (*grad)[vi + 1] += w_data * rp * (m * pt_v * gyt + (1.0 - m) * pb_v * gyb);
          }
        }
      } else {
        if (!inside(ctx.t2b, xt, yt) || !inside(ctx.b2t, xb, yb)) continue;
        for (int ch = 0; ch < C; ++ch) {
          const double st = sample_d(ctx.t2b, xt, yt, ch);
          const double sb = sample_d(ctx.b2t, xb, yb, ch);
          const double d = st - sb;
          const double rho = std::sqrt(d * d + e2);
          acc += rho;
          if (grad) {
            const double rp = rho > 0.0 ? d / rho : 0.0;
            double gxt, gyt, gxb, gyb;
            gradient_d(ctx.t2b, xt, yt, ch, gxt, gyt);
            gradient_d(ctx.b2t, xb, yb, ch, gxb, gyb);
            (*grad)[vi] += w_data * rp * (pt_v * gxt - pb_v * gxb);
            (*grad)[vi + 1] += w_data * rp * (pt_v * gyt - pb_v * gyb);
          }
        }
      }
    }
    partial[job] = acc;
  });

  ObjectiveBreakdown out;
  for (double p : partial) out.data_term += p;
  out.data_term *= w_data;

  // Total variation of both implied flow cubes F = P * V. Row-internal
  // differences share the row's P; vertical differences straddle two rows.
  const double wx = W > 1 ? 1.0 / (static_cast<double>(N) * H * (W - 1) * 2) : 0.0;
  const double wy = H > 1 ? 1.0 / (static_cast<double>(N) * (H - 1) * W * 2) : 0.0;
  const double d2 = ctx.tv_delta * ctx.tv_delta;
  auto abs_s = [&](double d) { return d2 > 0 ? std::sqrt(d * d + d2) : std::abs(d); };
  auto sgn_s = [&](double d) { return d2 > 0 ? d / std::sqrt(d * d + d2) : sgn(d); };
  double tv = 0.0;
  for (const bool use_t2b : {true, false}) {
    const TimeCube& tc = use_t2b ? ctx.pt : ctx.pb;
    for (int n = 0; n < N; ++n)
      for (int y = 0; y < H; ++y) {
        const double p0 = tc.at(n, y);
        const double p1 = y + 1 < H ? tc.at(n, y + 1) : 0.0;
        for (int x = 0; x < W; ++x) {
          const std::size_t vi = ((static_cast<std::size_t>(n) * H + y) * W + x) * 2;
          for (int ch = 0; ch < 2; ++ch) {
            if (x + 1 < W) {
              const double d = p0 * (vel[vi + 2 + ch] - vel[vi + ch]);
              tv += wx * abs_s(d);
              if (grad) {
                const double s = ctx.lambda * wx * sgn_s(d) * p0;
                (*grad)[vi + 2 + ch] += s;
                (*grad)[vi + ch] -= s;
              }
            }
            if (y + 1 < H) {
              const std::size_t vj = vi + static_cast<std::size_t>(W) * 2;
              const double d = p1 * vel[vj + ch] - p0 * vel[vi + ch];
              tv += wy * abs_s(d);
              if (grad) {
                const double s = ctx.lambda * wy * sgn_s(d);
                (*grad)[vj + ch] += s * p1;
                (*grad)[vi + ch] -= s * p0;
              }
            }
          }
        }
      }
  }
  out.tv_term = tv;
  out.total = out.data_term + ctx.lambda * out.tv_term;
  return out;
}

double image_variance(const ImageBuf& img) {
  double mean = 0.0;
  for (float v : img.pixels) mean += v;
  mean /= static_cast<double>(img.pixels.size());
  double var = 0.0;
  for (float v : img.pixels) var += (v - mean) * (v - mean);
  return var / static_cast<double>(img.pixels.size());
}

LevelContext make_level(const DualPair& pair, const SolverParams& params,
                        int height, int width,
                        const GsSequence* reference) {
  LevelContext ctx;
  ctx.eps = params.charbonnier_eps;
  ctx.lambda = params.lambda_v;
  ctx.t2b = area_downsample(pair.t2b, width, height);
  ctx.b2t = area_downsample(pair.b2t, width, height);
  ctx.pt = build_time_cube(height, params.n_frames, ScanDirection::T2B);
  ctx.pb = build_time_cube(height, params.n_frames, ScanDirection::B2T)
               .shifted(misalignment_offset(pair.row_misalignment,
                                            pair.config.rows));
  if (reference) {
    ctx.mask = proximity_mask(ctx.pt, ctx.pb);
    ctx.reference.reserve(reference->frames.size());
    for (const auto& f : reference->frames) {
      ctx.reference.push_back(area_downsample(f, width, height));
    }
  }
  return ctx;
}

// Bilinear resampling of a dense parameter vector between pyramid grids,
// with the per-axis value rescale that keeps velocities grid-relative.
std::vector<double> resample_dense(const std::vector<double>& p, int n, int h0,
                                   int w0, int h1, int w1) {
  std::vector<double> out(static_cast<std::size_t>(n) * h1 * w1 * 2);
  const double fx = static_cast<double>(w0) / w1;
  const double fy = static_cast<double>(h0) / h1;
  for (int k = 0; k < n; ++k)
    for (int y = 0; y < h1; ++y) {
      const double sy = std::clamp((y + 0.5) * fy - 0.5, 0.0, h0 - 1.0);
      const int y0 = static_cast<int>(sy);
      const int y1i = std::min(y0 + 1, h0 - 1);
      const double by = sy - y0;
      for (int x = 0; x < w1; ++x) {
        const double sx = std::clamp((x + 0.5) * fx - 0.5, 0.0, w0 - 1.0);
        const int x0 = static_cast<int>(sx);
        const int x1i = std::min(x0 + 1, w0 - 1);
        const double bx = sx - x0;
        for (int ch = 0; ch < 2; ++ch) {
          auto src = [&](int yy, int xx) {
            return p[((static_cast<std::size_t>(k) * h0 + yy) * w0 + xx) * 2 + ch];
          };
          const double top = src(y0, x0) + bx * (src(y0, x1i) - src(y0, x0));
          const double bot = src(y1i, x0) + bx * (src(y1i, x1i) - src(y1i, x0));
          const double v = top + by * (bot - top);
          out[((static_cast<std::size_t>(k) * h1 + y) * w1 + x) * 2 + ch] =
              v * (ch == 0 ? 1.0 / fx : 1.0 / fy);
        }
      }
    }
  return out;
}

VelocityCube bind_result(const Binding& b, const std::vector<double>& p) {
  VelocityCube v;
  v.model = b.model;
  v.n_frames = b.n;
  v.height = b.h;
  v.width = b.w;
  v.full_height = b.full_h;
  v.full_width = b.full_w;
  v.params = p;
  return v;
}

SolveResult run_pyramid(const DualPair& pair, const SolverParams& params,
                        const GsSequence* reference) {
  params.validate();
  pair.config.validate();
  if (!pair.t2b.same_shape(pair.b2t)) {
    throw ShapeError("estimate_velocity: pair images differ in shape");
  }
  if (pair.t2b.height != pair.config.rows) {
    throw ShapeError("estimate_velocity: image height != config rows");
  }
  const int full_w = pair.t2b.width;
  const int full_h = pair.t2b.height;

  SolveResult result;
  if (image_variance(pair.t2b) < 1e-12 && image_variance(pair.b2t) < 1e-12) {
    // Flat inputs: the data term cannot see any velocity; pin to zero.
    result.degenerate = true;
    Binding b{params.model, params.n_frames, full_h, full_w, full_h, full_w};
    result.velocity = bind_result(b, std::vector<double>(b.dof(), 0.0));
    return result;
  }

  std::vector<double> p;
  int prev_h = 0, prev_w = 0;
  for (std::size_t si = 0; si < params.scales.size(); ++si) {
    const double scale = params.scales[si];
    const int h = std::max(2, static_cast<int>(std::lround(full_h * scale)));
    const int w = std::max(2, static_cast<int>(std::lround(full_w * scale)));
    Binding bind{params.model, params.n_frames, h, w, full_h, full_w};

    if (si == 0) {
      if (params.init) {
        const VelocityCube& init = *params.init;
        if (init.model != params.model || init.n_frames != params.n_frames) {
          throw ShapeError("SolverParams::init does not match the model");
        }
        p = init.params;
        if (params.model == VelocityModel::Dense) {
          p = resample_dense(p, bind.n, init.height, init.width, h, w);
        }
      } else {
        p.assign(bind.dof(), 0.0);
      }
    } else if (params.model == VelocityModel::Dense && (h != prev_h || w != prev_w)) {
      p = resample_dense(p, bind.n, prev_h, prev_w, h, w);
    }
    prev_h = h;
    prev_w = w;

    LevelContext ctx = make_level(pair, params, h, w, reference);
    ctx.tv_delta = 1e-6;
    // Global* parameters are expressed in full-resolution pixels, so their
    // gradients shrink by the grid ratio; undo that per component to make
    // descent behave the same at every level. The affine slope coefficients
    // additionally see the basis second moment (mean nx^2 = 1/12 on the
    // centered unit basis), which would starve them of step length.
    std::vector<double> precond(bind.dof(), 1.0);
    if (params.model == VelocityModel::GlobalConst ||
        params.model == VelocityModel::GlobalAffine) {
      for (std::size_t i = 0; i < precond.size(); ++i) {
        const double r = i < precond.size() / 2 ? bind.rx() : bind.ry();
        precond[i] = 1.0 / (r * r);
        if (params.model == VelocityModel::GlobalAffine && i % 3 != 0) {
          precond[i] *= 12.0;
        }
      }
    }

    std::vector<double> g;
    ObjectiveBreakdown f = eval_level(ctx, expand_velocity(bind, p), &g);
    g = project_gradient(bind, g);
    result.log.push_back({static_cast<int>(si), scale, 0, f});

    std::vector<double> dir(p.size());
    std::vector<double> trial(p.size());
    ObjectiveBreakdown f_trial;

    // Backtracking search along -dir; the first probe displaces the largest
    // component by `step` pixels. Accepts only strict decreases.
    auto search = [&](const std::vector<double>& d) {
      double dmax = 0.0;
      for (double v : d) dmax = std::max(dmax, std::abs(v));
      if (dmax == 0.0) return false;
      double step = params.step / dmax;
      for (int halving = 0; halving <= params.max_halvings; ++halving) {
        for (std::size_t i = 0; i < p.size(); ++i) trial[i] = p[i] - step * d[i];
        f_trial = eval_level(ctx, expand_velocity(bind, trial), nullptr);
        if (f_trial.total < f.total) return true;
        step *= 0.5;
      }
      return false;
    };
    // A velocity component whose sample offsets sit on the pixel lattice
    // (e.g. vy around zero on a horizontally moving scene) contributes a
    // large gradient with no payoff, and a search along the joint direction
    // then dies even though the other component still has room. Falling
    // back to the per-component blocks keeps that progress available.
    auto search_blocks = [&](int phase) {
      std::vector<double> masked(p.size(), 0.0);
      bool any = false;
      for (std::size_t i = 0; i < p.size(); ++i) {
        const bool is_y = bind.model == VelocityModel::Dense
                              ? (i % 2 == 1)
                              : (i >= p.size() / 2);
        if (is_y == (phase == 1)) {
          masked[i] = dir[i];
          any = any || dir[i] != 0.0;
        }
      }
      return any && search(masked);
    };

    for (int iter = 1; iter <= params.iters_per_scale; ++iter) {
      for (std::size_t i = 0; i < p.size(); ++i) dir[i] = precond[i] * g[i];
      const bool accepted =
          search(dir) || search_blocks(0) || search_blocks(1);
      if (!accepted) break;

      const double improvement = f.total - f_trial.total;
      p.swap(trial);
      result.log.push_back({static_cast<int>(si), scale, iter, f_trial});
      f = f_trial;
      if (improvement < params.min_rel_decrease * std::max(f.total, 1e-12)) break;
      if (iter < params.iters_per_scale) {
        std::vector<double> gd;
        ObjectiveBreakdown fg = eval_level(ctx, expand_velocity(bind, p), &gd);
        f = fg;
        g = project_gradient(bind, gd);
      }
    }
  }

  Binding final_bind{params.model, params.n_frames, full_h, full_w, full_h, full_w};
  result.velocity = bind_result(final_bind, p);
  return result;
}

}  // namespace

ObjectiveBreakdown dual_objective(const DualPair& pair,
                                  const VelocityCube& velocity,
                                  const SolverParams& params) {
  if (velocity.height != pair.t2b.height || velocity.width != pair.t2b.width ||
      velocity.n_frames != params.n_frames) {
    throw ShapeError("dual_objective: velocity cube does not match the pair");
  }
  Binding bind{velocity.model, velocity.n_frames, velocity.height,
               velocity.width, velocity.full_height, velocity.full_width};
  LevelContext ctx =
      make_level(pair, params, pair.t2b.height, pair.t2b.width, nullptr);
  return eval_level(ctx, expand_velocity(bind, velocity.params), nullptr);
}

ObjectiveWithGradient dual_objective_with_gradient(const DualPair& pair,
                                                   const VelocityCube& velocity,
                                                   const SolverParams& params) {
  if (velocity.height != pair.t2b.height || velocity.width != pair.t2b.width ||
      velocity.n_frames != params.n_frames) {
    throw ShapeError("dual_objective: velocity cube does not match the pair");
  }
  Binding bind{velocity.model, velocity.n_frames, velocity.height,
               velocity.width, velocity.full_height, velocity.full_width};
  LevelContext ctx =
      make_level(pair, params, pair.t2b.height, pair.t2b.width, nullptr);
  ObjectiveWithGradient out;
  std::vector<double> gd;
  out.value = eval_level(ctx, expand_velocity(bind, velocity.params), &gd);
  out.gradient = project_gradient(bind, gd);
  return out;
}

SolveResult estimate_velocity(const DualPair& pair, const SolverParams& params) {
  return run_pyramid(pair, params, nullptr);
}

SolveResult estimate_velocity_supervised(const DualPair& pair,
                                         const GsSequence& reference,
                                         const SolverParams& params) {
  if (static_cast<int>(reference.frames.size()) != params.n_frames) {
    throw ShapeError("estimate_velocity_supervised: reference length != n_frames");
  }
  for (const auto& f : reference.frames) {
    if (!f.same_shape(pair.t2b)) {
      throw ShapeError("estimate_velocity_supervised: reference shape mismatch");
    }
  }
  return run_pyramid(pair, params, &reference);
}

namespace {

ExtractResult extract_with(const DualPair& pair, const SolverParams& params,
                           const VelocityCube& velocity,
                           std::vector<IterationRecord> log, bool degenerate) {
  const int rows = pair.t2b.height;
  if (velocity.height != rows || velocity.width != pair.t2b.width) {
    throw ShapeError("extract_frames: velocity grid does not match the pair");
  }
  const TimeCube pt = build_time_cube(rows, params.n_frames, ScanDirection::T2B);
  const TimeCube pb =
      build_time_cube(rows, params.n_frames, ScanDirection::B2T)
          .shifted(misalignment_offset(pair.row_misalignment, pair.config.rows));

  ExtractResult out;
  out.velocity = velocity;
  out.log = std::move(log);
  out.degenerate = degenerate;
  const Cube dense = velocity.to_dense();
  out.flow_t2b = flow_from_velocity(pt, dense);
  out.flow_b2t = flow_from_velocity(pb, dense);

  const WarpResult wt = backward_warp(pair.t2b, out.flow_t2b);
  const WarpResult wb = backward_warp(pair.b2t, out.flow_b2t);
  out.sequence.frames = blend_warped(wt, wb, proximity_mask(pt, pb));
  out.sequence.instants = target_times(pair.config, params.n_frames);
  return out;
}

}  // namespace

ExtractResult extract_frames(const DualPair& pair, const SolverParams& params) {
  SolveResult solved = estimate_velocity(pair, params);
  return extract_with(pair, params, solved.velocity, std::move(solved.log),
                      solved.degenerate);
}

ExtractResult extract_frames(const DualPair& pair, const SolverParams& params,
                             const VelocityCube& velocity) {
  return extract_with(pair, params, velocity, {}, false);
}

}  // namespace dualrs
