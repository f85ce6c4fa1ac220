#include <doctest.h>

#include "dualrs/metrics.hpp"
#include "dualrs/solver.hpp"
#include "dualrs/warp.hpp"
#include "helpers.hpp"

using namespace dualrs;
using namespace dualrs::test;

namespace {

FlowCube constant_flow(int n, int h, int w, float fx, float fy) {
  FlowCube f;
  f.values = Cube(n, h, w, 2);
  for (int k = 0; k < n; ++k)
    for (int y = 0; y < h; ++y)
      for (int x = 0; x < w; ++x) {
        f.values.at(k, y, x, 0) = fx;
        f.values.at(k, y, x, 1) = fy;
      }
  return f;
}

}  // namespace

TEST_CASE("identity flow reproduces the source with full validity") {
  const ImageBuf src = random_image(2, 24, 16);
  const WarpResult r = backward_warp(src, constant_flow(3, 16, 24, 0.0f, 0.0f));
  for (int n = 0; n < 3; ++n) {
    CHECK(r.warped.slice(n).pixels == src.pixels);
    for (float v : r.validity.data) CHECK(v == 1.0f);
  }
}

TEST_CASE("unit horizontal flow shifts columns and invalidates the edge") {
  const ImageBuf src = random_image(4, 8, 5);
  const WarpResult r = backward_warp(src, constant_flow(1, 5, 8, 1.0f, 0.0f));
  for (int y = 0; y < 5; ++y) {
    for (int x = 0; x + 1 < 8; ++x) {
      CHECK(r.warped.at(0, y, x, 0) == src.at(x + 1, y, 0));
      CHECK(r.validity.at(0, y, x, 0) == 1.0f);
    }
    CHECK(r.validity.at(0, y, 7, 0) == 0.0f);
  }
}

TEST_CASE("warping a constant image returns the constant under any flow") {
  const ImageBuf src(12, 10, 1, 0.42f);
  FlowCube f = constant_flow(2, 10, 12, 0.0f, 0.0f);
  SplitMix64 rng(11);
  for (auto& v : f.values.data) v = static_cast<float>(rng.uniform(-20.0, 20.0));
  const WarpResult r = backward_warp(src, f);
  for (float v : r.warped.data) CHECK(v == doctest::Approx(0.42f));
}

TEST_CASE("warp equivariance under integer shifts") {
  const ImageBuf src = random_image(6, 20, 14);
  const int dx = 3;
  ImageBuf shifted(src.width, src.height, 1);
  for (int y = 0; y < src.height; ++y)
    for (int x = 0; x < src.width; ++x)
      shifted.at(x, y, 0) = src.at(std::clamp(x + dx, 0, src.width - 1), y, 0);

  FlowCube f = constant_flow(1, 14, 20, 0.0f, 0.0f);
  SplitMix64 rng(12);
  for (auto& v : f.values.data) v = static_cast<float>(rng.uniform(-2.0, 2.0));
  FlowCube f_plus = f;
  for (int y = 0; y < 14; ++y)
    for (int x = 0; x < 20; ++x) f_plus.values.at(0, y, x, 0) += dx;

  const WarpResult a = backward_warp(shifted, f);
  const WarpResult b = backward_warp(src, f_plus);
  for (int y = 0; y < 14; ++y)
    for (int x = 0; x < 20; ++x) {
      if (a.validity.at(0, y, x, 0) == 1.0f && b.validity.at(0, y, x, 0) == 1.0f) {
        CHECK(a.warped.at(0, y, x, 0) == doctest::Approx(b.warped.at(0, y, x, 0)));
      }
    }
}

TEST_CASE("backward_warp rejects mismatched grids") {
  const ImageBuf src(8, 8, 1, 0.0f);
  CHECK_THROWS_AS(backward_warp(src, constant_flow(1, 6, 8, 0, 0)), ShapeError);
}

TEST_CASE("proximity mask trusts the temporally closer input") {
  const int M = 9, N = 3;
  const TimeCube pt = build_time_cube(M, N, ScanDirection::T2B);
  const TimeCube pb = build_time_cube(M, N, ScanDirection::B2T);
  const Cube mask = proximity_mask(pt, pb);

  // First target, first row: the t2b camera scanned it at the target instant.
  CHECK(pt.at(0, 0) == 0.0);
  CHECK(mask.at(0, 0, 0, 0) == 1.0f);
  // Symmetric offsets tie at one half.
  for (int n = 0; n < N; ++n)
    for (int m = 0; m < M; ++m) {
      if (std::abs(pt.at(n, m)) == std::abs(pb.at(n, m))) {
        CHECK(mask.at(n, m, 0, 0) == doctest::Approx(0.5));
      }
      CHECK(mask.at(n, m, 0, 0) >= 0.0f);
      CHECK(mask.at(n, m, 0, 0) <= 1.0f);
    }
  // Middle target of an odd cube ties on every row.
  for (int m = 0; m < M; ++m) CHECK(mask.at(1, m, 0, 0) == doctest::Approx(0.5));
}

TEST_CASE("blend endpoints, agreement and residual") {
  const int N = 2, H = 6, W = 7;
  WarpResult wt, wb;
  wt.warped = Cube(N, H, W, 1);
  wb.warped = Cube(N, H, W, 1);
  wt.validity = Cube(N, H, W, 1, 1.0f);
  wb.validity = Cube(N, H, W, 1, 1.0f);
  SplitMix64 rng(13);
  for (auto& v : wt.warped.data) v = static_cast<float>(rng.uniform(0.1, 0.8));
  for (auto& v : wb.warped.data) v = static_cast<float>(rng.uniform(0.1, 0.8));

  SUBCASE("mask one returns the t2b side") {
    const Cube mask(N, 1, 1, 1, 1.0f);
    const auto frames = blend_warped(wt, wb, mask);
    for (int n = 0; n < N; ++n) CHECK(frames[n].pixels == wt.warped.slice(n).pixels);
  }
  SUBCASE("agreement is preserved under a half mask, residual adds") {
    wb.warped = wt.warped;
    const Cube mask(N, 1, 1, 1, 0.5f);
    const auto frames = blend_warped(wt, wb, mask);
    for (int n = 0; n < N; ++n) {
      for (int y = 0; y < H; ++y)
        for (int x = 0; x < W; ++x)
          CHECK(frames[n].at(x, y, 0) == doctest::Approx(wt.warped.at(n, y, x, 0)));
    }
    const Cube residual(N, H, W, 1, 0.1f);
    const auto shifted = blend_warped(wt, wb, mask, residual);
    for (int n = 0; n < N; ++n)
      for (int y = 0; y < H; ++y)
        for (int x = 0; x < W; ++x)
          CHECK(shifted[n].at(x, y, 0) ==
                doctest::Approx(wt.warped.at(n, y, x, 0) + 0.1f));
  }
  SUBCASE("partition of unity for random masks") {
    Cube mask(N, H, W, 1);
    for (auto& v : mask.data) v = static_cast<float>(rng.uniform());
    const auto frames = blend_warped(wt, wb, mask);
    for (int n = 0; n < N; ++n)
      for (int y = 0; y < H; ++y)
        for (int x = 0; x < W; ++x) {
          const float m = mask.at(n, y, x, 0);
          CHECK(frames[n].at(x, y, 0) ==
                doctest::Approx(m * wt.warped.at(n, y, x, 0) +
                                (1 - m) * wb.warped.at(n, y, x, 0)));
        }
  }
  SUBCASE("single-sided validity overrides the mask") {
    wb.validity.at(0, 2, 3, 0) = 0.0f;
    const Cube mask(N, 1, 1, 1, 0.25f);
    const auto frames = blend_warped(wt, wb, mask);
    CHECK(frames[0].at(3, 2, 0) == doctest::Approx(wt.warped.at(0, 2, 3, 0)));
  }
  SUBCASE("output clamps to the unit range") {
    const Cube mask(N, 1, 1, 1, 0.5f);
    const Cube residual(N, H, W, 1, 0.9f);
    const auto frames = blend_warped(wt, wb, mask, residual);
    for (const auto& f : frames)
      for (float v : f.pixels) {
        CHECK(v >= 0.0f);
        CHECK(v <= 1.0f);
      }
  }
}

TEST_CASE("oracle flow maps the RS input back onto the target frame") {
  const int size = 128, N = 5;
  const OracleScene s = make_oracle_scene(size, N, 2.0);
  const TimeCube pt = build_time_cube(size, N, ScanDirection::T2B);
  const FlowCube flow = flow_from_velocity(pt, s.true_velocity);
  const WarpResult warped = backward_warp(s.pair.t2b, flow);

  const auto region = center_crop(size, size, 0.8);
  for (int n = 0; n < N; ++n) {
    const double score = psnr(warped.warped.slice(n), s.gt.frames[n], region);
    CHECK(score >= 35.0);
  }
}
