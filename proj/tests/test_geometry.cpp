#include <doctest.h>

#include "dualrs/geometry.hpp"
#include "helpers.hpp"

using namespace dualrs;

TEST_CASE("time cube corner values") {
  const int M = 480, N = 9;
  const TimeCube t2b = build_time_cube(M, N, ScanDirection::T2B);
  const TimeCube b2t = build_time_cube(M, N, ScanDirection::B2T);
  CHECK(t2b.at(0, 0) == 0.0);          // first row, first target
  CHECK(t2b.at(0, M - 1) == 1.0);      // last row, first target
  CHECK(t2b.at(N - 1, M - 1) == 0.0);  // last row, last target
  CHECK(b2t.at(0, 0) == 1.0);
  CHECK(b2t.at(0, M - 1) == 0.0);
}

TEST_CASE("single-target cube uses the midpoint fraction") {
  const TimeCube t2b = build_time_cube(5, 1, ScanDirection::T2B);
  CHECK(t2b.at(0, 0) == doctest::Approx(-0.5));
  CHECK(t2b.at(0, 4) == doctest::Approx(0.5));
  CHECK(t2b.at(0, 2) == doctest::Approx(0.0));
}

TEST_CASE("time cube identities over representative sizes") {
  for (int M : {2, 5, 480, 540}) {
    for (int N : {1, 3, 5, 9}) {
      const TimeCube t2b = build_time_cube(M, N, ScanDirection::T2B);
      const TimeCube b2t = build_time_cube(M, N, ScanDirection::B2T);
      for (int n = 0; n < N; ++n) {
        const double frac = N == 1 ? 0.5 : static_cast<double>(n) / (N - 1);
        for (int m = 0; m < M; ++m) {
          // Row-sum identity, flip identity, range.
          CHECK(t2b.at(n, m) + b2t.at(n, m) == doctest::Approx(1.0 - 2.0 * frac));
          CHECK(b2t.at(n, m) == doctest::Approx(t2b.at(n, M - 1 - m)));
          CHECK(t2b.at(n, m) >= -1.0);
          CHECK(t2b.at(n, m) <= 1.0);
          if (m > 0) {
            CHECK(t2b.at(n, m) > t2b.at(n, m - 1));
            CHECK(b2t.at(n, m) < b2t.at(n, m - 1));
          }
        }
      }
    }
  }
}

TEST_CASE("middle target of an odd-count cube negates between directions") {
  const int M = 33, N = 5;
  const TimeCube t2b = build_time_cube(M, N, ScanDirection::T2B);
  const TimeCube b2t = build_time_cube(M, N, ScanDirection::B2T);
  for (int m = 0; m < M; ++m) {
    CHECK(t2b.at(N / 2, m) == doctest::Approx(-b2t.at(N / 2, m)));
  }
}

TEST_CASE("build_time_cube rejects degenerate sizes") {
  CHECK_THROWS_AS(build_time_cube(1, 3, ScanDirection::T2B), ShapeError);
  CHECK_THROWS_AS(build_time_cube(4, 0, ScanDirection::T2B), ShapeError);
}

TEST_CASE("target_times spans the exposure window") {
  const RsConfig cfg{100, 1e-4, 0.25, ScanDirection::T2B};
  SUBCASE("two targets hit the endpoints") {
    const auto t = target_times(cfg, 2);
    CHECK(t[0] == doctest::Approx(cfg.start_time()));
    CHECK(t[1] == doctest::Approx(cfg.end_time()));
  }
  SUBCASE("odd count is symmetric about the midpoint") {
    const auto t = target_times(cfg, 9);
    CHECK(t[4] == doctest::Approx(cfg.midpoint));
    for (std::size_t i = 1; i < t.size(); ++i) CHECK(t[i] > t[i - 1]);
  }
  SUBCASE("single target is the midpoint") {
    const auto t = target_times(cfg, 1);
    REQUIRE(t.size() == 1);
    CHECK(t[0] == cfg.midpoint);
  }
}

TEST_CASE("zero velocity gives zero flow") {
  const TimeCube p = build_time_cube(16, 3, ScanDirection::T2B);
  const VelocityCube v = VelocityCube::global_const(3, 16, 8, 0.0, 0.0);
  const FlowCube f = flow_from_velocity(p, v);
  for (float x : f.values.data) CHECK(x == 0.0f);
}

TEST_CASE("flow vanishes at the central row of the central target") {
  const int M = 17, N = 5;  // both odd
  const TimeCube p = build_time_cube(M, N, ScanDirection::T2B);
  const VelocityCube v = VelocityCube::global_const(N, M, 9, 3.0, -2.0);
  const FlowCube f = flow_from_velocity(p, v);
  for (int x = 0; x < 9; ++x) {
    CHECK(f.values.at(N / 2, M / 2, x, 0) == 0.0f);
    CHECK(f.values.at(N / 2, M / 2, x, 1) == 0.0f);
  }
}

TEST_CASE("constant horizontal velocity yields row-linear flow") {
  const int M = 11, N = 3;
  const double vel = 2.5;
  const TimeCube p = build_time_cube(M, N, ScanDirection::T2B);
  const FlowCube f =
      flow_from_velocity(p, VelocityCube::global_const(N, M, 7, vel, 0.0));
  for (int m = 0; m < M; ++m) {
    const double expected = vel * static_cast<double>(m) / (M - 1);
    CHECK(f.values.at(0, m, 3, 0) == doctest::Approx(expected));
    CHECK(f.values.at(0, m, 3, 1) == 0.0f);
  }
}

TEST_CASE("flow_from_velocity is linear in the velocity") {
  const int M = 12, N = 2, W = 6;
  const TimeCube p = build_time_cube(M, N, ScanDirection::B2T);
  VelocityCube v1 = VelocityCube::dense(N, M, W);
  VelocityCube v2 = VelocityCube::dense(N, M, W);
  SplitMix64 rng(3);
  for (auto& x : v1.params) x = rng.uniform(-2.0, 2.0);
  for (auto& x : v2.params) x = rng.uniform(-2.0, 2.0);
  VelocityCube mix = VelocityCube::dense(N, M, W);
  const double a = 1.75, b = -0.5;
  for (std::size_t i = 0; i < mix.params.size(); ++i)
    mix.params[i] = a * v1.params[i] + b * v2.params[i];

  const FlowCube f1 = flow_from_velocity(p, v1);
  const FlowCube f2 = flow_from_velocity(p, v2);
  const FlowCube fm = flow_from_velocity(p, mix);
  for (std::size_t i = 0; i < fm.values.data.size(); ++i) {
    CHECK(fm.values.data[i] ==
          doctest::Approx(a * f1.values.data[i] + b * f2.values.data[i])
              .epsilon(1e-5));
  }
}

TEST_CASE("flow_from_velocity rejects mismatched shapes") {
  const TimeCube p = build_time_cube(8, 2, ScanDirection::T2B);
  CHECK_THROWS_AS(flow_from_velocity(p, VelocityCube::global_const(2, 9, 4, 1, 0)),
                  ShapeError);
  CHECK_THROWS_AS(flow_from_velocity(p, Cube(2, 8, 4, 1)), ShapeError);
}

TEST_CASE("global parameters rescale when expanded on a reduced grid") {
  VelocityCube v = VelocityCube::global_const(2, 32, 64, 4.0, -2.0);
  v.height = 16;  // bind to a half-resolution grid
  v.width = 32;
  const Cube d = v.to_dense();
  CHECK(d.at(0, 3, 5, 0) == doctest::Approx(2.0));
  CHECK(d.at(1, 9, 20, 1) == doctest::Approx(-1.0));
}

TEST_CASE("affine velocity varies with normalized position") {
  VelocityCube v =
      VelocityCube::global_affine(1, 21, 41, {1.0, 2.0, 0.0, 0.0, 0.0, 4.0});
  const Cube d = v.to_dense();
  // Center pixel sits at the basis origin.
  CHECK(d.at(0, 10, 20, 0) == doctest::Approx(1.0));
  CHECK(d.at(0, 10, 20, 1) == doctest::Approx(0.0));
  // One step right adds 2/width to vx; one step down adds 4/height to vy.
  CHECK(d.at(0, 10, 21, 0) - d.at(0, 10, 20, 0) == doctest::Approx(2.0 / 41));
  CHECK(d.at(0, 11, 20, 1) - d.at(0, 10, 20, 1) == doctest::Approx(4.0 / 21));
}

TEST_CASE("pixels_per_readout converts scene speed to cube units") {
  const RsConfig cfg{101, 1e-3, 0.0, ScanDirection::T2B};
  CHECK(pixels_per_readout(20.0, cfg) == doctest::Approx(2.0));
}

TEST_CASE("shifted time cube adds the misalignment offset") {
  const TimeCube p = build_time_cube(9, 3, ScanDirection::B2T);
  const TimeCube s = p.shifted(misalignment_offset(2, 9));
  for (int n = 0; n < 3; ++n)
    for (int m = 0; m < 9; ++m)
      CHECK(s.at(n, m) == doctest::Approx(p.at(n, m) + 0.25));
}
