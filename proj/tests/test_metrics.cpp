#include <doctest.h>

#include <cmath>

#include "dualrs/metrics.hpp"
#include "helpers.hpp"

using namespace dualrs;
using namespace dualrs::test;

TEST_CASE("psnr basics") {
  const ImageBuf a = random_image(51, 32, 20);
  CHECK(std::isinf(psnr(a, a)));

  ImageBuf b = a;
  for (auto& v : b.pixels) v += 0.1f;
  // Pixel values are float32, so the stored difference carries ~1e-8
  // relative rounding; the dB value inherits that.
  CHECK(psnr(a, b) == doctest::Approx(20.0).epsilon(1e-6));
  CHECK(psnr(a, b) == psnr(b, a));

  // Half the pixels off by 0.5: MSE = 0.125.
  ImageBuf c(16, 16, 1, 0.2f);
  ImageBuf d = c;
  for (int y = 0; y < 16; ++y)
    for (int x = 0; x < 8; ++x) d.at(x, y, 0) += 0.5f;
  CHECK(psnr(c, d) == doctest::Approx(10.0 * std::log10(8.0)).epsilon(1e-6));

  CHECK_THROWS_AS(psnr(a, c), ShapeError);
}

TEST_CASE("psnr decreases as noise grows") {
  const ImageBuf a(24, 24, 1, 0.5f);
  double prev = 1e9;
  for (double amp : {0.01, 0.02, 0.05, 0.1, 0.2}) {
    ImageBuf b = a;
    SplitMix64 rng(29);
    for (auto& v : b.pixels)
      v += static_cast<float>(amp * (rng.uniform() - 0.5));
    const double value = psnr(a, b);
    CHECK(value < prev);
    prev = value;
  }
}

TEST_CASE("psnr over a crop ignores the rest of the image") {
  ImageBuf a(20, 20, 1, 0.5f);
  ImageBuf b = a;
  b.at(0, 0, 0) = 1.0f;  // outside the interior crop
  const auto region = center_crop(20, 20, 0.8);
  CHECK(region.width == 16);
  CHECK(region.x0 == 2);
  CHECK(std::isinf(psnr(a, b, region)));
  CHECK(!std::isinf(psnr(a, b)));
}

TEST_CASE("ssim of an image with itself is one") {
  const ImageBuf a = random_image(52, 24, 18);
  CHECK(ssim(a, a) == doctest::Approx(1.0));
  const ImageBuf c1(16, 16, 1, 0.3f);
  const ImageBuf c2(16, 16, 1, 0.3f);
  CHECK(ssim(c1, c2) == doctest::Approx(1.0));
}

TEST_CASE("ssim of an inverted checker is near zero") {
  const ImageBuf a = make_checker(32, 32, 4, 0.0f, 1.0f);
  ImageBuf b = a;
  for (auto& v : b.pixels) v = 1.0f - v;
  CHECK(ssim(a, b) < 0.1);
  CHECK(ssim(a, b) == doctest::Approx(ssim(b, a)));
}

TEST_CASE("ssim matches a brute-force window sweep") {
  const ImageBuf a = random_image(61, 15, 13);
  ImageBuf b = a;
  SplitMix64 rng(62);
  for (auto& v : b.pixels)
    v = std::clamp(v + static_cast<float>(0.2 * (rng.uniform() - 0.5)), 0.0f, 1.0f);

  // Direct evaluation of the definition, no separability tricks.
  std::array<double, 11> k{};
  double ksum = 0.0;
  for (int i = -5; i <= 5; ++i) {
    k[i + 5] = std::exp(-0.5 * i * i / 2.25);
    ksum += k[i + 5];
  }
  for (auto& v : k) v /= ksum;
  double acc = 0.0;
  int count = 0;
  for (int cy = 5; cy < 13 - 5; ++cy)
    for (int cx = 5; cx < 15 - 5; ++cx) {
      double ma = 0, mb = 0, maa = 0, mbb = 0, mab = 0;
      for (int dy = -5; dy <= 5; ++dy)
        for (int dx = -5; dx <= 5; ++dx) {
          const double w = k[dy + 5] * k[dx + 5];
          const double va = a.at(cx + dx, cy + dy, 0);
          const double vb = b.at(cx + dx, cy + dy, 0);
          ma += w * va;
          mb += w * vb;
          maa += w * va * va;
          mbb += w * vb * vb;
          mab += w * va * vb;
        }
      const double c1 = 1e-4, c2 = 9e-4;
      const double num = (2 * ma * mb + c1) * (2 * (mab - ma * mb) + c2);
      const double den = (ma * ma + mb * mb + c1) *
                         ((maa - ma * ma) + (mbb - mb * mb) + c2);
      acc += num / den;
      ++count;
    }
  CHECK(ssim(a, b) == doctest::Approx(acc / count).epsilon(1e-10));
}

TEST_CASE("ssim rejects images smaller than its window") {
  const ImageBuf a(10, 12, 1, 0.5f);
  CHECK_THROWS_AS(ssim(a, a), ShapeError);
}

TEST_CASE("row profiles aggregate back to the global error") {
  GsSequence out, gt;
  for (int n = 0; n < 3; ++n) {
    out.frames.push_back(random_image(70 + n, 12, 10));
    gt.frames.push_back(random_image(80 + n, 12, 10));
    out.instants.push_back(n);
    gt.instants.push_back(n);
  }
  const auto profiles = row_mse_profile(out, gt);
  REQUIRE(profiles.size() == 3);
  for (int n = 0; n < 3; ++n) {
    double mean = 0.0;
    for (double v : profiles[n].row_mse) {
      CHECK(v >= 0.0);
      mean += v;
    }
    mean /= static_cast<double>(profiles[n].row_mse.size());
    CHECK(mean == doctest::Approx(mse(out.frames[n], gt.frames[n])).epsilon(1e-12));
  }

  const auto zero = row_mse_profile(out, out);
  for (const auto& p : zero)
    for (double v : p.row_mse) CHECK(v == 0.0);
}

TEST_CASE("spearman correlation on monotone, reversed and tied data") {
  const std::vector<double> x{1.0, 2.0, 3.0, 4.0, 5.0};
  const std::vector<double> inc{2.0, 9.0, 12.0, 20.0, 21.0};
  std::vector<double> dec(inc.rbegin(), inc.rend());
  CHECK(spearman_rank_correlation(x, inc) == doctest::Approx(1.0));
  CHECK(spearman_rank_correlation(x, dec) == doctest::Approx(-1.0));

  // Hand-computed with average ranks: ranks a = {1.5, 1.5, 3, 4, 5},
  // ranks b = {1, 2, 3, 4.5, 4.5}; Pearson of the ranks is 9/9.5.
  const std::vector<double> a{1.0, 1.0, 2.0, 3.0, 4.0};
  const std::vector<double> b{0.0, 1.0, 2.0, 3.0, 3.0};
  CHECK(spearman_rank_correlation(a, b) == doctest::Approx(9.0 / 9.5).epsilon(1e-12));

  CHECK(spearman_rank_correlation(x, {1.0, 1.0, 1.0, 1.0, 1.0}) == 0.0);
  CHECK_THROWS_AS(spearman_rank_correlation(x, {1.0}), ShapeError);
}
