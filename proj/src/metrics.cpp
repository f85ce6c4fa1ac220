#include "dualrs/metrics.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>

namespace dualrs {

CropRegion center_crop(int width, int height, double fraction) {
  CropRegion r;
  r.width = std::max(1, static_cast<int>(std::lround(width * fraction)));
  r.height = std::max(1, static_cast<int>(std::lround(height * fraction)));
  r.x0 = (width - r.width) / 2;
  r.y0 = (height - r.height) / 2;
  return r;
}

double mse(const ImageBuf& a, const ImageBuf& b,
           const std::optional<CropRegion>& region) {
  if (!a.same_shape(b)) {
    throw ShapeError("mse: image shapes differ (" + std::to_string(a.width) +
                     "x" + std::to_string(a.height) + "x" +
                     std::to_string(a.channels) + " vs " +
                     std::to_string(b.width) + "x" + std::to_string(b.height) +
                     "x" + std::to_string(b.channels) + ")");
  }
  const CropRegion r = region.value_or(CropRegion{0, 0, a.width, a.height});
  double sum = 0.0;
  for (int y = r.y0; y < r.y0 + r.height; ++y)
    for (int x = r.x0; x < r.x0 + r.width; ++x)
      for (int c = 0; c < a.channels; ++c) {
        const double d = static_cast<double>(a.at(x, y, c)) - b.at(x, y, c);
        sum += d * d;
      }
  return sum / (static_cast<double>(r.width) * r.height * a.channels);
}

double psnr(const ImageBuf& a, const ImageBuf& b,
            const std::optional<CropRegion>& region) {
  const double e = mse(a, b, region);
  if (e == 0.0) return std::numeric_limits<double>::infinity();
  return 10.0 * std::log10(1.0 / e);
}

namespace {

constexpr int kSsimRadius = 5;  // 11x11 window

std::array<double, 2 * kSsimRadius + 1> ssim_kernel() {
  std::array<double, 2 * kSsimRadius + 1> k{};
  const double sigma = 1.5;
  double sum = 0.0;
  for (int i = -kSsimRadius; i <= kSsimRadius; ++i) {
    k[i + kSsimRadius] = std::exp(-0.5 * i * i / (sigma * sigma));
    sum += k[i + kSsimRadius];
  }
  for (auto& v : k) v /= sum;
  return k;
}

// Separable Gaussian filter, valid region only. in: H x W doubles.
std::vector<double> filter_valid(const std::vector<double>& in, int w, int h,
                                 const std::array<double, 11>& k, int& vw,
                                 int& vh) {
  vw = w - 2 * kSsimRadius;
  vh = h - 2 * kSsimRadius;
  std::vector<double> tmp(static_cast<std::size_t>(vw) * h, 0.0);
  for (int y = 0; y < h; ++y)
    for (int x = 0; x < vw; ++x) {
      double s = 0.0;
      for (int i = 0; i < 11; ++i) s += k[i] * in[y * w + x + i];
      tmp[y * vw + x] = s;
    }
  std::vector<double> out(static_cast<std::size_t>(vw) * vh, 0.0);
  for (int y = 0; y < vh; ++y)
    for (int x = 0; x < vw; ++x) {
      double s = 0.0;
      for (int i = 0; i < 11; ++i) s += k[i] * tmp[(y + i) * vw + x];
      out[y * vw + x] = s;
    }
  return out;
}

}  // namespace

double ssim(const ImageBuf& a, const ImageBuf& b) {
  if (!a.same_shape(b)) throw ShapeError("ssim: image shapes differ");
  if (a.width < 11 || a.height < 11) {
    throw ShapeError("ssim: image smaller than the 11x11 window");
  }
  static const auto kernel = ssim_kernel();
  const double c1 = 0.01 * 0.01;
  const double c2 = 0.03 * 0.03;

  const std::size_t plane = static_cast<std::size_t>(a.width) * a.height;
  std::vector<double> pa(plane), pb(plane), paa(plane), pbb(plane), pab(plane);
  double total = 0.0;
  for (int c = 0; c < a.channels; ++c) {
    for (int y = 0; y < a.height; ++y)
      for (int x = 0; x < a.width; ++x) {
        const double va = a.at(x, y, c);
        const double vb = b.at(x, y, c);
        const std::size_t i = static_cast<std::size_t>(y) * a.width + x;
        pa[i] = va;
        pb[i] = vb;
        paa[i] = va * va;
        pbb[i] = vb * vb;
        pab[i] = va * vb;
      }
    int vw, vh;
    const auto mu_a = filter_valid(pa, a.width, a.height, kernel, vw, vh);
    const auto mu_b = filter_valid(pb, a.width, a.height, kernel, vw, vh);
    const auto m_aa = filter_valid(paa, a.width, a.height, kernel, vw, vh);
    const auto m_bb = filter_valid(pbb, a.width, a.height, kernel, vw, vh);
    const auto m_ab = filter_valid(pab, a.width, a.height, kernel, vw, vh);
    double acc = 0.0;
    for (std::size_t i = 0; i < mu_a.size(); ++i) {
      const double ma = mu_a[i], mb = mu_b[i];
      const double va = m_aa[i] - ma * ma;
      const double vb = m_bb[i] - mb * mb;
      const double cov = m_ab[i] - ma * mb;
      acc += ((2 * ma * mb + c1) * (2 * cov + c2)) /
             ((ma * ma + mb * mb + c1) * (va + vb + c2));
    }
    total += acc / static_cast<double>(mu_a.size());
  }
  return total / a.channels;
}

std::vector<RowProfile> row_mse_profile(const GsSequence& outputs,
                                        const GsSequence& gt) {
  if (outputs.frames.size() != gt.frames.size()) {
    throw ShapeError("row_mse_profile: sequence lengths differ");
  }
  std::vector<RowProfile> profiles;
  profiles.reserve(outputs.frames.size());
  for (std::size_t n = 0; n < outputs.frames.size(); ++n) {
    const ImageBuf& a = outputs.frames[n];
    const ImageBuf& b = gt.frames[n];
    if (!a.same_shape(b)) throw ShapeError("row_mse_profile: frame shapes differ");
    RowProfile p;
    p.target_index = static_cast<int>(n);
    p.row_mse.resize(a.height, 0.0);
    for (int y = 0; y < a.height; ++y) {
      double sum = 0.0;
      for (int x = 0; x < a.width; ++x)
        for (int c = 0; c < a.channels; ++c) {
          const double d = static_cast<double>(a.at(x, y, c)) - b.at(x, y, c);
          sum += d * d;
        }
      p.row_mse[y] = sum / (static_cast<double>(a.width) * a.channels);
    }
    profiles.push_back(std::move(p));
  }
  return profiles;
}

namespace {

std::vector<double> average_ranks(const std::vector<double>& v) {
  const std::size_t n = v.size();
  std::vector<std::size_t> order(n);
  std::iota(order.begin(), order.end(), 0);
  std::sort(order.begin(), order.end(),
            [&](std::size_t i, std::size_t j) { return v[i] < v[j]; });
  std::vector<double> ranks(n, 0.0);
  std::size_t i = 0;
  while (i < n) {
    std::size_t j = i;
    while (j + 1 < n && v[order[j + 1]] == v[order[i]]) ++j;
    const double r = 0.5 * (static_cast<double>(i) + static_cast<double>(j)) + 1.0;
    for (std::size_t k = i; k <= j; ++k) ranks[order[k]] = r;
    i = j + 1;
  }
  return ranks;
}

}  // namespace

double spearman_rank_correlation(const std::vector<double>& a,
                                 const std::vector<double>& b) {
  if (a.size() != b.size() || a.size() < 2) {
    throw ShapeError("spearman: need two equal-length series of size >= 2");
  }
  const auto ra = average_ranks(a);
  const auto rb = average_ranks(b);
  const double n = static_cast<double>(a.size());
  double ma = 0.0, mb = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) {
    ma += ra[i];
    mb += rb[i];
  }
  ma /= n;
  mb /= n;
  double num = 0.0, da = 0.0, db = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) {
    num += (ra[i] - ma) * (rb[i] - mb);
    da += (ra[i] - ma) * (ra[i] - ma);
    db += (rb[i] - mb) * (rb[i] - mb);
  }
  if (da == 0.0 || db == 0.0) return 0.0;
  return num / std::sqrt(da * db);
}

}  // namespace dualrs
