#pragma once

#include <optional>

#include "dualrs/geometry.hpp"

namespace dualrs {

/// Rectangular evaluation region, [x0, x0+width) x [y0, y0+height).
struct CropRegion {
  int x0 = 0, y0 = 0;
  int width = 0, height = 0;
};

/// Centered crop keeping `fraction` of each axis (0.8 = the 80% interior).
CropRegion center_crop(int width, int height, double fraction);

double mse(const ImageBuf& a, const ImageBuf& b,
           const std::optional<CropRegion>& region = std::nullopt);

/// Peak 1.0; returns +infinity when the images match exactly.
double psnr(const ImageBuf& a, const ImageBuf& b,
            const std::optional<CropRegion>& region = std::nullopt);

/// Mean local SSIM, 11x11 Gaussian window sigma 1.5, K1=0.01, K2=0.03,
/// dynamic range 1.0, averaged over all fully interior window centers and
/// over channels.
double ssim(const ImageBuf& a, const ImageBuf& b);

/// Per-row mean squared error for one extracted frame.
struct RowProfile {
  int target_index = 0;
  std::vector<double> row_mse;
};

std::vector<RowProfile> row_mse_profile(const GsSequence& outputs,
                                        const GsSequence& gt);

/// Spearman rank correlation with average ranks for ties.
double spearman_rank_correlation(const std::vector<double>& a,
                                 const std::vector<double>& b);

}  // namespace dualrs
