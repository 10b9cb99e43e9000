#pragma once

#include "panogs/image.hpp"

namespace panogs {

/// Reported for identical images.
inline constexpr double kPsnrCap = 99.0;

/// 10 log10(1 / MSE) over all channels; values must lie in [0, 1].
double psnr(const Image& a, const Image& b);

/// Single-scale SSIM, 11x11 Gaussian window (sigma 1.5), averaged over windows that fit
/// entirely inside the image and over channels.
double ssim(const Image& a, const Image& b);

}  // namespace panogs
