#pragma once

// 11x11 Gaussian window (sigma 1.5) statistics shared by the training loss and the SSIM metric.

#include <vector>

namespace panogs {

inline constexpr int kSsimRadius = 5;
inline constexpr double kSsimC1 = 0.01 * 0.01;
inline constexpr double kSsimC2 = 0.03 * 0.03;

/// Separable normalized Gaussian correlation with zero padding, same output size.
std::vector<double> blur_same(const std::vector<double>& image, int width, int height);

struct SsimTerms {
    std::vector<double> ssim;      // per-pixel SSIM
    std::vector<double> d_mean_x;  // dS/d(mean of x)
    std::vector<double> d_sq_x;    // dS/d(window mean of x^2)
    std::vector<double> d_cross;   // dS/d(window mean of x*y)
};

/// Per-pixel SSIM between single-channel images; derivatives only when `with_derivatives`.
SsimTerms ssim_terms(const std::vector<double>& x, const std::vector<double>& y, int width, int height,
                     bool with_derivatives);

}  // namespace panogs
