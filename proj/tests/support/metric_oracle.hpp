#pragma once

// Direct per-pixel and per-window metric formulas used as references.

#include "panogs/image.hpp"

#include <cmath>

namespace oracle {

inline double naive_psnr(const panogs::Image& a, const panogs::Image& b)
{
    double se = 0.0;
    for (int y = 0; y < a.height(); ++y) {
        for (int x = 0; x < a.width(); ++x) {
            for (int c = 0; c < a.channels(); ++c) {
                se += std::pow(a.at(x, y, c) - b.at(x, y, c), 2);
            }
        }
    }
    return 10.0 * std::log10(static_cast<double>(a.width()) * a.height() * a.channels() / se);
}

// Direct windowed SSIM: full 2D Gaussian weights, every window fully inside the image.
inline double naive_ssim(const panogs::Image& a, const panogs::Image& b)
{
    double g[11];
    double gs = 0.0;
    for (int k = 0; k < 11; ++k) {
        g[k] = std::exp(-((k - 5) * (k - 5)) / 4.5);
        gs += g[k];
    }
    double total = 0.0;
    for (int c = 0; c < a.channels(); ++c) {
        double acc = 0.0;
        int windows = 0;
        for (int y0 = 0; y0 + 11 <= a.height(); ++y0) {
            for (int x0 = 0; x0 + 11 <= a.width(); ++x0) {
                double mx = 0, my = 0, sxx = 0, syy = 0, sxy = 0;
                for (int j = 0; j < 11; ++j) {
                    for (int i = 0; i < 11; ++i) {
                        const double wgt = g[i] * g[j] / (gs * gs);
                        const double x = a.at(x0 + i, y0 + j, c);
                        const double y = b.at(x0 + i, y0 + j, c);
                        mx += wgt * x;
                        my += wgt * y;
                        sxx += wgt * x * x;
                        syy += wgt * y * y;
                        sxy += wgt * x * y;
                    }
                }
                const double c1 = 1e-4, c2 = 9e-4;
                const double vx = sxx - mx * mx, vy = syy - my * my, cxy = sxy - mx * my;
                acc += (2 * mx * my + c1) * (2 * cxy + c2) / ((mx * mx + my * my + c1) * (vx + vy + c2));
                ++windows;
            }
        }
        total += acc / windows;
    }
    return total / a.channels();
}

}  // namespace oracle
