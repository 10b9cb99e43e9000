#include "gaussian/window.hpp"

#include <array>
#include <cmath>

namespace panogs {

namespace {

std::array<double, 2 * kSsimRadius + 1> window_taps()
{
    std::array<double, 2 * kSsimRadius + 1> taps{};
    double sum = 0.0;
    for (int k = -kSsimRadius; k <= kSsimRadius; ++k) {
        taps[static_cast<std::size_t>(k + kSsimRadius)] = std::exp(-(k * k) / (2.0 * 1.5 * 1.5));
        sum += taps[static_cast<std::size_t>(k + kSsimRadius)];
    }
    for (auto& t : taps) {
        t /= sum;
    }
    return taps;
}

}  // namespace

std::vector<double> blur_same(const std::vector<double>& image, int width, int height)
{
    static const auto taps = window_taps();
    std::vector<double> tmp(image.size(), 0.0);
    std::vector<double> out(image.size(), 0.0);
    for (int y = 0; y < height; ++y) {
        for (int x = 0; x < width; ++x) {
            double s = 0.0;
            for (int k = -kSsimRadius; k <= kSsimRadius; ++k) {
                const int xx = x + k;
                if (xx >= 0 && xx < width) {
                    s += taps[static_cast<std::size_t>(k + kSsimRadius)] * image[static_cast<std::size_t>(y) * width + xx];
                }
            }
            tmp[static_cast<std::size_t>(y) * width + x] = s;
        }
    }
    for (int y = 0; y < height; ++y) {
        for (int x = 0; x < width; ++x) {
            double s = 0.0;
            for (int k = -kSsimRadius; k <= kSsimRadius; ++k) {
                const int yy = y + k;
                if (yy >= 0 && yy < height) {
                    s += taps[static_cast<std::size_t>(k + kSsimRadius)] * tmp[static_cast<std::size_t>(yy) * width + x];
                }
            }
            out[static_cast<std::size_t>(y) * width + x] = s;
        }
    }
    return out;
}

SsimTerms ssim_terms(const std::vector<double>& x, const std::vector<double>& y, int width, int height,
                     bool with_derivatives)
{
    const std::size_t n = x.size();
    std::vector<double> xx(n), yy(n), xy(n);
    for (std::size_t p = 0; p < n; ++p) {
        xx[p] = x[p] * x[p];
        yy[p] = y[p] * y[p];
        xy[p] = x[p] * y[p];
    }
    const auto mx = blur_same(x, width, height);
    const auto my = blur_same(y, width, height);
    const auto exx = blur_same(xx, width, height);
    const auto eyy = blur_same(yy, width, height);
    const auto exy = blur_same(xy, width, height);
    SsimTerms t;
    t.ssim.resize(n);
    if (with_derivatives) {
        t.d_mean_x.resize(n);
        t.d_sq_x.resize(n);
        t.d_cross.resize(n);
    }
    for (std::size_t p = 0; p < n; ++p) {
        const double A = 2.0 * mx[p] * my[p] + kSsimC1;
        const double B = 2.0 * (exy[p] - mx[p] * my[p]) + kSsimC2;
        const double C = mx[p] * mx[p] + my[p] * my[p] + kSsimC1;
        const double D = (exx[p] - mx[p] * mx[p]) + (eyy[p] - my[p] * my[p]) + kSsimC2;
        const double den = C * D;
        const double s = A * B / den;
        t.ssim[p] = s;
        if (with_derivatives) {
            const double d_num = 2.0 * my[p] * B - 2.0 * my[p] * A;
            const double d_den = 2.0 * mx[p] * D - 2.0 * mx[p] * C;
            t.d_mean_x[p] = d_num / den - s * d_den / den;
            t.d_sq_x[p] = -s / D;
            t.d_cross[p] = 2.0 * A / den;
        }
    }
    return t;
}

}  // namespace panogs
