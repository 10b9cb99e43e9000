#include "panogs/errors.hpp"
#include "panogs/training.hpp"

#include "gaussian/window.hpp"

#include <cmath>

namespace panogs {

LossResult compute_loss(const Image& render, const Image& target, const std::optional<Mask>& mask, double lambda_dssim)
{
    if (!render.same_shape(target) || render.channels() != 3) {
        throw ContractError("compute_loss: render and target must be matching RGB images");
    }
    const int w = render.width();
    const int h = render.height();
    if (mask && (mask->width() != w || mask->height() != h)) {
        throw ContractError("compute_loss: mask dims differ from the image");
    }
    const auto masked = [&](int x, int y) { return mask && mask->at(x, y); };

    std::size_t kept = 0;
    for (int y = 0; y < h; ++y) {
        for (int x = 0; x < w; ++x) {
            kept += masked(x, y) ? 0 : 1;
        }
    }
    LossResult out{0.0, Image(w, h, 3), false};
    if (kept == 0) {
        out.skipped = true;
        return out;
    }
    const double norm = 1.0 / (3.0 * static_cast<double>(kept));

    const auto n = static_cast<std::size_t>(w) * h;
    std::vector<double> xs(n), ys(n), weight(n);
    double l1 = 0.0;
    double ssim_sum = 0.0;
    for (int ch = 0; ch < 3; ++ch) {
        for (int y = 0; y < h; ++y) {
            for (int x = 0; x < w; ++x) {
                const auto p = static_cast<std::size_t>(y) * w + x;
                const bool m = masked(x, y);
                ys[p] = target.at(x, y, ch);
                xs[p] = m ? ys[p] : render.at(x, y, ch);
                weight[p] = m ? 0.0 : norm;
                const double d = xs[p] - ys[p];
                l1 += std::abs(d) * weight[p];
                out.grad.at(x, y, ch) = (1.0 - lambda_dssim) * weight[p] * (d > 0 ? 1.0 : (d < 0 ? -1.0 : 0.0));
            }
        }
        if (lambda_dssim == 0.0) {
            continue;
        }
        const auto s = ssim_terms(xs, ys, w, h, true);
        std::vector<double> a(n), b(n), c(n);
        for (std::size_t p = 0; p < n; ++p) {
            ssim_sum += s.ssim[p] * weight[p];
            a[p] = s.d_mean_x[p] * weight[p];
            b[p] = s.d_sq_x[p] * weight[p];
            c[p] = s.d_cross[p] * weight[p];
        }
        const auto ga = blur_same(a, w, h);
        const auto gb = blur_same(b, w, h);
        const auto gc = blur_same(c, w, h);
        for (int y = 0; y < h; ++y) {
            for (int x = 0; x < w; ++x) {
                if (masked(x, y)) {
                    continue;
                }
                const auto p = static_cast<std::size_t>(y) * w + x;
                const double d_ssim = ga[p] + 2.0 * xs[p] * gb[p] + ys[p] * gc[p];
                out.grad.at(x, y, ch) -= lambda_dssim * d_ssim;
            }
        }
    }
    out.value = (1.0 - lambda_dssim) * l1 + (lambda_dssim == 0.0 ? 0.0 : lambda_dssim * (1.0 - ssim_sum));
    return out;
}

}  // namespace panogs
