#include "panogs/metrics.hpp"

#include "gaussian/window.hpp"
#include "panogs/errors.hpp"

#include <algorithm>
#include <cmath>

namespace panogs {

namespace {

void check_pair(const Image& a, const Image& b, const char* what)
{
    if (!a.same_shape(b)) {
        throw ContractError(std::string(what) + ": image dims differ");
    }
    const auto in_range = [](double v) { return v >= 0.0 && v <= 1.0; };
    if (!std::all_of(a.data().begin(), a.data().end(), in_range) ||
        !std::all_of(b.data().begin(), b.data().end(), in_range)) {
        throw DomainError(std::string(what) + ": values must lie in [0, 1]");
    }
}

}  // namespace

double psnr(const Image& a, const Image& b)
{
    check_pair(a, b, "psnr");
    double sum = 0.0;
    for (std::size_t k = 0; k < a.data().size(); ++k) {
        const double d = a.data()[k] - b.data()[k];
        sum += d * d;
    }
    if (sum == 0.0) {
        return kPsnrCap;
    }
    const double mse = sum / static_cast<double>(a.data().size());
    return std::min(kPsnrCap, 10.0 * std::log10(1.0 / mse));
}

double ssim(const Image& a, const Image& b)
{
    check_pair(a, b, "ssim");
    const int w = a.width();
    const int h = a.height();
    const int window = 2 * kSsimRadius + 1;
    if (w < window || h < window) {
        throw ContractError("ssim needs images of at least 11x11 pixels");
    }
    const auto n = static_cast<std::size_t>(w) * h;
    double total = 0.0;
    for (int ch = 0; ch < a.channels(); ++ch) {
        std::vector<double> x(n), y(n);
        for (int py = 0; py < h; ++py) {
            for (int px = 0; px < w; ++px) {
                x[static_cast<std::size_t>(py) * w + px] = a.at(px, py, ch);
                y[static_cast<std::size_t>(py) * w + px] = b.at(px, py, ch);
            }
        }
        const auto t = ssim_terms(x, y, w, h, false);
        double s = 0.0;
        for (int py = kSsimRadius; py < h - kSsimRadius; ++py) {
            for (int px = kSsimRadius; px < w - kSsimRadius; ++px) {
                s += t.ssim[static_cast<std::size_t>(py) * w + px];
            }
        }
        total += s / (static_cast<double>(w - window + 1) * (h - window + 1));
    }
    return total / a.channels();
}

}  // namespace panogs
