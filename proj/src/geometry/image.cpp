#include "panogs/image.hpp"

#include "panogs/errors.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <numeric>

namespace panogs {

Image::Image(int width, int height, int channels, double fill)
    : width_(width), height_(height), channels_(channels)
{
    if (width < 0 || height < 0 || channels <= 0) {
        throw ContractError("Image dimensions must be non-negative with at least one channel");
    }
    data_.assign(static_cast<std::size_t>(width) * static_cast<std::size_t>(height) * static_cast<std::size_t>(channels),
                 fill);
}

Mask::Mask(int width, int height, bool fill) : width_(width), height_(height)
{
    if (width < 0 || height < 0) {
        throw ContractError("Mask dimensions must be non-negative");
    }
    data_.assign(static_cast<std::size_t>(width) * static_cast<std::size_t>(height), fill ? 1 : 0);
}

std::size_t Mask::count() const noexcept
{
    return static_cast<std::size_t>(std::count(data_.begin(), data_.end(), std::uint8_t{1}));
}

double sample_bilinear_clamped(const Image& image, double x, double y, int channel)
{
    const double fx = std::clamp(x - 0.5, 0.0, static_cast<double>(image.width() - 1));
    const double fy = std::clamp(y - 0.5, 0.0, static_cast<double>(image.height() - 1));
    const int x0 = static_cast<int>(std::floor(fx));
    const int y0 = static_cast<int>(std::floor(fy));
    const int x1 = std::min(x0 + 1, image.width() - 1);
    const int y1 = std::min(y0 + 1, image.height() - 1);
    const double tx = fx - x0;
    const double ty = fy - y0;
    const double top = (1.0 - tx) * image.at(x0, y0, channel) + tx * image.at(x1, y0, channel);
    const double bottom = (1.0 - tx) * image.at(x0, y1, channel) + tx * image.at(x1, y1, channel);
    return (1.0 - ty) * top + ty * bottom;
}

Image downsample_area(const Image& image, int factor)
{
    if (factor <= 0 || image.width() % factor != 0 || image.height() % factor != 0) {
        throw ConfigError("downsample factor must divide the image dimensions");
    }
    const int w = image.width() / factor;
    const int h = image.height() / factor;
    Image out(w, h, image.channels());
    const double norm = 1.0 / (static_cast<double>(factor) * factor);
    for (int y = 0; y < h; ++y) {
        for (int x = 0; x < w; ++x) {
            for (int c = 0; c < image.channels(); ++c) {
                double sum = 0.0;
                for (int dy = 0; dy < factor; ++dy) {
                    for (int dx = 0; dx < factor; ++dx) {
                        sum += image.at(x * factor + dx, y * factor + dy, c);
                    }
                }
                out.at(x, y, c) = sum * norm;
            }
        }
    }
    return out;
}

namespace {

std::array<double, 4> catmull_rom_weights(double t)
{
    const double t2 = t * t;
    const double t3 = t2 * t;
    return {
        -0.5 * t3 + t2 - 0.5 * t,
        1.5 * t3 - 2.5 * t2 + 1.0,
        -1.5 * t3 + 2.0 * t2 + 0.5 * t,
        0.5 * t3 - 0.5 * t2,
    };
}

}  // namespace

Image resample_bicubic_wrap(const Image& image, int width, int height)
{
    if (image.empty() || width <= 0 || height <= 0) {
        throw ContractError("resample_bicubic_wrap needs a non-empty source and positive target size");
    }
    const int sw = image.width();
    const int sh = image.height();
    const int ch = image.channels();

    // Horizontal pass.
    Image horizontal(width, sh, ch);
    const double sx = static_cast<double>(sw) / width;
    for (int x = 0; x < width; ++x) {
        const double src = (x + 0.5) * sx - 0.5;
        const int base = static_cast<int>(std::floor(src));
        const auto w = catmull_rom_weights(src - base);
        std::array<int, 4> cols{};
        for (int k = 0; k < 4; ++k) {
            cols[k] = ((base - 1 + k) % sw + sw) % sw;
        }
        for (int y = 0; y < sh; ++y) {
            for (int c = 0; c < ch; ++c) {
                double v = 0.0;
                for (int k = 0; k < 4; ++k) {
                    v += w[k] * image.at(cols[k], y, c);
                }
                horizontal.at(x, y, c) = v;
            }
        }
    }

    Image out(width, height, ch);
    const double sy = static_cast<double>(sh) / height;
    for (int y = 0; y < height; ++y) {
        const double src = (y + 0.5) * sy - 0.5;
        const int base = static_cast<int>(std::floor(src));
        const auto w = catmull_rom_weights(src - base);
        std::array<int, 4> rows{};
        for (int k = 0; k < 4; ++k) {
            rows[k] = std::clamp(base - 1 + k, 0, sh - 1);
        }
        for (int x = 0; x < width; ++x) {
            for (int c = 0; c < ch; ++c) {
                double v = 0.0;
                for (int k = 0; k < 4; ++k) {
                    v += w[k] * horizontal.at(x, rows[k], c);
                }
                out.at(x, y, c) = v;
            }
        }
    }
    return out;
}

Image extract_channel(const Image& image, int channel)
{
    Image out(image.width(), image.height(), 1);
    for (int y = 0; y < image.height(); ++y) {
        for (int x = 0; x < image.width(); ++x) {
            out.at(x, y) = image.at(x, y, channel);
        }
    }
    return out;
}

double max_abs_difference(const Image& a, const Image& b)
{
    if (!a.same_shape(b)) {
        throw ContractError("max_abs_difference: image shapes differ");
    }
    double worst = 0.0;
    for (std::size_t i = 0; i < a.data().size(); ++i) {
        worst = std::max(worst, std::abs(a.data()[i] - b.data()[i]));
    }
    return worst;
}

}  // namespace panogs
