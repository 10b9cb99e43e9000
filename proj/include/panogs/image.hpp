#pragma once

#include <cstddef>
#include <cstdint>
#include <span>
#include <vector>

namespace panogs {

/// Row-major, interleaved multi-channel raster of doubles.
class Image {
public:
    Image() = default;
    Image(int width, int height, int channels, double fill = 0.0);

    [[nodiscard]] int width() const noexcept { return width_; }
    [[nodiscard]] int height() const noexcept { return height_; }
    [[nodiscard]] int channels() const noexcept { return channels_; }
    [[nodiscard]] bool empty() const noexcept { return data_.empty(); }
    [[nodiscard]] std::size_t pixel_count() const noexcept
    {
        return static_cast<std::size_t>(width_) * static_cast<std::size_t>(height_);
    }

    [[nodiscard]] double& at(int x, int y, int c = 0) noexcept { return data_[index(x, y, c)]; }
    [[nodiscard]] double at(int x, int y, int c = 0) const noexcept { return data_[index(x, y, c)]; }

    [[nodiscard]] std::span<double> pixel(int x, int y) noexcept
    {
        return {data_.data() + index(x, y, 0), static_cast<std::size_t>(channels_)};
    }
    [[nodiscard]] std::span<const double> pixel(int x, int y) const noexcept
    {
        return {data_.data() + index(x, y, 0), static_cast<std::size_t>(channels_)};
    }

    [[nodiscard]] std::span<double> data() noexcept { return data_; }
    [[nodiscard]] std::span<const double> data() const noexcept { return data_; }

    [[nodiscard]] bool same_shape(const Image& other) const noexcept
    {
        return width_ == other.width_ && height_ == other.height_ && channels_ == other.channels_;
    }

    bool operator==(const Image& other) const = default;

private:
    [[nodiscard]] std::size_t index(int x, int y, int c) const noexcept
    {
        return (static_cast<std::size_t>(y) * static_cast<std::size_t>(width_) + static_cast<std::size_t>(x)) *
                   static_cast<std::size_t>(channels_) +
               static_cast<std::size_t>(c);
    }

    int width_ = 0;
    int height_ = 0;
    int channels_ = 0;
    std::vector<double> data_;
};

/// Boolean raster. What "true" means is up to the owner (missing pixel, valid pixel, keep).
class Mask {
public:
    Mask() = default;
    Mask(int width, int height, bool fill = false);

    [[nodiscard]] int width() const noexcept { return width_; }
    [[nodiscard]] int height() const noexcept { return height_; }
    [[nodiscard]] bool empty() const noexcept { return data_.empty(); }

    [[nodiscard]] bool at(int x, int y) const noexcept { return data_[index(x, y)] != 0; }
    void set(int x, int y, bool value) noexcept { data_[index(x, y)] = value ? 1 : 0; }

    [[nodiscard]] std::size_t count() const noexcept;
    [[nodiscard]] std::span<const std::uint8_t> data() const noexcept { return data_; }

    bool operator==(const Mask& other) const = default;

private:
    [[nodiscard]] std::size_t index(int x, int y) const noexcept
    {
        return static_cast<std::size_t>(y) * static_cast<std::size_t>(width_) + static_cast<std::size_t>(x);
    }

    int width_ = 0;
    int height_ = 0;
    std::vector<std::uint8_t> data_;
};

/// Bilinear sample at continuous pixel coordinates (pixel centers at i + 0.5), edges clamped.
double sample_bilinear_clamped(const Image& image, double x, double y, int channel);

/// Box-filter downsample by an integer factor in both directions.
Image downsample_area(const Image& image, int factor);

/// Separable Catmull-Rom bicubic resample to the given size, horizontal wrap, vertical clamp.
Image resample_bicubic_wrap(const Image& image, int width, int height);

/// Copy of one channel as a single-channel image.
Image extract_channel(const Image& image, int channel);

double max_abs_difference(const Image& a, const Image& b);

}  // namespace panogs
