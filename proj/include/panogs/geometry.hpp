#pragma once

// Coordinate conventions used throughout the library:
//  * world and camera frames are right-handed, +y up, +z forward;
//  * camera pixels grow right (+x) and down (-y), pixel centers sit at i + 0.5;
//  * equirectangular longitude is 0 at the horizontal center of the panorama.

#include "panogs/image.hpp"

#include <Eigen/Core>
#include <Eigen/Geometry>

#include <optional>

namespace panogs {

using Vec2 = Eigen::Vector2d;
using Vec3 = Eigen::Vector3d;
using Mat3 = Eigen::Matrix3d;
using Quat = Eigen::Quaterniond;

inline constexpr double kPi = 3.14159265358979323846;

inline double deg_to_rad(double degrees) { return degrees * kPi / 180.0; }
inline double rad_to_deg(double radians) { return radians * 180.0 / kPi; }

/// Equirectangular raster size. Always 2:1, both sides even.
class PanoDims {
public:
    PanoDims(int width, int height);

    [[nodiscard]] int width() const noexcept { return width_; }
    [[nodiscard]] int height() const noexcept { return height_; }
    [[nodiscard]] std::size_t pixel_count() const noexcept
    {
        return static_cast<std::size_t>(width_) * static_cast<std::size_t>(height_);
    }

    bool operator==(const PanoDims&) const = default;

private:
    int width_;
    int height_;
};

/// Equirectangular RGB panorama with optional metric depth (meters) and validity.
struct Panorama {
    PanoDims dims;
    Image rgb;                    // H x W x 3, values in [0, 1]
    std::optional<Image> depth;   // H x W x 1, meters
    std::optional<Mask> validity; // true = depth usable

    explicit Panorama(PanoDims d);
    Panorama(PanoDims d, Image color);

    /// True when depth exists and is finite/positive wherever it is marked valid.
    [[nodiscard]] bool depth_is_valid() const;
    [[nodiscard]] bool is_valid_pixel(int x, int y) const;
};

struct Intrinsics {
    double fx = 0;
    double fy = 0;
    double cx = 0;
    double cy = 0;
    int width = 0;
    int height = 0;

    /// Square-pixel camera with the principal point at the image center.
    static Intrinsics from_fov(int width, int height, double fov_x_deg);

    void validate() const;
    bool operator==(const Intrinsics&) const = default;
};

/// Rigid camera pose, world-from-camera.
struct Pose {
    Quat rotation = Quat::Identity();
    Vec3 position = Vec3::Zero();

    [[nodiscard]] Mat3 world_from_camera() const { return rotation.toRotationMatrix(); }
    [[nodiscard]] Vec3 to_camera(const Vec3& world_point) const;
    [[nodiscard]] Vec3 forward() const { return rotation * Vec3::UnitZ(); }

    /// Orientation whose optical axis is `forward` and whose image-up is as close to `up` as possible.
    static Pose look_at(const Vec3& forward, const Vec3& up, const Vec3& position = Vec3::Zero());

    void validate() const;
};

/// Unit direction through the continuous equirectangular pixel (u, v).
Vec3 pixel_to_direction(double u, double v, const PanoDims& dims);

/// Continuous equirectangular pixel of a direction; u wraps into [0, W).
Vec2 direction_to_pixel(const Vec3& dir, const PanoDims& dims);

/// Camera-frame ray (z = 1) through the continuous image point (x, y).
Vec3 camera_ray(const Intrinsics& K, double x, double y);

/// Image coordinates of a camera-frame point with z > 0.
Vec2 project_camera_point(const Intrinsics& K, const Vec3& p_cam);

/// Bilinear panorama sample with horizontal wrap and vertical clamp.
double sample_erp(const Image& image, double u, double v, int channel);

/// Perspective view of the panorama from the sphere center.
Image erp_to_perspective(const Image& pano_image, const Intrinsics& K, const Pose& pose);

/// Panorama resampled so that out(d) = in(q * d); yaw by whole pixels is lossless.
Image rotate_panorama(const Image& pano_image, const Quat& q);

}  // namespace panogs
