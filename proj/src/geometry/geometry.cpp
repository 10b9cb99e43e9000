#include "panogs/geometry.hpp"

#include "panogs/errors.hpp"

#include <algorithm>
#include <cmath>
#include <string>

namespace panogs {

PanoDims::PanoDims(int width, int height) : width_(width), height_(height)
{
    if (height < 2 || width != 2 * height || height % 2 != 0) {
        throw ConfigError("panorama dims must be 2:1 with even sides >= 2, got " + std::to_string(width) + "x" +
                          std::to_string(height));
    }
}

Panorama::Panorama(PanoDims d) : dims(d), rgb(d.width(), d.height(), 3) {}

Panorama::Panorama(PanoDims d, Image color) : dims(d), rgb(std::move(color))
{
    if (rgb.width() != dims.width() || rgb.height() != dims.height() || rgb.channels() != 3) {
        throw ContractError("panorama rgb must be H x W x 3 matching dims");
    }
}

bool Panorama::is_valid_pixel(int x, int y) const
{
    return !validity || validity->at(x, y);
}

bool Panorama::depth_is_valid() const
{
    if (!depth || depth->width() != dims.width() || depth->height() != dims.height() || depth->channels() != 1) {
        return false;
    }
    for (int y = 0; y < dims.height(); ++y) {
        for (int x = 0; x < dims.width(); ++x) {
            if (!is_valid_pixel(x, y)) {
                continue;
            }
            const double d = depth->at(x, y);
            if (!std::isfinite(d) || d <= 0.0) {
                return false;
            }
        }
    }
    return true;
}

Intrinsics Intrinsics::from_fov(int width, int height, double fov_x_deg)
{
    if (!(fov_x_deg > 0.0 && fov_x_deg < 180.0)) {
        throw ConfigError("field of view must lie in (0, 180) degrees");
    }
    Intrinsics K;
    K.width = width;
    K.height = height;
    K.fx = 0.5 * width / std::tan(0.5 * deg_to_rad(fov_x_deg));
    K.fy = K.fx;
    K.cx = 0.5 * width;
    K.cy = 0.5 * height;
    K.validate();
    return K;
}

void Intrinsics::validate() const
{
    if (!(fx > 0 && fy > 0) || width <= 0 || height <= 0 || !(cx > 0 && cx < width) || !(cy > 0 && cy < height)) {
        throw ConfigError("invalid intrinsics: need fx, fy > 0 and principal point inside the image");
    }
}

Vec3 Pose::to_camera(const Vec3& world_point) const
{
    return rotation.conjugate() * (world_point - position);
}

Pose Pose::look_at(const Vec3& forward, const Vec3& up, const Vec3& position)
{
    const Vec3 f = forward.normalized();
    Vec3 right = up.cross(f);
    if (right.norm() < 1e-9) {
        throw DomainError("look_at: up vector is parallel to the viewing direction");
    }
    right.normalize();
    const Vec3 true_up = f.cross(right);
    Mat3 R;
    R.col(0) = right;
    R.col(1) = true_up;
    R.col(2) = f;
    Pose pose;
    pose.rotation = Quat(R).normalized();
    pose.position = position;
    return pose;
}

void Pose::validate() const
{
    if (std::abs(rotation.norm() - 1.0) > 1e-9) {
        throw ContractError("pose rotation must be a unit quaternion");
    }
    if (!position.allFinite()) {
        throw ContractError("pose position must be finite");
    }
}

Vec3 pixel_to_direction(double u, double v, const PanoDims& dims)
{
    const double w = dims.width();
    const double h = dims.height();
    if (!(u >= 0.0 && u <= w && v >= 0.0 && v <= h)) {
        throw DomainError("pixel_to_direction: (" + std::to_string(u) + ", " + std::to_string(v) +
                          ") outside the panorama");
    }
    const double lon = 2.0 * kPi * u / w - kPi;
    const double lat = 0.5 * kPi - kPi * v / h;
    const double c = std::cos(lat);
    return {c * std::sin(lon), std::sin(lat), c * std::cos(lon)};
}

Vec2 direction_to_pixel(const Vec3& dir, const PanoDims& dims)
{
    const double n = dir.norm();
    if (!(n > 0.0) || !std::isfinite(n)) {
        throw DomainError("direction_to_pixel: zero or non-finite direction");
    }
    const double lon = std::atan2(dir.x(), dir.z());
    const double lat = std::atan2(dir.y(), std::hypot(dir.x(), dir.z()));
    const double w = dims.width();
    double u = (lon + kPi) / (2.0 * kPi) * w;
    u = std::fmod(u, w);
    if (u < 0.0) {
        u += w;
    }
    const double v = (0.5 * kPi - lat) / kPi * dims.height();
    return {u, v};
}

Vec3 camera_ray(const Intrinsics& K, double x, double y)
{
    return {(x - K.cx) / K.fx, -(y - K.cy) / K.fy, 1.0};
}

Vec2 project_camera_point(const Intrinsics& K, const Vec3& p_cam)
{
    return {K.fx * p_cam.x() / p_cam.z() + K.cx, K.cy - K.fy * p_cam.y() / p_cam.z()};
}

double sample_erp(const Image& image, double u, double v, int channel)
{
    const int w = image.width();
    const int h = image.height();
    const double fx = u - 0.5;
    const double fy = std::clamp(v - 0.5, 0.0, static_cast<double>(h - 1));
    const double x0f = std::floor(fx);
    const double tx = fx - x0f;
    int x0 = static_cast<int>(x0f) % w;
    if (x0 < 0) {
        x0 += w;
    }
    const int x1 = (x0 + 1) % w;
    const int y0 = static_cast<int>(std::floor(fy));
    const int y1 = std::min(y0 + 1, h - 1);
    const double ty = fy - y0;
    const double top = (1.0 - tx) * image.at(x0, y0, channel) + tx * image.at(x1, y0, channel);
    const double bottom = (1.0 - tx) * image.at(x0, y1, channel) + tx * image.at(x1, y1, channel);
    return (1.0 - ty) * top + ty * bottom;
}

Image erp_to_perspective(const Image& pano_image, const Intrinsics& K, const Pose& pose)
{
    K.validate();
    if (pose.position.norm() > 1e-12) {
        throw ContractError("erp_to_perspective: the camera must sit at the panorama center");
    }
    const PanoDims dims(pano_image.width(), pano_image.height());
    const Mat3 R = pose.world_from_camera();
    Image out(K.width, K.height, pano_image.channels());
    for (int y = 0; y < K.height; ++y) {
        for (int x = 0; x < K.width; ++x) {
            const Vec3 dir = R * camera_ray(K, x + 0.5, y + 0.5);
            const Vec2 uv = direction_to_pixel(dir, dims);
            for (int c = 0; c < pano_image.channels(); ++c) {
                out.at(x, y, c) = sample_erp(pano_image, uv.x(), uv.y(), c);
            }
        }
    }
    return out;
}

Image rotate_panorama(const Image& pano_image, const Quat& q)
{
    const PanoDims dims(pano_image.width(), pano_image.height());
    Image out(pano_image.width(), pano_image.height(), pano_image.channels());
    for (int y = 0; y < dims.height(); ++y) {
        for (int x = 0; x < dims.width(); ++x) {
            const Vec3 d = pixel_to_direction(x + 0.5, y + 0.5, dims);
            const Vec2 uv = direction_to_pixel(q * d, dims);
            for (int c = 0; c < pano_image.channels(); ++c) {
                out.at(x, y, c) = sample_erp(pano_image, uv.x(), uv.y(), c);
            }
        }
    }
    return out;
}

}  // namespace panogs
