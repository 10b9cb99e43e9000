#pragma once

// Independent per-pixel panorama sampling used as a reference in tests.

#include "panogs/geometry.hpp"

#include <cmath>

namespace oracle {

// Continuous panorama coordinates of a direction, via atan2/asin.
inline std::pair<double, double> erp_uv(const panogs::Vec3& d_in, int w, int h)
{
    const panogs::Vec3 d = d_in.normalized();
    const double lon = std::atan2(d.x(), d.z());
    const double lat = std::asin(std::clamp(d.y(), -1.0, 1.0));
    double u = (lon + M_PI) / (2.0 * M_PI) * w;
    if (u >= w) {
        u -= w;
    }
    return {u, (M_PI / 2.0 - lat) / M_PI * h};
}

// Bilinear lookup, pixel centers at i + 0.5, horizontal wrap, vertical clamp.
inline double erp_bilinear(const panogs::Image& img, double u, double v, int c)
{
    const int w = img.width();
    const int h = img.height();
    const double x = u - 0.5;
    const double y = std::clamp(v - 0.5, 0.0, static_cast<double>(h - 1));
    const int x0 = static_cast<int>(std::floor(x));
    const int y0 = static_cast<int>(std::floor(y));
    const double fx = x - x0;
    const double fy = y - y0;
    const auto px = [&](int xi, int yi) { return img.at(((xi % w) + w) % w, std::min(yi, h - 1), c); };
    return (1 - fy) * ((1 - fx) * px(x0, y0) + fx * px(x0 + 1, y0)) +
           fy * ((1 - fx) * px(x0, y0 + 1) + fx * px(x0 + 1, y0 + 1));
}

// Camera ray through continuous image point (x, y) in world space.
inline panogs::Vec3 world_ray(const panogs::Intrinsics& K, const panogs::Pose& pose, double x, double y)
{
    const panogs::Vec3 cam((x - K.cx) / K.fx, -(y - K.cy) / K.fy, 1.0);
    return pose.rotation.toRotationMatrix() * cam;
}

}  // namespace oracle
