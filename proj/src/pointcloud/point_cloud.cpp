#include "panogs/point_cloud.hpp"

#include "panogs/errors.hpp"
#include "ply_io.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

namespace panogs {

double PointCloud::bounding_radius() const
{
    if (positions.empty()) {
        return 0.0;
    }
    Vec3 centroid = Vec3::Zero();
    for (const auto& p : positions) {
        centroid += p;
    }
    centroid /= static_cast<double>(positions.size());
    double r = 0.0;
    for (const auto& p : positions) {
        r = std::max(r, (p - centroid).norm());
    }
    return r;
}

PointCloud reverse_erp_project(const Panorama& pano)
{
    if (!pano.depth) {
        throw ContractError("reverse_erp_project: panorama has no depth channel");
    }
    if (!pano.depth_is_valid()) {
        throw ContractError("reverse_erp_project: depth must be finite and positive wherever valid");
    }
    PointCloud pc;
    const auto n = pano.dims.pixel_count();
    pc.positions.reserve(n);
    pc.colors.reserve(n);
    pc.source_pixels.reserve(n);
    for (int v = 0; v < pano.dims.height(); ++v) {
        for (int u = 0; u < pano.dims.width(); ++u) {
            if (!pano.is_valid_pixel(u, v)) {
                continue;
            }
            const Vec3 dir = pixel_to_direction(u + 0.5, v + 0.5, pano.dims);
            pc.positions.push_back(dir * pano.depth->at(u, v));
            pc.colors.emplace_back(pano.rgb.at(u, v, 0), pano.rgb.at(u, v, 1), pano.rgb.at(u, v, 2));
            pc.source_pixels.push_back({u, v});
        }
    }
    return pc;
}

Mask depth_gradient_filter(const Image& depth, const DepthFilterOptions& opts)
{
    if (!(opts.threshold > 0.0)) {
        throw ConfigError("depth gradient threshold must be positive");
    }
    const int w = depth.width();
    const int h = depth.height();
    Mask keep(w, h);
    for (int y = 0; y < h; ++y) {
        for (int x = 0; x < w; ++x) {
            // Longitude wraps; latitude uses one-sided differences on the first/last row.
            const double gx = 0.5 * (depth.at((x + 1) % w, y) - depth.at((x + w - 1) % w, y));
            double gy = 0.0;
            if (h > 1) {
                if (y == 0) {
                    gy = depth.at(x, 1) - depth.at(x, 0);
                } else if (y == h - 1) {
                    gy = depth.at(x, h - 1) - depth.at(x, h - 2);
                } else {
                    gy = 0.5 * (depth.at(x, y + 1) - depth.at(x, y - 1));
                }
            }
            double g = std::hypot(gx, gy);
            if (opts.normalize_by_depth) {
                g /= depth.at(x, y);
            }
            keep.set(x, y, g <= opts.threshold);
        }
    }
    return keep;
}

PointCloud filter_points(const PointCloud& pc, const Mask& keep)
{
    if (pc.source_pixels.size() != pc.positions.size()) {
        throw ContractError("filter_points: point cloud has no source-pixel provenance");
    }
    PointCloud out;
    for (std::size_t i = 0; i < pc.size(); ++i) {
        const auto [u, v] = pc.source_pixels[i];
        if (u < 0 || v < 0 || u >= keep.width() || v >= keep.height()) {
            throw ContractError("filter_points: source pixel outside the keep-mask");
        }
        if (keep.at(u, v)) {
            out.positions.push_back(pc.positions[i]);
            out.colors.push_back(pc.colors[i]);
            out.source_pixels.push_back(pc.source_pixels[i]);
        }
    }
    return out;
}

Panorama downsample_panorama(const Panorama& pano, const PanoDims& target)
{
    if (pano.dims.width() % target.width() != 0 || pano.dims.height() % target.height() != 0 ||
        pano.dims.width() / target.width() != pano.dims.height() / target.height()) {
        throw ConfigError("downsample target " + std::to_string(target.width()) + "x" +
                          std::to_string(target.height()) + " does not divide the source dims");
    }
    const int f = pano.dims.width() / target.width();
    Panorama out(target, downsample_area(pano.rgb, f));
    if (pano.depth) {
        // The source pixel whose center is nearest (ties: lower-right) to the target center.
        const int offset = f / 2;
        Image depth(target.width(), target.height(), 1);
        Mask valid(target.width(), target.height());
        for (int y = 0; y < target.height(); ++y) {
            for (int x = 0; x < target.width(); ++x) {
                const int sx = x * f + offset;
                const int sy = y * f + offset;
                depth.at(x, y) = pano.depth->at(sx, sy);
                valid.set(x, y, pano.is_valid_pixel(sx, sy));
            }
        }
        out.depth = std::move(depth);
        if (pano.validity) {
            out.validity = std::move(valid);
        }
    }
    return out;
}

ViewImage project_points(const PointCloud& pc, const Intrinsics& K, const Pose& pose, const ProjectionOptions& opts)
{
    if (!(opts.point_radius >= 0.5)) {
        throw ConfigError("point_radius must be at least 0.5 px");
    }
    K.validate();
    ViewImage view{Image(K.width, K.height, 3), Mask(K.width, K.height, true), pose, K};
    std::vector<double> zbuf(static_cast<std::size_t>(K.width) * K.height, std::numeric_limits<double>::infinity());
    const Mat3 Rt = pose.world_from_camera().transpose();
    const double r = opts.point_radius;
    const double r2 = r * r;
    for (std::size_t i = 0; i < pc.size(); ++i) {
        const Vec3 p = Rt * (pc.positions[i] - pose.position);
        if (p.z() <= opts.z_near) {
            continue;
        }
        const Vec2 uv = project_camera_point(K, p);
        const int x0 = std::max(0, static_cast<int>(std::floor(uv.x() - r - 0.5)));
        const int x1 = std::min(K.width - 1, static_cast<int>(std::ceil(uv.x() + r - 0.5)));
        const int y0 = std::max(0, static_cast<int>(std::floor(uv.y() - r - 0.5)));
        const int y1 = std::min(K.height - 1, static_cast<int>(std::ceil(uv.y() + r - 0.5)));
        for (int y = y0; y <= y1; ++y) {
            for (int x = x0; x <= x1; ++x) {
                const double dx = x + 0.5 - uv.x();
                const double dy = y + 0.5 - uv.y();
                if (dx * dx + dy * dy > r2) {
                    continue;
                }
                double& best = zbuf[static_cast<std::size_t>(y) * K.width + x];
                if (p.z() < best) {
                    best = p.z();
                    for (int c = 0; c < 3; ++c) {
                        view.rgb.at(x, y, c) = pc.colors[i][c];
                    }
                    view.mask.set(x, y, false);
                }
            }
        }
    }
    return view;
}

void write_point_cloud_ply(const std::filesystem::path& path, const PointCloud& pc)
{
    using ply::Type;
    const std::vector<ply::Property> props = {
        {"x", Type::f32},   {"y", Type::f32},     {"z", Type::f32},
        {"red", Type::u8}, {"green", Type::u8}, {"blue", Type::u8},
    };
    ply::write_vertices(path, props, pc.size(), [&](std::size_t i, std::vector<double>& row) {
        for (int k = 0; k < 3; ++k) {
            row[static_cast<std::size_t>(k)] = pc.positions[i][k];
            row[static_cast<std::size_t>(3 + k)] = std::round(std::clamp(pc.colors[i][k], 0.0, 1.0) * 255.0);
        }
    });
}

PointCloud read_point_cloud_ply(const std::filesystem::path& path)
{
    const auto table = ply::read_vertices(path);
    const auto& x = table.column("x");
    const auto& y = table.column("y");
    const auto& z = table.column("z");
    const auto& r = table.column("red");
    const auto& g = table.column("green");
    const auto& b = table.column("blue");
    PointCloud pc;
    for (std::size_t i = 0; i < table.count; ++i) {
        pc.positions.emplace_back(x[i], y[i], z[i]);
        pc.colors.emplace_back(r[i] / 255.0, g[i] / 255.0, b[i] / 255.0);
    }
    return pc;
}

}  // namespace panogs
