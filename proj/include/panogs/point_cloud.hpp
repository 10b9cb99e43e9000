#pragma once

#include "panogs/geometry.hpp"

#include <array>
#include <cstdint>
#include <filesystem>
#include <vector>

namespace panogs {

struct PointCloud {
    std::vector<Vec3> positions;  // world frame, meters
    std::vector<Vec3> colors;     // [0, 1]
    std::vector<std::array<int, 2>> source_pixels;  // (u, v) in the panorama the points came from

    [[nodiscard]] std::size_t size() const noexcept { return positions.size(); }
    [[nodiscard]] bool empty() const noexcept { return positions.empty(); }

    /// Largest distance of any point from the centroid.
    [[nodiscard]] double bounding_radius() const;
};

/// One point per valid panorama pixel at pixel_to_direction(u + 0.5, v + 0.5) * depth.
PointCloud reverse_erp_project(const Panorama& pano);

struct DepthFilterOptions {
    double threshold = 0.4;
    bool normalize_by_depth = true;  // false: compare the raw gradient magnitude (meters per pixel)
};

/// Keep-mask (true = keep) from the central-difference depth gradient magnitude.
Mask depth_gradient_filter(const Image& depth, const DepthFilterOptions& opts);

/// Points whose source pixel is kept by the mask.
PointCloud filter_points(const PointCloud& pc, const Mask& keep);

/// Area-averaged rgb, nearest-center depth (no mixing across depth edges).
Panorama downsample_panorama(const Panorama& pano, const PanoDims& target);

struct ViewImage {
    Image rgb;
    Mask mask;  // true = no point landed here
    Pose pose;
    Intrinsics intrinsics;
};

struct ProjectionOptions {
    double point_radius = 1.0;  // pixels
    double z_near = 0.05;
};

/// Z-buffered disc splatting; nearest camera depth wins, ties go to the lower point index.
ViewImage project_points(const PointCloud& pc, const Intrinsics& K, const Pose& pose, const ProjectionOptions& opts);

/// Binary little-endian PLY with float x,y,z and uchar red,green,blue.
void write_point_cloud_ply(const std::filesystem::path& path, const PointCloud& pc);
PointCloud read_point_cloud_ply(const std::filesystem::path& path);

}  // namespace panogs
