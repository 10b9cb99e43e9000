#pragma once

#include "panogs/geometry.hpp"

#include <array>
#include <vector>

namespace panogs {

inline constexpr int kIcosahedronFaces = 20;

/// Unit face-center directions of a regular icosahedron, in a fixed order.
const std::array<Vec3, kIcosahedronFaces>& icosahedron_face_centers();

/// Angle between a face center and any of its three vertices (about 37.38 degrees).
double icosahedron_face_circumradius_deg();

struct TangentCamera {
    int index = 0;
    Intrinsics intrinsics;
    Pose pose;
};

struct TangentFace {
    int index = 0;
    Intrinsics intrinsics;
    Pose pose;
    Image image;
};

/// Gnomonic cameras looking through each icosahedron face center. The square image
/// circumscribes the face's spherical triangle plus `fov_margin_deg` on every side.
std::vector<TangentCamera> icosahedron_cameras(int face_res, double fov_margin_deg);

std::vector<TangentFace> icosahedron_tangent_project(const Panorama& pano, int face_res, double fov_margin_deg);

/// True when `dir` lies inside the camera's image (continuous bounds, z > 0).
bool in_frustum(const Intrinsics& K, const Pose& pose, const Vec3& dir);

/// Per-pixel frustum weight: product of distances to the four image borders, 1 at the center.
double frustum_weight(double x, double y, int width, int height);
Image frustum_weights(int width, int height);

/// Running weighted sums over an equirectangular grid.
class ErpAccumulator {
public:
    ErpAccumulator(PanoDims dims, int channels);

    [[nodiscard]] const PanoDims& dims() const noexcept { return dims_; }
    [[nodiscard]] int channels() const noexcept { return weighted_.channels(); }
    [[nodiscard]] const Image& weighted_sum() const noexcept { return weighted_; }
    [[nodiscard]] const Image& weight_sum() const noexcept { return weights_; }

    void add(int x, int y, std::span<const double> values, double weight);

    /// Weighted mean per pixel; pixels with zero total weight are left at 0 and reported.
    [[nodiscard]] Image normalized() const;
    [[nodiscard]] Mask covered() const;

private:
    PanoDims dims_;
    Image weighted_;
    Image weights_;
};

/// Splat a perspective image into the accumulator: every panorama pixel whose center ray
/// lands inside the image receives the bilinear face value times the bilinear weight.
void tangent_to_erp_accumulate(const Image& face_values, const Intrinsics& K, const Pose& pose, const Image& weights,
                               ErpAccumulator& acc);

}  // namespace panogs
