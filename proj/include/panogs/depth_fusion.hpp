#pragma once

#include "panogs/adapters.hpp"
#include "panogs/tangent_faces.hpp"

#include <cstdint>
#include <span>
#include <vector>

namespace panogs {

struct FaceDisparity {
    int face_index = 0;
    Intrinsics intrinsics;
    Pose pose;
    Image disparity;  // relative, unitless
    double scale = 1.0;
    double offset = 0.0;

    [[nodiscard]] double aligned(double raw) const { return scale * raw + offset; }
    [[nodiscard]] Image aligned_disparity() const;
};

struct CalibrationResult {
    double scale = 1.0;
    double offset = 0.0;
    double residual_rms = 0.0;
    std::size_t n_samples = 0;
};

struct DepthFusionConfig {
    int face_res = 256;
    double fov_margin_deg = 12.0;
    int n_calibration_faces = 5;
    double depth_min = 0.1;
    double depth_max = 100.0;
    int overlap_stride = 2;          // sample every n-th panorama pixel for overlaps
    std::size_t min_overlap_samples = 100;
    double outlier_sigma = 3.0;      // refit without samples beyond this many robust sigmas; 0 disables
    std::uint64_t seed = 0;

    void validate() const;
};

/// Tangent-project the panorama and query the depth adapter once per face.
std::vector<FaceDisparity> estimate_face_disparities(const std::vector<TangentFace>& faces, DepthClient& depth);

struct OverlapSample {
    int face_a = 0;
    int face_b = 0;
    double value_a = 0;
    double value_b = 0;
};

/// Panorama pixels seen by two or more faces, with each face's bilinear disparity there.
std::vector<OverlapSample> collect_overlaps(const std::vector<FaceDisparity>& faces, const PanoDims& dims, int stride);

struct AlignmentReport {
    double residual_rms_before = 0;
    double residual_rms_after = 0;
    std::size_t n_samples = 0;
};

/// Per-face affine alignment: minimise sum (s_a d_a + o_a - s_b d_b - o_b)^2 over all overlap
/// pairs subject to mean(s) = 1, mean(o) = 0, via the KKT normal equations.
AlignmentReport align_faces(std::vector<FaceDisparity>& faces, std::span<const OverlapSample> overlaps,
                            std::size_t min_samples_per_face = 100);

/// Indices of residuals within `sigma` robust standard deviations (1.4826 * MAD) of zero.
/// Everything is kept when sigma <= 0 or the MAD is zero.
std::vector<std::size_t> robust_inliers(std::span<const double> residuals, double sigma);

/// Frustum-weighted blend of the aligned face disparities into a panorama map.
Image frustum_blend(const std::vector<FaceDisparity>& faces, const PanoDims& dims);

/// Closed-form least-squares fit of reference ~ scale * observed + offset.
CalibrationResult fit_scale_offset(std::span<const double> observed, std::span<const double> reference);

struct MetricCalibration {
    CalibrationResult fit;
    std::vector<int> faces_used;
    Image depth;  // meters, clamped to [depth_min, depth_max]
};

/// Random (seeded) subset of tangent faces -> metric depth -> reference disparity; fit a
/// global scale/offset of the panorama disparity and convert to depth.
MetricCalibration calibrate_metric(const Image& pano_disparity, const std::vector<TangentFace>& faces,
                                   MetricDepthClient& metric, const DepthFusionConfig& cfg);

/// Face indices used for calibration: the first n of a seeded permutation of 0..19,
/// so subsets for growing n are nested.
std::vector<int> calibration_subset(int n_faces, std::uint64_t seed);

Image disparity_to_depth(const Image& disparity);
Image depth_to_disparity(const Image& depth);

struct DepthFusionResult {
    std::vector<FaceDisparity> faces;
    AlignmentReport alignment;
    Image disparity;
    MetricCalibration calibration;
};

/// estimate -> align -> blend -> calibrate.
DepthFusionResult estimate_panorama_depth(const Panorama& pano, DepthClient& depth, MetricDepthClient& metric,
                                          const DepthFusionConfig& cfg);

}  // namespace panogs
