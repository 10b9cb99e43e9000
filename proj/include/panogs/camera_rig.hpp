#pragma once

#include "panogs/adapters.hpp"
#include "panogs/geometry.hpp"
#include "panogs/point_cloud.hpp"

#include <nlohmann/json.hpp>

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

namespace panogs {

class GaussianField;
struct RasterSettings;

struct RingSpec {
    double elevation_deg = 0;
    int count = 1;
    bool half_step = false;  // rotate the ring by half its azimuth spacing
};

struct RigConfig {
    int n_base = 38;
    int n_supp_per_base = 4;
    int image_size = 512;
    double fov_deg = 90.0;
    double supp_translation = 0.15;  // meters
    double supp_rotation_deg = 10.0;
    std::vector<RingSpec> rings;     // empty: the default 1+6+8+8+8+6+1 layout

    void validate() const;
    [[nodiscard]] std::vector<RingSpec> ring_layout() const;
};

enum class CameraKind { base, supp };

struct RigCamera {
    int id = 0;
    CameraKind kind = CameraKind::base;
    int parent = -1;  // base camera id for supplementary cameras
    Pose pose;
};

struct CameraRig {
    Intrinsics intrinsics;
    std::vector<RigCamera> cameras;

    [[nodiscard]] std::vector<const RigCamera*> of_kind(CameraKind kind) const;
};

/// Base poses on fixed elevation rings, all at the origin.
std::vector<Pose> build_base_rig(const RigConfig& cfg);

/// Up / down / left / right neighbours of a base pose, in that order.
std::vector<Pose> build_supplementary(const Pose& base, const RigConfig& cfg);

/// Base cameras followed by their supplementary cameras, with shared intrinsics.
CameraRig build_rig(const RigConfig& cfg);

/// Fraction of `samples` random directions inside at least one base frustum.
double base_coverage(const CameraRig& rig, int samples, std::uint64_t seed);

enum class SupervisionKind { pano, pcd, inp };
const char* to_string(SupervisionKind kind);

struct SupervisionItem {
    int camera_id = 0;
    Pose pose;
    Intrinsics intrinsics;
    Image rgb;
    std::optional<Mask> mask;  // true = missing; excluded from the loss
};

struct SupervisionSet {
    SupervisionKind kind;
    std::vector<SupervisionItem> items;
};

SupervisionSet build_pano_set(const Panorama& pano, const CameraRig& rig);
SupervisionSet build_pcd_set(const PointCloud& points, const CameraRig& rig, const ProjectionOptions& opts);

/// Render `field` at every supplementary pose and fill the PCD-set holes through the
/// inpainting adapter. Items keep the PCD mask for provenance.
SupervisionSet build_inp_set(const GaussianField& field, const CameraRig& rig, const SupervisionSet& pcd_set,
                             InpaintClient& inpaint, const RasterSettings& settings);

nlohmann::json rig_to_json(const CameraRig& rig);
CameraRig rig_from_json(const nlohmann::json& j);

}  // namespace panogs
