#pragma once

#include "panogs/geometry.hpp"

#include <nlohmann/json.hpp>

#include <cstdint>
#include <optional>
#include <vector>

namespace panogs {

struct BoxOccluder {
    Vec3 center = Vec3::Zero();
    Vec3 half_size = Vec3::Constant(0.25);
};

struct SphereOccluder {
    Vec3 center = Vec3::Zero();
    double radius = 0.25;
};

struct RayHit {
    double distance = 0;
    int surface = -1;  // stable id of the surface that was hit
    Vec3 point = Vec3::Zero();
};

/// Analytic test scene seen from the origin: a textured room (or ground + sky dome) with
/// optional box and sphere occluders. Depth is exact for every ray.
struct SyntheticScene {
    enum class Kind { room, terrain };

    Kind kind = Kind::room;
    std::uint64_t seed = 0;
    Vec3 room_half_extents = Vec3(3.0, 1.5, 3.0);
    double texture_frequency = 1.0;  // cycles per meter
    double ground_height = 1.6;      // terrain: ground plane at y = -ground_height
    double sky_radius = 45.0;        // terrain: dome radius
    std::vector<BoxOccluder> boxes;
    std::vector<SphereOccluder> spheres;

    static SyntheticScene empty_room(const Vec3& half_extents, std::uint64_t seed = 0);
    /// The reference scene for reconstruction tests: a ring of pillars close to the viewer.
    static SyntheticScene occluder_room(std::uint64_t seed = 0);
    static SyntheticScene terrain(std::uint64_t seed = 0);

    void validate() const;

    [[nodiscard]] std::optional<RayHit> cast(const Vec3& origin, const Vec3& dir) const;
    [[nodiscard]] Vec3 shade(const RayHit& hit) const;
    [[nodiscard]] int surface_count() const;
};

/// Ray-cast the scene from the origin at every pixel center: rgb + exact radial depth.
Panorama synth_scene_panorama(const SyntheticScene& scene, const PanoDims& dims);

/// Surface id per panorama pixel (used as an occlusion-edge oracle).
std::vector<int> synth_scene_surface_ids(const SyntheticScene& scene, const PanoDims& dims);

struct SceneView {
    Image rgb;
    Image depth;  // distance along the ray, meters
};

/// Ground-truth perspective render from an arbitrary pose.
SceneView render_scene_view(const SyntheticScene& scene, const Intrinsics& K, const Pose& pose);

void to_json(nlohmann::json& j, const SyntheticScene& scene);
void from_json(const nlohmann::json& j, SyntheticScene& scene);

}  // namespace panogs
