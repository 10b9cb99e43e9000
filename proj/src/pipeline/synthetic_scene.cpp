#include "panogs/synthetic_scene.hpp"

#include "panogs/errors.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <random>

namespace panogs {

namespace {

constexpr double kMinDepth = 0.3;
constexpr double kMaxDepth = 50.0;

std::optional<double> intersect_box(const Vec3& o, const Vec3& d, const BoxOccluder& box)
{
    double t_near = -std::numeric_limits<double>::infinity();
    double t_far = std::numeric_limits<double>::infinity();
    for (int i = 0; i < 3; ++i) {
        const double lo = box.center[i] - box.half_size[i];
        const double hi = box.center[i] + box.half_size[i];
        if (std::abs(d[i]) < 1e-15) {
            if (o[i] < lo || o[i] > hi) {
                return std::nullopt;
            }
            continue;
        }
        double t0 = (lo - o[i]) / d[i];
        double t1 = (hi - o[i]) / d[i];
        if (t0 > t1) {
            std::swap(t0, t1);
        }
        t_near = std::max(t_near, t0);
        t_far = std::min(t_far, t1);
    }
    if (t_near > t_far || t_near <= 0.0) {
        return std::nullopt;
    }
    return t_near;
}

std::optional<double> intersect_sphere(const Vec3& o, const Vec3& d, const Vec3& c, double r)
{
    const Vec3 oc = o - c;
    const double b = oc.dot(d);
    const double cc = oc.squaredNorm() - r * r;
    const double disc = b * b - cc;
    if (disc < 0.0) {
        return std::nullopt;
    }
    const double s = std::sqrt(disc);
    const double t0 = -b - s;
    if (t0 > 0.0) {
        return t0;
    }
    const double t1 = -b + s;
    if (t1 > 0.0) {
        return t1;
    }
    return std::nullopt;
}

Vec3 surface_base_color(std::uint64_t seed, int surface)
{
    std::mt19937_64 rng(seed * 1000003ULL + static_cast<std::uint64_t>(surface) * 7919ULL + 17ULL);
    std::uniform_real_distribution<double> dist(0.15, 0.85);
    return {dist(rng), dist(rng), dist(rng)};
}

Vec3 surface_phases(std::uint64_t seed, int surface)
{
    std::mt19937_64 rng(seed * 2654435761ULL + static_cast<std::uint64_t>(surface) * 104729ULL + 5ULL);
    std::uniform_real_distribution<double> dist(0.0, 2.0 * kPi);
    return {dist(rng), dist(rng), dist(rng)};
}

}  // namespace

SyntheticScene SyntheticScene::empty_room(const Vec3& half_extents, std::uint64_t seed)
{
    SyntheticScene s;
    s.kind = Kind::room;
    s.seed = seed;
    s.room_half_extents = half_extents;
    s.validate();
    return s;
}

SyntheticScene SyntheticScene::occluder_room(std::uint64_t seed)
{
    SyntheticScene s;
    s.kind = Kind::room;
    s.seed = seed;
    s.room_half_extents = Vec3(5.0, 2.0, 5.0);
    s.texture_frequency = 0.8;
    // A ring of eight floor-to-ceiling pillars 0.45 m out.
    constexpr int n = 8;
    for (int k = 0; k < n; ++k) {
        const double a = 2.0 * kPi * k / n + 0.2;
        s.boxes.push_back({Vec3(0.45 * std::sin(a), -0.1, 0.45 * std::cos(a)), Vec3(0.08, 1.9, 0.08)});
    }
    s.validate();
    return s;
}

SyntheticScene SyntheticScene::terrain(std::uint64_t seed)
{
    SyntheticScene s;
    s.kind = Kind::terrain;
    s.seed = seed;
    s.texture_frequency = 0.5;
    s.boxes = {{Vec3(2.0, -1.0, 4.0), Vec3(0.6, 0.6, 0.6)}};
    s.spheres = {{Vec3(-3.0, -0.8, 5.0), 0.8}};
    s.validate();
    return s;
}

int SyntheticScene::surface_count() const
{
    const int fixed = kind == Kind::room ? 6 : 2;
    return fixed + static_cast<int>(boxes.size() + spheres.size());
}

void SyntheticScene::validate() const
{
    if (kind == Kind::room) {
        if ((room_half_extents.array() < kMinDepth).any() || (room_half_extents.array() > kMaxDepth / 2).any()) {
            throw ConfigError("room half extents must keep depths within [0.3, 50] m");
        }
    } else {
        if (ground_height < kMinDepth || sky_radius > kMaxDepth || sky_radius <= ground_height) {
            throw ConfigError("terrain needs ground_height >= 0.3 and ground_height < sky_radius <= 50");
        }
    }
    if (!(texture_frequency >= 0.0)) {
        throw ConfigError("texture frequency must be non-negative");
    }
    for (const auto& b : boxes) {
        const Vec3 closest = Vec3::Zero().cwiseMax(b.center - b.half_size).cwiseMin(b.center + b.half_size);
        if (closest.norm() < kMinDepth || (b.half_size.array() <= 0.0).any()) {
            throw ConfigError("box occluders must stay at least 0.3 m from the viewer");
        }
    }
    for (const auto& sp : spheres) {
        if (sp.center.norm() - sp.radius < kMinDepth || sp.radius <= 0.0) {
            throw ConfigError("sphere occluders must stay at least 0.3 m from the viewer");
        }
    }
}

std::optional<RayHit> SyntheticScene::cast(const Vec3& origin, const Vec3& dir_in) const
{
    const Vec3 d = dir_in.normalized();
    RayHit best;
    best.distance = std::numeric_limits<double>::infinity();
    int next_id = 0;
    if (kind == Kind::room) {
        for (int axis = 0; axis < 3; ++axis) {
            if (std::abs(d[axis]) < 1e-15) {
                next_id += 2;
                continue;
            }
            const double plane = d[axis] > 0.0 ? room_half_extents[axis] : -room_half_extents[axis];
            const double t = (plane - origin[axis]) / d[axis];
            const int id = axis * 2 + (d[axis] > 0.0 ? 1 : 0);
            if (t > 0.0 && t < best.distance) {
                best.distance = t;
                best.surface = id;
            }
            next_id += 2;
        }
    } else {
        if (d.y() < 0.0) {
            const double t = (-ground_height - origin.y()) / d.y();
            if (t > 0.0 && (origin + t * d).norm() <= sky_radius) {
                best.distance = t;
                best.surface = 0;
            }
        }
        if (best.surface < 0) {
            if (const auto t = intersect_sphere(origin, d, Vec3::Zero(), sky_radius)) {
                best.distance = *t;
                best.surface = 1;
            }
        }
        next_id = 2;
    }
    for (const auto& box : boxes) {
        if (const auto t = intersect_box(origin, d, box); t && *t < best.distance) {
            best.distance = *t;
            best.surface = next_id;
        }
        ++next_id;
    }
    for (const auto& sp : spheres) {
        if (const auto t = intersect_sphere(origin, d, sp.center, sp.radius); t && *t < best.distance) {
            best.distance = *t;
            best.surface = next_id;
        }
        ++next_id;
    }
    if (best.surface < 0) {
        return std::nullopt;
    }
    best.point = origin + best.distance * d;
    return best;
}

Vec3 SyntheticScene::shade(const RayHit& hit) const
{
    if (kind == Kind::terrain && hit.surface == 1) {
        const double elev = std::clamp(hit.point.y() / sky_radius, 0.0, 1.0);
        return Vec3(0.55, 0.7, 0.9) * (1.0 - 0.4 * elev) + Vec3(0.1, 0.1, 0.05) * elev;
    }
    const Vec3 base = surface_base_color(seed, hit.surface);
    const Vec3 ph = surface_phases(seed, hit.surface);
    const double w = 2.0 * kPi * texture_frequency;
    const Vec3& p = hit.point;
    const double pattern =
        (std::sin(w * p.x() + ph.x()) + std::sin(w * p.y() + ph.y()) + std::sin(w * p.z() + ph.z())) / 3.0;
    return (base * (0.75 + 0.25 * pattern)).cwiseMax(0.0).cwiseMin(1.0);
}

Panorama synth_scene_panorama(const SyntheticScene& scene, const PanoDims& dims)
{
    scene.validate();
    Panorama pano(dims);
    Image depth(dims.width(), dims.height(), 1);
    for (int v = 0; v < dims.height(); ++v) {
        for (int u = 0; u < dims.width(); ++u) {
            const Vec3 dir = pixel_to_direction(u + 0.5, v + 0.5, dims);
            const auto hit = scene.cast(Vec3::Zero(), dir);
            if (!hit) {
                throw PipelineError("synthetic scene is not closed around the viewer");
            }
            const Vec3 c = scene.shade(*hit);
            for (int ch = 0; ch < 3; ++ch) {
                pano.rgb.at(u, v, ch) = c[ch];
            }
            depth.at(u, v) = hit->distance;
        }
    }
    pano.depth = std::move(depth);
    return pano;
}

std::vector<int> synth_scene_surface_ids(const SyntheticScene& scene, const PanoDims& dims)
{
    std::vector<int> ids(dims.pixel_count(), -1);
    for (int v = 0; v < dims.height(); ++v) {
        for (int u = 0; u < dims.width(); ++u) {
            const auto hit = scene.cast(Vec3::Zero(), pixel_to_direction(u + 0.5, v + 0.5, dims));
            ids[static_cast<std::size_t>(v) * dims.width() + u] = hit ? hit->surface : -1;
        }
    }
    return ids;
}

SceneView render_scene_view(const SyntheticScene& scene, const Intrinsics& K, const Pose& pose)
{
    SceneView view{Image(K.width, K.height, 3), Image(K.width, K.height, 1)};
    const Mat3 R = pose.world_from_camera();
    for (int y = 0; y < K.height; ++y) {
        for (int x = 0; x < K.width; ++x) {
            const Vec3 dir = R * camera_ray(K, x + 0.5, y + 0.5);
            const auto hit = scene.cast(pose.position, dir);
            if (!hit) {
                continue;
            }
            const Vec3 c = scene.shade(*hit);
            for (int ch = 0; ch < 3; ++ch) {
                view.rgb.at(x, y, ch) = c[ch];
            }
            view.depth.at(x, y) = hit->distance;
        }
    }
    return view;
}

namespace {

nlohmann::json vec_json(const Vec3& v)
{
    return nlohmann::json::array({v.x(), v.y(), v.z()});
}

Vec3 vec_from(const nlohmann::json& j)
{
    if (!j.is_array() || j.size() != 3) {
        throw ConfigError("expected a 3-element array");
    }
    return {j[0].get<double>(), j[1].get<double>(), j[2].get<double>()};
}

}  // namespace

void to_json(nlohmann::json& j, const SyntheticScene& scene)
{
    j = nlohmann::json{
        {"kind", scene.kind == SyntheticScene::Kind::room ? "room" : "terrain"},
        {"seed", scene.seed},
        {"room_half_extents", vec_json(scene.room_half_extents)},
        {"texture_frequency", scene.texture_frequency},
        {"ground_height", scene.ground_height},
        {"sky_radius", scene.sky_radius},
    };
    auto boxes = nlohmann::json::array();
    for (const auto& b : scene.boxes) {
        boxes.push_back({{"center", vec_json(b.center)}, {"half_size", vec_json(b.half_size)}});
    }
    auto spheres = nlohmann::json::array();
    for (const auto& s : scene.spheres) {
        spheres.push_back({{"center", vec_json(s.center)}, {"radius", s.radius}});
    }
    j["boxes"] = std::move(boxes);
    j["spheres"] = std::move(spheres);
}

void from_json(const nlohmann::json& j, SyntheticScene& scene)
{
    const auto kind = j.at("kind").get<std::string>();
    if (kind == "room") {
        scene.kind = SyntheticScene::Kind::room;
    } else if (kind == "terrain") {
        scene.kind = SyntheticScene::Kind::terrain;
    } else {
        throw ConfigError("scene kind must be room or terrain");
    }
    scene.seed = j.value("seed", std::uint64_t{0});
    if (j.contains("room_half_extents")) {
        scene.room_half_extents = vec_from(j.at("room_half_extents"));
    }
    scene.texture_frequency = j.value("texture_frequency", scene.texture_frequency);
    scene.ground_height = j.value("ground_height", scene.ground_height);
    scene.sky_radius = j.value("sky_radius", scene.sky_radius);
    scene.boxes.clear();
    for (const auto& b : j.value("boxes", nlohmann::json::array())) {
        scene.boxes.push_back({vec_from(b.at("center")), vec_from(b.at("half_size"))});
    }
    scene.spheres.clear();
    for (const auto& s : j.value("spheres", nlohmann::json::array())) {
        scene.spheres.push_back({vec_from(s.at("center")), s.at("radius").get<double>()});
    }
    scene.validate();
}

}  // namespace panogs
