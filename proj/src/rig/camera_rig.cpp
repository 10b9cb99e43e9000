#include "panogs/camera_rig.hpp"

#include "panogs/errors.hpp"

#include <cmath>
#include <random>

namespace panogs {

void RigConfig::validate() const
{
    if (n_base < 6) {
        throw ConfigError("rig.n_base must be at least 6");
    }
    if (n_supp_per_base != 0 && n_supp_per_base != 4) {
        throw ConfigError("rig.n_supp_per_base must be 0 or 4");
    }
    if (!(fov_deg >= 30.0 && fov_deg <= 120.0)) {
        throw ConfigError("rig.fov_deg must lie in [30, 120]");
    }
    if (image_size < 8) {
        throw ConfigError("rig.image_size must be at least 8");
    }
    if (supp_translation < 0.0 || supp_rotation_deg < 0.0) {
        throw ConfigError("supplementary offsets must be non-negative");
    }
    int sum = 0;
    for (const auto& r : ring_layout()) {
        if (r.count < 1) {
            throw ConfigError("every ring needs at least one camera");
        }
        sum += r.count;
    }
    if (sum != n_base) {
        throw ConfigError("rig.n_base = " + std::to_string(n_base) + " but the ring layout holds " +
                          std::to_string(sum) + " cameras; supply explicit rings for custom layouts");
    }
}

std::vector<RingSpec> RigConfig::ring_layout() const
{
    if (!rings.empty()) {
        return rings;
    }
    return {
        {90.0, 1, false}, {60.0, 6, false}, {30.0, 8, true}, {0.0, 8, false},
        {-30.0, 8, true}, {-60.0, 6, false}, {-90.0, 1, false},
    };
}

std::vector<const RigCamera*> CameraRig::of_kind(CameraKind kind) const
{
    std::vector<const RigCamera*> out;
    for (const auto& c : cameras) {
        if (c.kind == kind) {
            out.push_back(&c);
        }
    }
    return out;
}

std::vector<Pose> build_base_rig(const RigConfig& cfg)
{
    cfg.validate();
    std::vector<Pose> poses;
    for (const auto& ring : cfg.ring_layout()) {
        const double el = deg_to_rad(ring.elevation_deg);
        const double step = 2.0 * kPi / ring.count;
        for (int k = 0; k < ring.count; ++k) {
            const double az = step * (k + (ring.half_step ? 0.5 : 0.0));
            const Vec3 dir(std::cos(el) * std::sin(az), std::sin(el), std::cos(el) * std::cos(az));
            // At the poles "up" falls back to the ring's azimuth direction.
            const bool polar = std::abs(std::abs(ring.elevation_deg) - 90.0) < 1e-9;
            const Vec3 up = polar ? Vec3(Vec3(std::sin(az), 0.0, std::cos(az)) * (ring.elevation_deg > 0 ? -1.0 : 1.0))
                                  : Vec3(Vec3::UnitY());
            poses.push_back(Pose::look_at(dir, up));
        }
    }
    return poses;
}

std::vector<Pose> build_supplementary(const Pose& base, const RigConfig& cfg)
{
    const double t = cfg.supp_translation;
    const double a = deg_to_rad(cfg.supp_rotation_deg);
    struct Offset {
        Vec3 direction;
        Quat turn;
    };
    const Offset offsets[4] = {
        {Vec3::UnitY(), Quat(Eigen::AngleAxisd(-a, Vec3::UnitX()))},   // up: pitch up
        {-Vec3::UnitY(), Quat(Eigen::AngleAxisd(a, Vec3::UnitX()))},   // down
        {-Vec3::UnitX(), Quat(Eigen::AngleAxisd(-a, Vec3::UnitY()))},  // left
        {Vec3::UnitX(), Quat(Eigen::AngleAxisd(a, Vec3::UnitY()))},    // right
    };
    std::vector<Pose> out;
    for (const auto& o : offsets) {
        Pose p;
        p.position = base.position + base.rotation * (o.direction * t);
        p.rotation = (base.rotation * o.turn).normalized();
        out.push_back(p);
    }
    return out;
}

CameraRig build_rig(const RigConfig& cfg)
{
    cfg.validate();
    CameraRig rig;
    rig.intrinsics = Intrinsics::from_fov(cfg.image_size, cfg.image_size, cfg.fov_deg);
    const auto base = build_base_rig(cfg);
    int id = 0;
    for (const auto& pose : base) {
        rig.cameras.push_back({id++, CameraKind::base, -1, pose});
    }
    if (cfg.n_supp_per_base == 4) {
        for (std::size_t b = 0; b < base.size(); ++b) {
            for (const auto& pose : build_supplementary(base[b], cfg)) {
                rig.cameras.push_back({id++, CameraKind::supp, static_cast<int>(b), pose});
            }
        }
    }
    return rig;
}

double base_coverage(const CameraRig& rig, int samples, std::uint64_t seed)
{
    std::mt19937_64 rng(seed);
    std::normal_distribution<double> n(0.0, 1.0);
    const auto base = rig.of_kind(CameraKind::base);
    int covered = 0;
    for (int i = 0; i < samples; ++i) {
        Vec3 d(n(rng), n(rng), n(rng));
        d.normalize();
        for (const auto* cam : base) {
            const Vec3 p = cam->pose.to_camera(cam->pose.position + d);
            if (p.z() <= 0.0) {
                continue;
            }
            const Vec2 xy = project_camera_point(rig.intrinsics, p);
            if (xy.x() >= 0 && xy.x() <= rig.intrinsics.width && xy.y() >= 0 && xy.y() <= rig.intrinsics.height) {
                ++covered;
                break;
            }
        }
    }
    return static_cast<double>(covered) / samples;
}

const char* to_string(SupervisionKind kind)
{
    switch (kind) {
    case SupervisionKind::pano:
        return "PANO";
    case SupervisionKind::pcd:
        return "PCD";
    case SupervisionKind::inp:
        return "INP";
    }
    return "?";
}

SupervisionSet build_pano_set(const Panorama& pano, const CameraRig& rig)
{
    SupervisionSet set{SupervisionKind::pano, {}};
    for (const auto* cam : rig.of_kind(CameraKind::base)) {
        set.items.push_back({cam->id, cam->pose, rig.intrinsics, erp_to_perspective(pano.rgb, rig.intrinsics, cam->pose),
                             std::nullopt});
    }
    return set;
}

SupervisionSet build_pcd_set(const PointCloud& points, const CameraRig& rig, const ProjectionOptions& opts)
{
    const auto supp = rig.of_kind(CameraKind::supp);
    if (supp.empty()) {
        throw ContractError("build_pcd_set: the rig has no supplementary cameras");
    }
    SupervisionSet set{SupervisionKind::pcd, {}};
    for (const auto* cam : supp) {
        ViewImage v = project_points(points, rig.intrinsics, cam->pose, opts);
        set.items.push_back({cam->id, cam->pose, rig.intrinsics, std::move(v.rgb), std::move(v.mask)});
    }
    return set;
}

namespace {

nlohmann::json pose_json(const Pose& p)
{
    return {
        {"q", {p.rotation.w(), p.rotation.x(), p.rotation.y(), p.rotation.z()}},
        {"t", {p.position.x(), p.position.y(), p.position.z()}},
    };
}

}  // namespace

nlohmann::json rig_to_json(const CameraRig& rig)
{
    nlohmann::json cams = nlohmann::json::array();
    for (const auto& c : rig.cameras) {
        nlohmann::json j = pose_json(c.pose);
        j["id"] = c.id;
        j["kind"] = c.kind == CameraKind::base ? "base" : "supp";
        j["parent"] = c.parent < 0 ? nlohmann::json(nullptr) : nlohmann::json(c.parent);
        cams.push_back(std::move(j));
    }
    const auto& K = rig.intrinsics;
    return {
        {"intrinsics", {{"fx", K.fx}, {"fy", K.fy}, {"cx", K.cx}, {"cy", K.cy}, {"w", K.width}, {"h", K.height}}},
        {"cameras", std::move(cams)},
    };
}

CameraRig rig_from_json(const nlohmann::json& j)
{
    try {
        CameraRig rig;
        const auto& k = j.at("intrinsics");
        rig.intrinsics.fx = k.at("fx").get<double>();
        rig.intrinsics.fy = k.at("fy").get<double>();
        rig.intrinsics.cx = k.at("cx").get<double>();
        rig.intrinsics.cy = k.at("cy").get<double>();
        rig.intrinsics.width = k.at("w").get<int>();
        rig.intrinsics.height = k.at("h").get<int>();
        rig.intrinsics.validate();
        for (const auto& c : j.at("cameras")) {
            RigCamera cam;
            cam.id = c.at("id").get<int>();
            const auto kind = c.at("kind").get<std::string>();
            if (kind != "base" && kind != "supp") {
                throw ConfigError("camera kind must be base or supp");
            }
            cam.kind = kind == "base" ? CameraKind::base : CameraKind::supp;
            cam.parent = c.contains("parent") && !c.at("parent").is_null() ? c.at("parent").get<int>() : -1;
            const auto& q = c.at("q");
            const auto& t = c.at("t");
            cam.pose.rotation = Quat(q.at(0).get<double>(), q.at(1).get<double>(), q.at(2).get<double>(),
                                     q.at(3).get<double>());
            cam.pose.position = Vec3(t.at(0).get<double>(), t.at(1).get<double>(), t.at(2).get<double>());
            if (std::abs(cam.pose.rotation.norm() - 1.0) > 1e-6) {
                throw ConfigError("camera " + std::to_string(cam.id) + " has a non-unit quaternion");
            }
            cam.pose.rotation.normalize();
            rig.cameras.push_back(cam);
        }
        return rig;
    } catch (const nlohmann::json::exception& e) {
        throw ConfigError(std::string("malformed rig JSON: ") + e.what());
    }
}

}  // namespace panogs
