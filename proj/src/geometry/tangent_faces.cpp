#include "panogs/tangent_faces.hpp"

#include "panogs/errors.hpp"

#include <algorithm>
#include <cmath>
#include <tuple>

namespace panogs {

namespace {

std::array<Vec3, 12> icosahedron_vertices()
{
    const double phi = 0.5 * (1.0 + std::sqrt(5.0));
    return {
        Vec3(0, 1, phi),  Vec3(0, 1, -phi),  Vec3(0, -1, phi),  Vec3(0, -1, -phi),
        Vec3(1, phi, 0),  Vec3(1, -phi, 0),  Vec3(-1, phi, 0),  Vec3(-1, -phi, 0),
        Vec3(phi, 0, 1),  Vec3(phi, 0, -1),  Vec3(-phi, 0, 1),  Vec3(-phi, 0, -1),
    };
}

struct IcosahedronTables {
    std::array<Vec3, kIcosahedronFaces> centers;
    double circumradius_deg = 0;
};

IcosahedronTables build_tables()
{
    const auto verts = icosahedron_vertices();
    std::vector<std::array<int, 3>> faces;
    const auto is_edge = [&](int a, int b) { return std::abs((verts[a] - verts[b]).norm() - 2.0) < 1e-9; };
    for (int a = 0; a < 12; ++a) {
        for (int b = a + 1; b < 12; ++b) {
            for (int c = b + 1; c < 12; ++c) {
                if (is_edge(a, b) && is_edge(b, c) && is_edge(a, c)) {
                    faces.push_back({a, b, c});
                }
            }
        }
    }
    IcosahedronTables t;
    std::vector<Vec3> centers;
    for (const auto& f : faces) {
        centers.push_back((verts[f[0]] + verts[f[1]] + verts[f[2]]).normalized());
    }
    // Order faces top to bottom, then by longitude, so indices are stable and readable.
    std::sort(centers.begin(), centers.end(), [](const Vec3& l, const Vec3& r) {
        const double ly = std::round(l.y() * 1e9);
        const double ry = std::round(r.y() * 1e9);
        if (ly != ry) {
            return ly > ry;
        }
        return std::atan2(l.x(), l.z()) < std::atan2(r.x(), r.z());
    });
    std::copy(centers.begin(), centers.end(), t.centers.begin());
    const Vec3 v0 = verts[faces[0][0]].normalized();
    const Vec3 c0 = (verts[faces[0][0]] + verts[faces[0][1]] + verts[faces[0][2]]).normalized();
    t.circumradius_deg = rad_to_deg(std::acos(std::clamp(v0.dot(c0), -1.0, 1.0)));
    return t;
}

const IcosahedronTables& tables()
{
    static const IcosahedronTables t = build_tables();
    return t;
}

}  // namespace

const std::array<Vec3, kIcosahedronFaces>& icosahedron_face_centers()
{
    return tables().centers;
}

double icosahedron_face_circumradius_deg()
{
    return tables().circumradius_deg;
}

std::vector<TangentCamera> icosahedron_cameras(int face_res, double fov_margin_deg)
{
    if (face_res < 8) {
        throw ConfigError("tangent face resolution must be at least 8 pixels");
    }
    // Without a positive margin neighbouring caps only touch along the shared edge.
    if (!(fov_margin_deg > 0.0)) {
        throw ConfigError("tangent face FOV margin must be positive so that adjacent faces overlap");
    }
    const double half_fov = icosahedron_face_circumradius_deg() + fov_margin_deg;
    if (half_fov >= 80.0) {
        throw ConfigError("tangent face FOV margin too large for a gnomonic projection");
    }
    Intrinsics K;
    K.width = face_res;
    K.height = face_res;
    K.fx = 0.5 * face_res / std::tan(deg_to_rad(half_fov));
    K.fy = K.fx;
    K.cx = 0.5 * face_res;
    K.cy = 0.5 * face_res;

    std::vector<TangentCamera> cams;
    cams.reserve(kIcosahedronFaces);
    const auto& centers = icosahedron_face_centers();
    for (int i = 0; i < kIcosahedronFaces; ++i) {
        const Vec3 up = std::abs(centers[i].y()) > 0.99 ? Vec3::UnitZ() : Vec3::UnitY();
        cams.push_back({i, K, Pose::look_at(centers[i], up)});
    }
    return cams;
}

std::vector<TangentFace> icosahedron_tangent_project(const Panorama& pano, int face_res, double fov_margin_deg)
{
    std::vector<TangentFace> faces;
    for (const auto& cam : icosahedron_cameras(face_res, fov_margin_deg)) {
        faces.push_back({cam.index, cam.intrinsics, cam.pose, erp_to_perspective(pano.rgb, cam.intrinsics, cam.pose)});
    }
    return faces;
}

bool in_frustum(const Intrinsics& K, const Pose& pose, const Vec3& dir)
{
    const Vec3 p = pose.rotation.conjugate() * dir;
    if (p.z() <= 0.0) {
        return false;
    }
    const Vec2 xy = project_camera_point(K, p);
    return xy.x() >= 0.0 && xy.x() <= K.width && xy.y() >= 0.0 && xy.y() <= K.height;
}

double frustum_weight(double x, double y, int width, int height)
{
    if (x <= 0.0 || y <= 0.0 || x >= width || y >= height) {
        return 0.0;
    }
    const double hw = 0.5 * width;
    const double hh = 0.5 * height;
    return (x * (width - x) / (hw * hw)) * (y * (height - y) / (hh * hh));
}

Image frustum_weights(int width, int height)
{
    Image w(width, height, 1);
    for (int y = 0; y < height; ++y) {
        for (int x = 0; x < width; ++x) {
            w.at(x, y) = frustum_weight(x + 0.5, y + 0.5, width, height);
        }
    }
    return w;
}

ErpAccumulator::ErpAccumulator(PanoDims dims, int channels)
    : dims_(dims), weighted_(dims.width(), dims.height(), channels), weights_(dims.width(), dims.height(), 1)
{
}

void ErpAccumulator::add(int x, int y, std::span<const double> values, double weight)
{
    auto px = weighted_.pixel(x, y);
    for (std::size_t c = 0; c < px.size(); ++c) {
        px[c] += weight * values[c];
    }
    weights_.at(x, y) += weight;
}

Image ErpAccumulator::normalized() const
{
    Image out(dims_.width(), dims_.height(), channels());
    for (int y = 0; y < dims_.height(); ++y) {
        for (int x = 0; x < dims_.width(); ++x) {
            const double w = weights_.at(x, y);
            if (w > 0.0) {
                for (int c = 0; c < channels(); ++c) {
                    out.at(x, y, c) = weighted_.at(x, y, c) / w;
                }
            }
        }
    }
    return out;
}

Mask ErpAccumulator::covered() const
{
    Mask m(dims_.width(), dims_.height());
    for (int y = 0; y < dims_.height(); ++y) {
        for (int x = 0; x < dims_.width(); ++x) {
            m.set(x, y, weights_.at(x, y) > 0.0);
        }
    }
    return m;
}

void tangent_to_erp_accumulate(const Image& face_values, const Intrinsics& K, const Pose& pose, const Image& weights,
                               ErpAccumulator& acc)
{
    if (face_values.width() != K.width || face_values.height() != K.height || weights.width() != K.width ||
        weights.height() != K.height || weights.channels() != 1) {
        throw ContractError("tangent_to_erp_accumulate: face, weights and intrinsics disagree on size");
    }
    if (face_values.channels() != acc.channels()) {
        throw ContractError("tangent_to_erp_accumulate: channel count mismatch");
    }
    const Mat3 Rt = pose.world_from_camera().transpose();
    const PanoDims& dims = acc.dims();
    std::vector<double> values(static_cast<std::size_t>(face_values.channels()));
    for (int v = 0; v < dims.height(); ++v) {
        for (int u = 0; u < dims.width(); ++u) {
            const Vec3 p = Rt * pixel_to_direction(u + 0.5, v + 0.5, dims);
            if (p.z() <= 0.0) {
                continue;
            }
            const Vec2 xy = project_camera_point(K, p);
            if (xy.x() < 0.0 || xy.x() > K.width || xy.y() < 0.0 || xy.y() > K.height) {
                continue;
            }
            const double w = sample_bilinear_clamped(weights, xy.x(), xy.y(), 0);
            if (!(w > 0.0)) {
                continue;
            }
            for (int c = 0; c < face_values.channels(); ++c) {
                values[static_cast<std::size_t>(c)] = sample_bilinear_clamped(face_values, xy.x(), xy.y(), c);
            }
            acc.add(u, v, values, w);
        }
    }
}

}  // namespace panogs
