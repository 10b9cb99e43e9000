#include "panogs/errors.hpp"
#include "panogs/gaussian_field.hpp"
#include "panogs/parallel.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

namespace panogs {

namespace {

constexpr double kMinAlpha = 1.0 / 255.0;
constexpr double kMaxAlpha = 0.999;
constexpr double kMinTransmittance = 1e-4;
constexpr double kJacobianClamp = 1.3;

struct Camera {
    Mat3 cam_from_world;
    Vec3 origin;
    Intrinsics K;
    double lim_x;
    double lim_y;

    Camera(const Intrinsics& k, const Pose& pose)
        : cam_from_world(pose.world_from_camera().transpose()), origin(pose.position), K(k),
          lim_x(kJacobianClamp * 0.5 * k.width / k.fx), lim_y(kJacobianClamp * 0.5 * k.height / k.fy)
    {
    }
};

/// Everything the backward pass re-derives for one Gaussian.
struct Intermediates {
    Vec3 p_cam;
    double mx, my;
    bool clamp_x, clamp_y;
    Eigen::Matrix<double, 2, 3> J;
    Eigen::Matrix<double, 2, 3> T;
    Mat3 rot;
    Vec3 scale;
    Mat3 M;
    Mat3 cov3;
    Vec3 view_dir;
    double view_dist;
    double basis[16];
    Vec3 basis_grad[16];
};

bool project_gaussian(const GaussianField& field, std::size_t i, const Camera& cam, const RasterSettings& settings,
                      ProjectedGaussian& out, Intermediates& im)
{
    out = ProjectedGaussian{};
    const Vec3 mu = field.position(i);
    im.p_cam = cam.cam_from_world * (mu - cam.origin);
    const double z = im.p_cam.z();
    if (z <= settings.z_near) {
        return false;
    }
    const auto& K = cam.K;
    im.mx = im.p_cam.x() / z;
    im.my = im.p_cam.y() / z;
    out.u = K.cx + K.fx * im.mx;
    out.v = K.cy - K.fy * im.my;
    out.depth = z;

    im.clamp_x = std::abs(im.mx) > cam.lim_x;
    im.clamp_y = std::abs(im.my) > cam.lim_y;
    const double cmx = std::clamp(im.mx, -cam.lim_x, cam.lim_x);
    const double cmy = std::clamp(im.my, -cam.lim_y, cam.lim_y);
    im.J << K.fx / z, 0.0, -K.fx * cmx / z, 0.0, -K.fy / z, K.fy * cmy / z;

    const double* q = &field.params.rotation[4 * i];
    im.rot = Quat(q[0], q[1], q[2], q[3]).normalized().toRotationMatrix();
    im.scale = field.scale(i);
    im.M = im.rot * im.scale.asDiagonal();
    im.cov3 = im.M * im.M.transpose();
    im.T = im.J * cam.cam_from_world;
    const Eigen::Matrix2d cov2 = im.T * im.cov3 * im.T.transpose();

    double a = cov2(0, 0) + settings.screen_dilation;
    double b = cov2(0, 1);
    double c = cov2(1, 1) + settings.screen_dilation;
    double det = a * c - b * b;
    if (det < 1e-12) {
        a += 1e-6;
        c += 1e-6;
        det = a * c - b * b;
        if (!(det > 0.0)) {
            return false;
        }
    }
    out.cov[0] = a;
    out.cov[1] = b;
    out.cov[2] = c;
    out.conic[0] = c / det;
    out.conic[1] = -b / det;
    out.conic[2] = a / det;

    out.opacity = field.opacity(i);
    if (out.opacity < kMinAlpha) {
        return false;
    }

    const Vec3 offset = mu - cam.origin;
    im.view_dist = offset.norm();
    im.view_dir = im.view_dist > 0.0 ? Vec3(offset / im.view_dist) : Vec3(Vec3::UnitZ());
    const int coeffs = sh_coefficient_count(field.sh_degree());
    sh_basis(field.sh_degree(), im.view_dir, im.basis, im.basis_grad);
    const auto rw = static_cast<std::size_t>(field.sh_rest_width());
    for (int ch = 0; ch < 3; ++ch) {
        double raw = im.basis[0] * field.params.sh_dc[3 * i + ch] + 0.5;
        for (int k = 1; k < coeffs; ++k) {
            raw += im.basis[k] * field.params.sh_rest[i * rw + static_cast<std::size_t>((k - 1) * 3 + ch)];
        }
        out.color_clamped[ch] = raw < 0.0;
        out.color[ch] = std::max(0.0, raw);
    }
    out.visible = true;
    return true;
}

/// Pixel index range whose centers can receive alpha >= 1/255 from `g`, padded by one pixel.
bool pixel_bounds(const ProjectedGaussian& g, int width, int height, int bounds[4])
{
    const double r2 = 2.0 * std::log(255.0 * g.opacity);
    const double ex = std::sqrt(std::max(0.0, r2 * g.cov[0]));
    const double ey = std::sqrt(std::max(0.0, r2 * g.cov[2]));
    bounds[0] = std::max(0, static_cast<int>(std::ceil(g.u - ex - 0.5)) - 1);
    bounds[1] = std::min(width - 1, static_cast<int>(std::floor(g.u + ex - 0.5)) + 1);
    bounds[2] = std::max(0, static_cast<int>(std::ceil(g.v - ey - 0.5)) - 1);
    bounds[3] = std::min(height - 1, static_cast<int>(std::floor(g.v + ey - 0.5)) + 1);
    return bounds[0] <= bounds[1] && bounds[2] <= bounds[3];
}

void build_tiles(RasterState& state, int width, int height, int tile)
{
    state.tiles_x = (width + tile - 1) / tile;
    state.tiles_y = (height + tile - 1) / tile;
    const auto n_tiles = static_cast<std::size_t>(state.tiles_x) * state.tiles_y;
    const auto& proj = state.projected;

    std::vector<std::uint32_t> order;
    std::vector<std::array<int, 4>> tile_rect(proj.size());
    for (std::size_t i = 0; i < proj.size(); ++i) {
        int px[4];
        if (proj[i].visible && pixel_bounds(proj[i], width, height, px)) {
            tile_rect[i] = {px[0] / tile, px[1] / tile, px[2] / tile, px[3] / tile};
            order.push_back(static_cast<std::uint32_t>(i));
        }
    }
    std::stable_sort(order.begin(), order.end(),
                     [&](std::uint32_t a, std::uint32_t b) { return proj[a].depth < proj[b].depth; });

    std::vector<std::uint32_t> counts(n_tiles + 1, 0);
    for (const auto i : order) {
        const auto& r = tile_rect[i];
        for (int ty = r[2]; ty <= r[3]; ++ty) {
            for (int tx = r[0]; tx <= r[1]; ++tx) {
                ++counts[static_cast<std::size_t>(ty) * state.tiles_x + tx + 1];
            }
        }
    }
    std::partial_sum(counts.begin(), counts.end(), counts.begin());
    state.tile_offsets = counts;
    state.tile_entries.assign(counts.back(), 0);
    std::vector<std::uint32_t> cursor(counts.begin(), counts.end() - 1);
    for (const auto i : order) {
        const auto& r = tile_rect[i];
        for (int ty = r[2]; ty <= r[3]; ++ty) {
            for (int tx = r[0]; tx <= r[1]; ++tx) {
                state.tile_entries[cursor[static_cast<std::size_t>(ty) * state.tiles_x + tx]++] = i;
            }
        }
    }
}

struct Contribution {
    std::uint32_t entry;  // position in tile_entries
    double alpha;
    double transmittance;  // before this Gaussian
    double dx, dy;
    bool saturated;
};

/// Front-to-back compositing of one pixel; returns the final transmittance.
template <typename Visit>
double composite_pixel(const RasterState& state, std::size_t tile_index, double px, double py, Visit&& visit)
{
    double T = 1.0;
    for (std::uint32_t e = state.tile_offsets[tile_index]; e < state.tile_offsets[tile_index + 1]; ++e) {
        const auto& g = state.projected[state.tile_entries[e]];
        const double dx = px - g.u;
        const double dy = py - g.v;
        const double power = -0.5 * (g.conic[0] * dx * dx + g.conic[2] * dy * dy) - g.conic[1] * dx * dy;
        const double raw = g.opacity * std::exp(power);
        const double alpha = std::min(kMaxAlpha, raw);
        if (alpha < kMinAlpha) {
            continue;
        }
        const double next = T * (1.0 - alpha);
        if (next < kMinTransmittance) {
            break;
        }
        visit(Contribution{e, alpha, T, dx, dy, raw > kMaxAlpha}, g);
        T = next;
    }
    return T;
}

}  // namespace

RenderResult rasterize(const GaussianField& field, const Intrinsics& K, const Pose& pose, const RasterSettings& settings)
{
    K.validate();
    if (settings.tile_size < 1) {
        throw ConfigError("tile_size must be positive");
    }
    const Camera cam(K, pose);
    RenderResult result{Image(K.width, K.height, 3), Image(K.width, K.height, 1), {}};
    auto& state = result.state;
    state.projected.resize(field.size());
    parallel_for(
        field.size(),
        [&](std::size_t i) {
            Intermediates im;
            project_gaussian(field, i, cam, settings, state.projected[i], im);
        },
        settings.threads);
    build_tiles(state, K.width, K.height, settings.tile_size);

    const int tile = settings.tile_size;
    const Vec3 bg = field.background;
    parallel_for(
        static_cast<std::size_t>(state.tiles_x) * state.tiles_y,
        [&](std::size_t t) {
            const int tx = static_cast<int>(t % state.tiles_x);
            const int ty = static_cast<int>(t / state.tiles_x);
            for (int y = ty * tile; y < std::min(K.height, (ty + 1) * tile); ++y) {
                for (int x = tx * tile; x < std::min(K.width, (tx + 1) * tile); ++x) {
                    double rgb[3] = {0, 0, 0};
                    const double T = composite_pixel(state, t, x + 0.5, y + 0.5,
                                                     [&](const Contribution& c, const ProjectedGaussian& g) {
                                                         const double w = c.alpha * c.transmittance;
                                                         rgb[0] += g.color[0] * w;
                                                         rgb[1] += g.color[1] * w;
                                                         rgb[2] += g.color[2] * w;
                                                     });
                    for (int ch = 0; ch < 3; ++ch) {
                        result.rgb.at(x, y, ch) = rgb[ch] + T * bg[ch];
                    }
                    result.alpha.at(x, y) = 1.0 - T;
                }
            }
        },
        settings.threads);
    return result;
}

RasterGradients rasterize_backward(const GaussianField& field, const Intrinsics& K, const Pose& pose,
                                   const RenderResult& forward, const Image& rgb_grad, const RasterSettings& settings)
{
    if (rgb_grad.width() != K.width || rgb_grad.height() != K.height || rgb_grad.channels() != 3) {
        throw ContractError("rasterize_backward: gradient image does not match the camera");
    }
    const auto& state = forward.state;
    if (state.projected.size() != field.size()) {
        throw ContractError("rasterize_backward: forward pass was recorded for a different field");
    }
    const Camera cam(K, pose);
    const int tile = settings.tile_size;
    const Vec3 bg = field.background;

    // Slot layout per tile entry: mean u, v; conic a, b, c; color r, g, b; opacity.
    constexpr int kSlots = 9;
    std::vector<double> slots(state.tile_entries.size() * kSlots, 0.0);
    parallel_for(
        static_cast<std::size_t>(state.tiles_x) * state.tiles_y,
        [&](std::size_t t) {
            const int tx = static_cast<int>(t % state.tiles_x);
            const int ty = static_cast<int>(t / state.tiles_x);
            std::vector<Contribution> stack;
            for (int y = ty * tile; y < std::min(K.height, (ty + 1) * tile); ++y) {
                for (int x = tx * tile; x < std::min(K.width, (tx + 1) * tile); ++x) {
                    const Vec3 G(rgb_grad.at(x, y, 0), rgb_grad.at(x, y, 1), rgb_grad.at(x, y, 2));
                    if (G.isZero(0.0)) {
                        continue;
                    }
                    stack.clear();
                    const double T_final = composite_pixel(
                        state, t, x + 0.5, y + 0.5,
                        [&](const Contribution& c, const ProjectedGaussian&) { stack.push_back(c); });
                    Vec3 behind = T_final * bg;  // color composited after the current Gaussian
                    for (auto it = stack.rbegin(); it != stack.rend(); ++it) {
                        const auto& g = state.projected[state.tile_entries[it->entry]];
                        const Vec3 color(g.color[0], g.color[1], g.color[2]);
                        const double w = it->alpha * it->transmittance;
                        double* s = &slots[static_cast<std::size_t>(it->entry) * kSlots];
                        s[5] += w * G[0];
                        s[6] += w * G[1];
                        s[7] += w * G[2];
                        const double d_alpha = it->transmittance * color.dot(G) - behind.dot(G) / (1.0 - it->alpha);
                        behind += color * w;
                        if (it->saturated) {
                            continue;
                        }
                        const double d_power = d_alpha * it->alpha;
                        const double dx = it->dx;
                        const double dy = it->dy;
                        s[0] += d_power * (g.conic[0] * dx + g.conic[1] * dy);
                        s[1] += d_power * (g.conic[1] * dx + g.conic[2] * dy);
                        s[2] += -0.5 * dx * dx * d_power;
                        s[3] += -dx * dy * d_power;
                        s[4] += -0.5 * dy * dy * d_power;
                        s[8] += d_alpha * it->alpha / g.opacity;
                    }
                }
            }
        },
        settings.threads);

    std::vector<double> per_gaussian(field.size() * kSlots, 0.0);
    for (std::size_t e = 0; e < state.tile_entries.size(); ++e) {
        double* dst = &per_gaussian[static_cast<std::size_t>(state.tile_entries[e]) * kSlots];
        const double* src = &slots[e * kSlots];
        for (int k = 0; k < kSlots; ++k) {
            dst[k] += src[k];
        }
    }

    RasterGradients out;
    const int rw = field.sh_rest_width();
    out.params.resize_zero(field.size(), rw);
    out.screen_grad_norm.assign(field.size(), 0.0);
    out.visible.assign(field.size(), 0);
    const int coeffs = sh_coefficient_count(field.sh_degree());

    parallel_for(
        field.size(),
        [&](std::size_t i) {
            const auto& g = state.projected[i];
            if (!g.visible) {
                return;
            }
            out.visible[i] = 1;
            const double* s = &per_gaussian[i * kSlots];
            const auto& Kc = cam.K;
            out.screen_grad_norm[i] = std::hypot(s[0] * 0.5 * Kc.width, s[1] * 0.5 * Kc.height);

            ProjectedGaussian again;
            Intermediates im;
            project_gaussian(field, i, cam, settings, again, im);

            // Opacity.
            out.params.opacity_logit[i] = s[8] * g.opacity * (1.0 - g.opacity);

            // Color through SH.
            Vec3 d_dir = Vec3::Zero();
            const auto rws = static_cast<std::size_t>(rw);
            for (int ch = 0; ch < 3; ++ch) {
                const double d_raw = g.color_clamped[ch] ? 0.0 : s[5 + ch];
                if (d_raw == 0.0) {
                    continue;
                }
                out.params.sh_dc[3 * i + ch] = im.basis[0] * d_raw;
                for (int k = 1; k < coeffs; ++k) {
                    const std::size_t idx = i * rws + static_cast<std::size_t>((k - 1) * 3 + ch);
                    out.params.sh_rest[idx] = im.basis[k] * d_raw;
                    d_dir += field.params.sh_rest[idx] * d_raw * im.basis_grad[k];
                }
            }
            Vec3 d_mu = Vec3::Zero();
            if (im.view_dist > 0.0) {
                d_mu += (d_dir - im.view_dir * im.view_dir.dot(d_dir)) / im.view_dist;
            }

            // Conic -> 2D covariance -> (3D covariance, projection).
            Eigen::Matrix2d Q;
            Q << g.conic[0], g.conic[1], g.conic[1], g.conic[2];
            Eigen::Matrix2d dQ;
            dQ << s[2], 0.5 * s[3], 0.5 * s[3], s[4];
            const Eigen::Matrix2d d_cov2 = -Q * dQ * Q;
            const Mat3 d_cov3 = im.T.transpose() * d_cov2 * im.T;
            const Eigen::Matrix<double, 2, 3> d_T = 2.0 * d_cov2 * im.T * im.cov3;
            const Eigen::Matrix<double, 2, 3> d_J = d_T * cam.cam_from_world.transpose();

            const double x = im.p_cam.x();
            const double y = im.p_cam.y();
            const double z = im.p_cam.z();
            const double cmx = std::clamp(im.mx, -cam.lim_x, cam.lim_x);
            const double cmy = std::clamp(im.my, -cam.lim_y, cam.lim_y);
            const double dcmx_dx = im.clamp_x ? 0.0 : 1.0 / z;
            const double dcmx_dz = im.clamp_x ? 0.0 : -x / (z * z);
            const double dcmy_dy = im.clamp_y ? 0.0 : 1.0 / z;
            const double dcmy_dz = im.clamp_y ? 0.0 : -y / (z * z);
            Vec3 d_pc = Vec3::Zero();
            d_pc.z() += d_J(0, 0) * (-Kc.fx / (z * z));
            d_pc.z() += d_J(0, 2) * (Kc.fx * cmx / (z * z) - Kc.fx / z * dcmx_dz);
            d_pc.x() += d_J(0, 2) * (-Kc.fx / z * dcmx_dx);
            d_pc.z() += d_J(1, 1) * (Kc.fy / (z * z));
            d_pc.z() += d_J(1, 2) * (-Kc.fy * cmy / (z * z) + Kc.fy / z * dcmy_dz);
            d_pc.y() += d_J(1, 2) * (Kc.fy / z * dcmy_dy);
            // Mean projection.
            d_pc.x() += s[0] * Kc.fx / z;
            d_pc.z() += s[0] * (-Kc.fx * x / (z * z));
            d_pc.y() += s[1] * (-Kc.fy / z);
            d_pc.z() += s[1] * (Kc.fy * y / (z * z));
            d_mu += cam.cam_from_world.transpose() * d_pc;
            for (int k = 0; k < 3; ++k) {
                out.params.position[3 * i + k] = d_mu[k];
            }

            // 3D covariance -> scale and rotation.
            const Mat3 d_M = 2.0 * d_cov3 * im.M;
            const Mat3 rt_dM = im.rot.transpose() * d_M;
            for (int k = 0; k < 3; ++k) {
                out.params.log_scale[3 * i + k] = rt_dM(k, k) * im.scale[k];
            }
            const Mat3 d_R = d_M * im.scale.asDiagonal();
            const double* qr = &field.params.rotation[4 * i];
            const double qn = std::sqrt(qr[0] * qr[0] + qr[1] * qr[1] + qr[2] * qr[2] + qr[3] * qr[3]);
            const double w = qr[0] / qn;
            const double qx = qr[1] / qn;
            const double qy = qr[2] / qn;
            const double qz = qr[3] / qn;
            const auto& D = d_R;
            Eigen::Vector4d d_qhat;
            d_qhat[0] = 2 * (-qz * D(0, 1) + qy * D(0, 2) + qz * D(1, 0) - qx * D(1, 2) - qy * D(2, 0) + qx * D(2, 1));
            d_qhat[1] = 2 * (qy * D(0, 1) + qz * D(0, 2) + qy * D(1, 0) - 2 * qx * D(1, 1) - w * D(1, 2) +
                             qz * D(2, 0) + w * D(2, 1) - 2 * qx * D(2, 2));
            d_qhat[2] = 2 * (-2 * qy * D(0, 0) + qx * D(0, 1) + w * D(0, 2) + qx * D(1, 0) + qz * D(1, 2) -
                             w * D(2, 0) + qz * D(2, 1) - 2 * qy * D(2, 2));
            d_qhat[3] = 2 * (-2 * qz * D(0, 0) - w * D(0, 1) + qx * D(0, 2) + w * D(1, 0) - 2 * qz * D(1, 1) +
                             qy * D(1, 2) + qx * D(2, 0) + qy * D(2, 1));
            const Eigen::Vector4d qhat(w, qx, qy, qz);
            const Eigen::Vector4d d_q = (d_qhat - qhat * qhat.dot(d_qhat)) / qn;
            for (int k = 0; k < 4; ++k) {
                out.params.rotation[4 * i + k] = d_q[k];
            }
        },
        settings.threads);
    return out;
}

}  // namespace panogs
