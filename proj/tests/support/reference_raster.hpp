#pragma once

// Brute-force splatting evaluator: every pixel visits every Gaussian, contributions are
// sorted exactly by (camera depth, index). Shares no code with the tiled renderer.

#include "panogs/gaussian_field.hpp"

#include <algorithm>
#include <cmath>
#include <random>
#include <vector>

namespace oracle {

struct ReferenceImage {
    std::vector<double> rgb;    // interleaved, width * height * 3
    std::vector<double> alpha;  // width * height
};

inline double sh_color(const panogs::GaussianField& f, std::size_t i, const panogs::Vec3& d, int ch)
{
    const double x = d.x(), y = d.y(), z = d.z();
    std::vector<double> b = {0.28209479177387814};
    if (f.sh_degree() >= 1) {
        const double c1 = 0.4886025119029199;
        b.insert(b.end(), {-c1 * y, c1 * z, -c1 * x});
    }
    if (f.sh_degree() >= 2) {
        b.insert(b.end(), {1.0925484305920792 * x * y, -1.0925484305920792 * y * z,
                           0.31539156525252005 * (2 * z * z - x * x - y * y), -1.0925484305920792 * x * z,
                           0.5462742152960396 * (x * x - y * y)});
    }
    if (f.sh_degree() >= 3) {
        b.insert(b.end(), {-0.5900435899266435 * y * (3 * x * x - y * y), 2.890611442640554 * x * y * z,
                           -0.4570457994644658 * y * (4 * z * z - x * x - y * y),
                           0.3731763325901154 * z * (2 * z * z - 3 * x * x - 3 * y * y),
                           -0.4570457994644658 * x * (4 * z * z - x * x - y * y),
                           1.445305721320277 * z * (x * x - y * y), -0.5900435899266435 * x * (x * x - 3 * y * y)});
    }
    const auto rw = static_cast<std::size_t>(f.sh_rest_width());
    double v = b[0] * f.params.sh_dc[3 * i + ch];
    for (std::size_t k = 1; k < b.size(); ++k) {
        v += b[k] * f.params.sh_rest[i * rw + (k - 1) * 3 + ch];
    }
    return std::max(0.0, v + 0.5);
}

/// Rotation matrix from (w, x, y, z), normalized first.
inline Eigen::Matrix3d quat_matrix(const double* q_raw)
{
    const double n = std::sqrt(q_raw[0] * q_raw[0] + q_raw[1] * q_raw[1] + q_raw[2] * q_raw[2] + q_raw[3] * q_raw[3]);
    const double w = q_raw[0] / n, x = q_raw[1] / n, y = q_raw[2] / n, z = q_raw[3] / n;
    Eigen::Matrix3d R;
    R << 1 - 2 * (y * y + z * z), 2 * (x * y - w * z), 2 * (x * z + w * y), 2 * (x * y + w * z),
        1 - 2 * (x * x + z * z), 2 * (y * z - w * x), 2 * (x * z - w * y), 2 * (y * z + w * x),
        1 - 2 * (x * x + y * y);
    return R;
}

inline ReferenceImage reference_render(const panogs::GaussianField& f, const panogs::Intrinsics& K,
                                       const panogs::Pose& pose, double z_near = 0.01, double dilation = 0.3)
{
    struct Splat {
        double depth;
        std::size_t index;
        double u, v, ia, ib, ic, opacity;
        double color[3];
    };
    const Eigen::Matrix3d W = pose.rotation.toRotationMatrix().transpose();
    std::vector<Splat> splats;
    for (std::size_t i = 0; i < f.size(); ++i) {
        const Eigen::Vector3d mu(f.params.position[3 * i], f.params.position[3 * i + 1], f.params.position[3 * i + 2]);
        const Eigen::Vector3d t = W * (mu - pose.position);
        if (t.z() <= z_near) {
            continue;
        }
        const double limx = 1.3 * 0.5 * K.width / K.fx;
        const double limy = 1.3 * 0.5 * K.height / K.fy;
        const double tx = std::clamp(t.x() / t.z(), -limx, limx) * t.z();
        const double ty = std::clamp(t.y() / t.z(), -limy, limy) * t.z();
        Eigen::Matrix<double, 2, 3> J;
        J << K.fx / t.z(), 0, -K.fx * tx / (t.z() * t.z()), 0, -K.fy / t.z(), K.fy * ty / (t.z() * t.z());
        Eigen::Matrix3d S = Eigen::Matrix3d::Zero();
        for (int k = 0; k < 3; ++k) {
            S(k, k) = std::exp(f.params.log_scale[3 * i + k]);
        }
        const Eigen::Matrix3d R = quat_matrix(&f.params.rotation[4 * i]);
        const Eigen::Matrix3d cov3 = R * S * S * R.transpose();
        Eigen::Matrix2d cov2 = J * W * cov3 * W.transpose() * J.transpose();
        cov2(0, 0) += dilation;
        cov2(1, 1) += dilation;
        if (cov2.determinant() < 1e-12) {
            cov2 += 1e-6 * Eigen::Matrix2d::Identity();
        }
        const Eigen::Matrix2d inv = cov2.inverse();
        Splat s{t.z(), i, K.cx + K.fx * t.x() / t.z(), K.cy - K.fy * t.y() / t.z(), inv(0, 0), inv(0, 1), inv(1, 1),
                1.0 / (1.0 + std::exp(-f.params.opacity_logit[i])), {}};
        const Eigen::Vector3d dir = (mu - pose.position).normalized();
        for (int ch = 0; ch < 3; ++ch) {
            s.color[ch] = sh_color(f, i, dir, ch);
        }
        splats.push_back(s);
    }
    std::sort(splats.begin(), splats.end(), [](const Splat& a, const Splat& b) {
        return a.depth != b.depth ? a.depth < b.depth : a.index < b.index;
    });
    ReferenceImage out{std::vector<double>(static_cast<std::size_t>(K.width) * K.height * 3, 0.0),
                       std::vector<double>(static_cast<std::size_t>(K.width) * K.height, 0.0)};
    for (int y = 0; y < K.height; ++y) {
        for (int x = 0; x < K.width; ++x) {
            double T = 1.0;
            double c[3] = {0, 0, 0};
            for (const auto& s : splats) {
                const double dx = x + 0.5 - s.u;
                const double dy = y + 0.5 - s.v;
                const double a = std::min(0.999, s.opacity * std::exp(-0.5 * (s.ia * dx * dx + 2 * s.ib * dx * dy +
                                                                               s.ic * dy * dy)));
                if (a < 1.0 / 255.0) {
                    continue;
                }
                if (T * (1 - a) < 1e-4) {
                    break;
                }
                for (int ch = 0; ch < 3; ++ch) {
                    c[ch] += s.color[ch] * a * T;
                }
                T *= 1 - a;
            }
            const std::size_t p = static_cast<std::size_t>(y) * K.width + x;
            for (int ch = 0; ch < 3; ++ch) {
                out.rgb[p * 3 + ch] = c[ch] + T * f.background[ch];
            }
            out.alpha[p] = 1.0 - T;
        }
    }
    return out;
}

/// Up to `n` random Gaussians in front of an identity camera at the origin.
inline panogs::GaussianField random_scene(int n, int sh_degree, std::uint64_t seed)
{
    std::mt19937_64 rng(seed);
    std::uniform_real_distribution<double> U(-1.0, 1.0);
    panogs::GaussianField f(sh_degree);
    for (int i = 0; i < n; ++i) {
        const panogs::Vec3 pos(0.6 * U(rng), 0.6 * U(rng), 3.0 + U(rng));
        const panogs::Vec3 ls(std::log(0.15 + 0.1 * U(rng)), std::log(0.15 + 0.1 * U(rng)), std::log(0.15 + 0.1 * U(rng)));
        const panogs::Quat q = panogs::Quat(U(rng), U(rng), U(rng), U(rng) + 1.5).normalized();
        f.push_back(pos, ls, q, 0.8 * U(rng), panogs::Vec3(U(rng), U(rng), U(rng)));
        for (int k = 0; k < f.sh_rest_width(); ++k) {
            f.params.sh_rest[static_cast<std::size_t>(i * f.sh_rest_width() + k)] = 0.3 * U(rng);
        }
    }
    return f;
}

}  // namespace oracle
