#include "panogs/depth_fusion.hpp"

#include "panogs/errors.hpp"

#include <Eigen/Dense>

#include <algorithm>
#include <cmath>
#include <numeric>
#include <random>
#include <sstream>

namespace panogs {

void DepthFusionConfig::validate() const
{
    if (face_res < 8) {
        throw ConfigError("depth.face_res must be >= 8");
    }
    if (n_calibration_faces < 1 || n_calibration_faces > kIcosahedronFaces) {
        throw ConfigError("depth.n_faces must lie in [1, 20]");
    }
    if (!(depth_min > 0.0 && depth_max > depth_min)) {
        throw ConfigError("depth clamps need 0 < depth_min < depth_max");
    }
    if (overlap_stride < 1) {
        throw ConfigError("depth.overlap_stride must be >= 1");
    }
    if (!(outlier_sigma >= 0.0)) {
        throw ConfigError("depth.outlier_sigma must be >= 0");
    }
}

Image FaceDisparity::aligned_disparity() const
{
    Image out = disparity;
    for (double& v : out.data()) {
        v = aligned(v);
    }
    return out;
}

std::vector<FaceDisparity> estimate_face_disparities(const std::vector<TangentFace>& faces, DepthClient& depth)
{
    std::vector<FaceDisparity> out;
    out.reserve(faces.size());
    for (const auto& face : faces) {
        ViewHint hint{face.index, face.intrinsics, face.pose};
        FaceDisparity fd;
        fd.face_index = face.index;
        fd.intrinsics = face.intrinsics;
        fd.pose = face.pose;
        try {
            fd.disparity = checked_disparity(depth, face.image, hint);
        } catch (const ContractError& e) {
            throw ContractError("face " + std::to_string(face.index) + ": " + e.what());
        } catch (const std::exception& e) {
            throw AdapterError("depth adapter failed on face " + std::to_string(face.index) + ": " + e.what());
        }
        out.push_back(std::move(fd));
    }
    return out;
}

namespace {

/// Image position of `dir` in the face when it lands at least half a pixel inside the border.
std::optional<Vec2> face_interior_point(const FaceDisparity& f, const Mat3& Rt, const Vec3& dir)
{
    const Vec3 p = Rt * dir;
    if (p.z() <= 0.0) {
        return std::nullopt;
    }
    const Vec2 xy = project_camera_point(f.intrinsics, p);
    if (xy.x() < 0.5 || xy.y() < 0.5 || xy.x() > f.intrinsics.width - 0.5 || xy.y() > f.intrinsics.height - 0.5) {
        return std::nullopt;
    }
    return xy;
}

int find_root(std::vector<int>& parent, int i)
{
    while (parent[static_cast<std::size_t>(i)] != i) {
        parent[static_cast<std::size_t>(i)] = parent[static_cast<std::size_t>(parent[static_cast<std::size_t>(i)])];
        i = parent[static_cast<std::size_t>(i)];
    }
    return i;
}

}  // namespace

std::vector<OverlapSample> collect_overlaps(const std::vector<FaceDisparity>& faces, const PanoDims& dims, int stride)
{
    std::vector<Mat3> rts;
    rts.reserve(faces.size());
    for (const auto& f : faces) {
        rts.push_back(f.pose.world_from_camera().transpose());
    }
    std::vector<OverlapSample> samples;
    std::vector<std::pair<int, double>> hits;
    for (int v = stride / 2; v < dims.height(); v += stride) {
        for (int u = stride / 2; u < dims.width(); u += stride) {
            const Vec3 dir = pixel_to_direction(u + 0.5, v + 0.5, dims);
            hits.clear();
            for (std::size_t i = 0; i < faces.size(); ++i) {
                if (const auto xy = face_interior_point(faces[i], rts[i], dir)) {
                    hits.emplace_back(static_cast<int>(i),
                                      sample_bilinear_clamped(faces[i].disparity, xy->x(), xy->y(), 0));
                }
            }
            for (std::size_t a = 0; a < hits.size(); ++a) {
                for (std::size_t b = a + 1; b < hits.size(); ++b) {
                    samples.push_back({hits[a].first, hits[b].first, hits[a].second, hits[b].second});
                }
            }
        }
    }
    return samples;
}

AlignmentReport align_faces(std::vector<FaceDisparity>& faces, std::span<const OverlapSample> overlaps,
                            std::size_t min_samples_per_face)
{
    const int n = static_cast<int>(faces.size());
    if (n < 2) {
        throw AlignmentError("align_faces needs at least two faces");
    }

    // Connectivity of the overlap graph.
    std::vector<std::size_t> per_face(static_cast<std::size_t>(n), 0);
    std::vector<int> parent(static_cast<std::size_t>(n));
    std::iota(parent.begin(), parent.end(), 0);
    for (const auto& s : overlaps) {
        if (s.face_a < 0 || s.face_b < 0 || s.face_a >= n || s.face_b >= n || s.face_a == s.face_b) {
            throw ContractError("overlap sample references an invalid face pair");
        }
        ++per_face[static_cast<std::size_t>(s.face_a)];
        ++per_face[static_cast<std::size_t>(s.face_b)];
        parent[static_cast<std::size_t>(find_root(parent, s.face_a))] = find_root(parent, s.face_b);
    }
    std::vector<std::vector<int>> components;
    {
        std::vector<int> comp_of_root(static_cast<std::size_t>(n), -1);
        for (int i = 0; i < n; ++i) {
            const int r = find_root(parent, i);
            if (comp_of_root[static_cast<std::size_t>(r)] < 0) {
                comp_of_root[static_cast<std::size_t>(r)] = static_cast<int>(components.size());
                components.emplace_back();
            }
            components[static_cast<std::size_t>(comp_of_root[static_cast<std::size_t>(r)])].push_back(i);
        }
    }
    if (components.size() > 1) {
        std::ostringstream msg;
        msg << "overlap graph is disconnected; components:";
        for (const auto& comp : components) {
            msg << " {";
            for (std::size_t k = 0; k < comp.size(); ++k) {
                msg << (k ? "," : "") << faces[static_cast<std::size_t>(comp[k])].face_index;
            }
            msg << "}";
        }
        throw AlignmentError(msg.str());
    }
    for (int i = 0; i < n; ++i) {
        if (per_face[static_cast<std::size_t>(i)] < min_samples_per_face) {
            throw AlignmentError("face " + std::to_string(faces[static_cast<std::size_t>(i)].face_index) + " has only " +
                                 std::to_string(per_face[static_cast<std::size_t>(i)]) + " overlap samples");
        }
    }

    // Unknowns: s_0..s_{n-1}, o_0..o_{n-1}; two gauge constraints.
    const int m = 2 * n;
    Eigen::MatrixXd normal = Eigen::MatrixXd::Zero(m, m);
    double rss_before = 0.0;
    for (const auto& s : overlaps) {
        const int idx[4] = {s.face_a, n + s.face_a, s.face_b, n + s.face_b};
        const double g[4] = {s.value_a, 1.0, -s.value_b, -1.0};
        for (int r = 0; r < 4; ++r) {
            for (int c = 0; c < 4; ++c) {
                normal(idx[r], idx[c]) += g[r] * g[c];
            }
        }
        const double before = faces[static_cast<std::size_t>(s.face_a)].aligned(s.value_a) -
                              faces[static_cast<std::size_t>(s.face_b)].aligned(s.value_b);
        rss_before += before * before;
    }
    Eigen::MatrixXd kkt = Eigen::MatrixXd::Zero(m + 2, m + 2);
    kkt.topLeftCorner(m, m) = 2.0 * normal;
    for (int i = 0; i < n; ++i) {
        kkt(i, m) = -1.0;
        kkt(m, i) = 1.0;
        kkt(n + i, m + 1) = -1.0;
        kkt(m + 1, n + i) = 1.0;
    }
    Eigen::VectorXd rhs = Eigen::VectorXd::Zero(m + 2);
    rhs(m) = n;  // sum of scales = n  <=>  mean(s) = 1
    rhs(m + 1) = 0.0;

    Eigen::FullPivLU<Eigen::MatrixXd> lu(kkt);
    lu.setThreshold(1e-12);
    if (lu.rank() < m + 2) {
        throw AlignmentError("alignment system is rank deficient (rank " + std::to_string(lu.rank()) + " of " +
                             std::to_string(m + 2) + ")");
    }
    const Eigen::VectorXd x = lu.solve(rhs);
    for (int i = 0; i < n; ++i) {
        faces[static_cast<std::size_t>(i)].scale = x(i);
        faces[static_cast<std::size_t>(i)].offset = x(n + i);
    }

    double rss_after = 0.0;
    for (const auto& s : overlaps) {
        const double r = faces[static_cast<std::size_t>(s.face_a)].aligned(s.value_a) -
                         faces[static_cast<std::size_t>(s.face_b)].aligned(s.value_b);
        rss_after += r * r;
    }
    AlignmentReport report;
    report.n_samples = overlaps.size();
    if (!overlaps.empty()) {
        report.residual_rms_before = std::sqrt(rss_before / static_cast<double>(overlaps.size()));
        report.residual_rms_after = std::sqrt(rss_after / static_cast<double>(overlaps.size()));
    }
    return report;
}

std::vector<std::size_t> robust_inliers(std::span<const double> residuals, double sigma)
{
    std::vector<std::size_t> keep(residuals.size());
    std::iota(keep.begin(), keep.end(), std::size_t{0});
    if (!(sigma > 0.0) || residuals.empty()) {
        return keep;
    }
    std::vector<double> abs_r(residuals.size());
    std::transform(residuals.begin(), residuals.end(), abs_r.begin(), [](double r) { return std::abs(r); });
    const auto mid = abs_r.begin() + static_cast<long>(abs_r.size() / 2);
    std::nth_element(abs_r.begin(), mid, abs_r.end());
    const double bound = sigma * 1.4826 * *mid;
    if (!(bound > 0.0)) {
        return keep;
    }
    std::erase_if(keep, [&](std::size_t i) { return std::abs(residuals[i]) > bound; });
    return keep;
}

Image frustum_blend(const std::vector<FaceDisparity>& faces, const PanoDims& dims)
{
    if (faces.empty()) {
        throw ContractError("frustum_blend needs at least one face");
    }
    ErpAccumulator acc(dims, 1);
    for (const auto& f : faces) {
        const Image weights = frustum_weights(f.intrinsics.width, f.intrinsics.height);
        tangent_to_erp_accumulate(f.aligned_disparity(), f.intrinsics, f.pose, weights, acc);
    }
    const Image& wsum = acc.weight_sum();
    for (int y = 0; y < dims.height(); ++y) {
        for (int x = 0; x < dims.width(); ++x) {
            if (!(wsum.at(x, y) > 0.0)) {
                throw PipelineError("frustum_blend: panorama pixel (" + std::to_string(x) + ", " + std::to_string(y) +
                                    ") is not covered by any face");
            }
        }
    }
    return acc.normalized();
}

CalibrationResult fit_scale_offset(std::span<const double> observed, std::span<const double> reference)
{
    if (observed.size() != reference.size()) {
        throw ContractError("fit_scale_offset: sample counts differ");
    }
    const std::size_t n = observed.size();
    if (n < 2) {
        throw CalibrationError("fit_scale_offset needs at least two samples");
    }
    // Centered sums keep the 2x2 normal equations well conditioned.
    double mx = 0.0;
    double my = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
        mx += observed[i];
        my += reference[i];
    }
    mx /= static_cast<double>(n);
    my /= static_cast<double>(n);
    double sxx = 0.0;
    double sxy = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
        const double dx = observed[i] - mx;
        sxx += dx * dx;
        sxy += dx * (reference[i] - my);
    }
    if (!(sxx > 0.0)) {
        throw CalibrationError("fit_scale_offset: observed values are constant, scale is undetermined");
    }
    CalibrationResult res;
    res.scale = sxy / sxx;
    res.offset = my - res.scale * mx;
    double rss = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
        const double r = res.scale * observed[i] + res.offset - reference[i];
        rss += r * r;
    }
    res.residual_rms = std::sqrt(rss / static_cast<double>(n));
    res.n_samples = n;
    if (!(res.scale > 0.0)) {
        throw CalibrationError("calibration produced a non-positive scale");
    }
    return res;
}

std::vector<int> calibration_subset(int n_faces, std::uint64_t seed)
{
    if (n_faces < 1 || n_faces > kIcosahedronFaces) {
        throw ConfigError("calibration subset size must lie in [1, 20]");
    }
    std::vector<int> order(kIcosahedronFaces);
    std::iota(order.begin(), order.end(), 0);
    std::mt19937_64 rng(seed);
    // Fisher-Yates with an explicit draw so the order does not depend on the library's shuffle.
    for (int i = kIcosahedronFaces - 1; i > 0; --i) {
        const auto j = static_cast<int>(rng() % static_cast<std::uint64_t>(i + 1));
        std::swap(order[static_cast<std::size_t>(i)], order[static_cast<std::size_t>(j)]);
    }
    order.resize(static_cast<std::size_t>(n_faces));
    return order;
}

MetricCalibration calibrate_metric(const Image& pano_disparity, const std::vector<TangentFace>& faces,
                                   MetricDepthClient& metric, const DepthFusionConfig& cfg)
{
    cfg.validate();
    const PanoDims dims(pano_disparity.width(), pano_disparity.height());
    MetricCalibration out;
    out.faces_used = calibration_subset(cfg.n_calibration_faces, cfg.seed);

    std::vector<double> observed;
    std::vector<double> reference;
    for (const int fi : out.faces_used) {
        const auto it = std::find_if(faces.begin(), faces.end(), [fi](const TangentFace& f) { return f.index == fi; });
        if (it == faces.end()) {
            throw ContractError("calibrate_metric: face " + std::to_string(fi) + " not provided");
        }
        Image ref_depth;
        try {
            ref_depth = checked_metric_depth(metric, it->image, ViewHint{it->index, it->intrinsics, it->pose});
        } catch (const ContractError&) {
            throw;
        } catch (const std::exception& e) {
            throw AdapterError("metric depth adapter failed on face " + std::to_string(fi) + ": " + e.what());
        }
        const Mat3 R = it->pose.world_from_camera();
        for (int y = 0; y < it->intrinsics.height; ++y) {
            for (int x = 0; x < it->intrinsics.width; ++x) {
                const double d = ref_depth.at(x, y);
                if (!(d > 0.0)) {
                    continue;
                }
                const Vec2 uv = direction_to_pixel(R * camera_ray(it->intrinsics, x + 0.5, y + 0.5), dims);
                observed.push_back(sample_erp(pano_disparity, uv.x(), uv.y(), 0));
                reference.push_back(1.0 / d);
            }
        }
    }
    out.fit = fit_scale_offset(observed, reference);
    if (cfg.outlier_sigma > 0.0) {
        std::vector<double> residuals(observed.size());
        for (std::size_t i = 0; i < observed.size(); ++i) {
            residuals[i] = out.fit.scale * observed[i] + out.fit.offset - reference[i];
        }
        const auto keep = robust_inliers(residuals, cfg.outlier_sigma);
        if (keep.size() < observed.size() && keep.size() >= 2) {
            std::vector<double> obs_in, ref_in;
            for (const std::size_t i : keep) {
                obs_in.push_back(observed[i]);
                ref_in.push_back(reference[i]);
            }
            out.fit = fit_scale_offset(obs_in, ref_in);
        }
    }

    out.depth = Image(dims.width(), dims.height(), 1);
    std::size_t non_positive = 0;
    for (int y = 0; y < dims.height(); ++y) {
        for (int x = 0; x < dims.width(); ++x) {
            const double disp = out.fit.scale * pano_disparity.at(x, y) + out.fit.offset;
            if (disp <= 0.0) {
                ++non_positive;
                out.depth.at(x, y) = cfg.depth_max;
                continue;
            }
            out.depth.at(x, y) = std::clamp(1.0 / disp, cfg.depth_min, cfg.depth_max);
        }
    }
    if (static_cast<double>(non_positive) > 0.01 * static_cast<double>(dims.pixel_count())) {
        throw CalibrationError("calibrated disparity is non-positive on " + std::to_string(non_positive) + " of " +
                               std::to_string(dims.pixel_count()) + " pixels");
    }
    return out;
}

Image disparity_to_depth(const Image& disparity)
{
    Image out = disparity;
    for (double& v : out.data()) {
        if (!(v > 0.0)) {
            throw DomainError("disparity_to_depth: non-positive disparity");
        }
        v = 1.0 / v;
    }
    return out;
}

Image depth_to_disparity(const Image& depth)
{
    Image out = depth;
    for (double& v : out.data()) {
        if (!(v > 0.0)) {
            throw DomainError("depth_to_disparity: non-positive depth");
        }
        v = 1.0 / v;
    }
    return out;
}

DepthFusionResult estimate_panorama_depth(const Panorama& pano, DepthClient& depth, MetricDepthClient& metric,
                                          const DepthFusionConfig& cfg)
{
    cfg.validate();
    const auto tangent = icosahedron_tangent_project(pano, cfg.face_res, cfg.fov_margin_deg);
    DepthFusionResult res;
    res.faces = estimate_face_disparities(tangent, depth);
    const auto overlaps = collect_overlaps(res.faces, pano.dims, cfg.overlap_stride);
    res.alignment = align_faces(res.faces, overlaps, cfg.min_overlap_samples);
    if (cfg.outlier_sigma > 0.0) {
        // Refit without pairs that straddle occlusion edges.
        std::vector<double> residuals(overlaps.size());
        for (std::size_t i = 0; i < overlaps.size(); ++i) {
            const auto& o = overlaps[i];
            residuals[i] = res.faces[static_cast<std::size_t>(o.face_a)].aligned(o.value_a) -
                           res.faces[static_cast<std::size_t>(o.face_b)].aligned(o.value_b);
        }
        const auto keep = robust_inliers(residuals, cfg.outlier_sigma);
        if (keep.size() < overlaps.size()) {
            std::vector<OverlapSample> inliers;
            inliers.reserve(keep.size());
            for (const std::size_t i : keep) {
                inliers.push_back(overlaps[i]);
            }
            const double before = res.alignment.residual_rms_before;
            for (auto& f : res.faces) {
                f.scale = 1.0;
                f.offset = 0.0;
            }
            res.alignment = align_faces(res.faces, inliers, cfg.min_overlap_samples);
            res.alignment.residual_rms_before = before;
        }
    }
    res.disparity = frustum_blend(res.faces, pano.dims);
    res.calibration = calibrate_metric(res.disparity, tangent, metric, cfg);
    return res;
}

}  // namespace panogs
