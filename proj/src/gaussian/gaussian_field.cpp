#include "panogs/gaussian_field.hpp"

#include "panogs/errors.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <string>
#include <unordered_map>

namespace panogs {

namespace {

constexpr double kMinLogScale = -13.81;  // exp > 1e-6
constexpr double kMaxLogScale = 6.90;    // exp < 1e3
constexpr double kMaxOpacityLogit = 15.0;

}  // namespace

std::vector<double>& GaussianParams::group(Group g)
{
    switch (g) {
    case Group::position:
        return position;
    case Group::log_scale:
        return log_scale;
    case Group::rotation:
        return rotation;
    case Group::opacity:
        return opacity_logit;
    case Group::sh_dc:
        return sh_dc;
    case Group::sh_rest:
        return sh_rest;
    }
    return position;
}

const std::vector<double>& GaussianParams::group(Group g) const
{
    return const_cast<GaussianParams*>(this)->group(g);
}

int GaussianParams::width(Group g, int rest_width)
{
    switch (g) {
    case Group::position:
    case Group::log_scale:
    case Group::sh_dc:
        return 3;
    case Group::rotation:
        return 4;
    case Group::opacity:
        return 1;
    case Group::sh_rest:
        return rest_width;
    }
    return 0;
}

void GaussianParams::resize_zero(std::size_t n, int rest_width)
{
    for (auto g : kGroups) {
        group(g).assign(n * static_cast<std::size_t>(width(g, rest_width)), 0.0);
    }
}

GaussianParams GaussianParams::gather(const GaussianParams& src, const std::vector<int>& rows, int rest_width)
{
    GaussianParams out;
    for (auto g : kGroups) {
        const auto w = static_cast<std::size_t>(width(g, rest_width));
        const auto& from = src.group(g);
        auto& to = out.group(g);
        to.assign(rows.size() * w, 0.0);
        for (std::size_t r = 0; r < rows.size(); ++r) {
            if (rows[r] >= 0) {
                std::copy_n(from.begin() + static_cast<std::ptrdiff_t>(rows[r] * w), w,
                            to.begin() + static_cast<std::ptrdiff_t>(r * w));
            }
        }
    }
    return out;
}

int sh_coefficient_count(int degree)
{
    return (degree + 1) * (degree + 1);
}

double sigmoid(double x)
{
    return 1.0 / (1.0 + std::exp(-x));
}

double logit(double p)
{
    return std::log(p / (1.0 - p));
}

GaussianField::GaussianField(int sh_degree) : degree_(sh_degree)
{
    if (sh_degree < 0 || sh_degree > 3) {
        throw ConfigError("sh_degree must lie in [0, 3]");
    }
}

Vec3 GaussianField::position(std::size_t i) const
{
    return {params.position[3 * i], params.position[3 * i + 1], params.position[3 * i + 2]};
}

Vec3 GaussianField::scale(std::size_t i) const
{
    return {std::exp(params.log_scale[3 * i]), std::exp(params.log_scale[3 * i + 1]),
            std::exp(params.log_scale[3 * i + 2])};
}

Quat GaussianField::rotation(std::size_t i) const
{
    const double* q = &params.rotation[4 * i];
    return Quat(q[0], q[1], q[2], q[3]).normalized();
}

double GaussianField::opacity(std::size_t i) const
{
    return sigmoid(params.opacity_logit[i]);
}

void GaussianField::push_back(const Vec3& position, const Vec3& log_scale, const Quat& rotation, double opacity_logit,
                              const Vec3& sh_dc)
{
    for (int k = 0; k < 3; ++k) {
        params.position.push_back(position[k]);
        params.log_scale.push_back(log_scale[k]);
        params.sh_dc.push_back(sh_dc[k]);
    }
    params.rotation.insert(params.rotation.end(), {rotation.w(), rotation.x(), rotation.y(), rotation.z()});
    params.opacity_logit.push_back(opacity_logit);
    params.sh_rest.insert(params.sh_rest.end(), static_cast<std::size_t>(sh_rest_width()), 0.0);
}

void GaussianField::project_to_valid()
{
    for (auto& s : params.log_scale) {
        s = std::clamp(s, kMinLogScale, kMaxLogScale);
    }
    for (auto& o : params.opacity_logit) {
        o = std::clamp(o, -kMaxOpacityLogit, kMaxOpacityLogit);
    }
    for (std::size_t i = 0; i < size(); ++i) {
        double* q = &params.rotation[4 * i];
        const double n = std::sqrt(q[0] * q[0] + q[1] * q[1] + q[2] * q[2] + q[3] * q[3]);
        if (n < 1e-12) {
            q[0] = 1.0;
            q[1] = q[2] = q[3] = 0.0;
        } else {
            for (int k = 0; k < 4; ++k) {
                q[k] /= n;
            }
        }
    }
}

void GaussianField::validate() const
{
    const std::size_t n = size();
    const auto rw = static_cast<std::size_t>(sh_rest_width());
    if (params.position.size() != 3 * n || params.log_scale.size() != 3 * n || params.rotation.size() != 4 * n ||
        params.sh_dc.size() != 3 * n || params.sh_rest.size() != rw * n) {
        throw ContractError("Gaussian parameter arrays disagree on the Gaussian count");
    }
    for (std::size_t i = 0; i < n; ++i) {
        const auto fail = [i](const std::string& what) {
            throw DomainError("Gaussian " + std::to_string(i) + ": " + what);
        };
        for (int k = 0; k < 3; ++k) {
            const double s = std::exp(params.log_scale[3 * i + k]);
            if (!(s > 1e-6 && s < 1e3)) {
                fail("scale outside (1e-6, 1e3)");
            }
            if (!std::isfinite(params.position[3 * i + k])) {
                fail("non-finite position");
            }
        }
        const double o = opacity(i);
        if (!(o > 0.0 && o < 1.0)) {
            fail("opacity outside (0, 1)");
        }
        const double* q = &params.rotation[4 * i];
        if (std::abs(std::sqrt(q[0] * q[0] + q[1] * q[1] + q[2] * q[2] + q[3] * q[3]) - 1.0) > 1e-6) {
            fail("rotation is not a unit quaternion");
        }
    }
}

void sh_basis(int degree, const Vec3& d, double* b, Vec3* g)
{
    constexpr double C1 = 0.4886025119029199;
    constexpr double C2[] = {1.0925484305920792, -1.0925484305920792, 0.31539156525252005, -1.0925484305920792,
                             0.5462742152960396};
    constexpr double C3[] = {-0.5900435899266435, 2.890611442640554, -0.4570457994644658, 0.3731763325901154,
                             -0.4570457994644658, 1.445305721320277,  -0.5900435899266435};
    const double x = d.x();
    const double y = d.y();
    const double z = d.z();
    b[0] = kShC0;
    g[0] = Vec3::Zero();
    if (degree < 1) {
        return;
    }
    b[1] = -C1 * y;
    g[1] = {0, -C1, 0};
    b[2] = C1 * z;
    g[2] = {0, 0, C1};
    b[3] = -C1 * x;
    g[3] = {-C1, 0, 0};
    if (degree < 2) {
        return;
    }
    const double xx = x * x;
    const double yy = y * y;
    const double zz = z * z;
    b[4] = C2[0] * x * y;
    g[4] = {C2[0] * y, C2[0] * x, 0};
    b[5] = C2[1] * y * z;
    g[5] = {0, C2[1] * z, C2[1] * y};
    b[6] = C2[2] * (2 * zz - xx - yy);
    g[6] = {-2 * C2[2] * x, -2 * C2[2] * y, 4 * C2[2] * z};
    b[7] = C2[3] * x * z;
    g[7] = {C2[3] * z, 0, C2[3] * x};
    b[8] = C2[4] * (xx - yy);
    g[8] = {2 * C2[4] * x, -2 * C2[4] * y, 0};
    if (degree < 3) {
        return;
    }
    b[9] = C3[0] * y * (3 * xx - yy);
    g[9] = {6 * C3[0] * x * y, C3[0] * (3 * xx - 3 * yy), 0};
    b[10] = C3[1] * x * y * z;
    g[10] = {C3[1] * y * z, C3[1] * x * z, C3[1] * x * y};
    b[11] = C3[2] * y * (4 * zz - xx - yy);
    g[11] = {-2 * C3[2] * x * y, C3[2] * (4 * zz - xx - 3 * yy), 8 * C3[2] * y * z};
    b[12] = C3[3] * z * (2 * zz - 3 * xx - 3 * yy);
    g[12] = {-6 * C3[3] * x * z, -6 * C3[3] * y * z, C3[3] * (6 * zz - 3 * xx - 3 * yy)};
    b[13] = C3[4] * x * (4 * zz - xx - yy);
    g[13] = {C3[4] * (4 * zz - 3 * xx - yy), -2 * C3[4] * x * y, 8 * C3[4] * x * z};
    b[14] = C3[5] * z * (xx - yy);
    g[14] = {2 * C3[5] * x * z, -2 * C3[5] * y * z, C3[5] * (xx - yy)};
    b[15] = C3[6] * x * (xx - 3 * yy);
    g[15] = {C3[6] * (3 * xx - 3 * yy), -6 * C3[6] * x * y, 0};
}

std::vector<double> mean_neighbor_distance(const std::vector<Vec3>& points, int k)
{
    const std::size_t n = points.size();
    std::vector<double> out(n, 0.0);
    if (n < 2 || k < 1) {
        return out;
    }
    Vec3 lo = points[0];
    Vec3 hi = points[0];
    for (const auto& p : points) {
        lo = lo.cwiseMin(p);
        hi = hi.cwiseMax(p);
    }
    const double extent = std::max((hi - lo).maxCoeff(), 1e-9);
    const double cell = extent / std::max(1.0, std::cbrt(static_cast<double>(n)));
    const auto key_of = [&](std::int64_t ix, std::int64_t iy, std::int64_t iz) {
        return (ix * 73856093) ^ (iy * 19349663) ^ (iz * 83492791);
    };
    const auto cell_of = [&](const Vec3& p) {
        return std::array<std::int64_t, 3>{static_cast<std::int64_t>(std::floor((p.x() - lo.x()) / cell)),
                                           static_cast<std::int64_t>(std::floor((p.y() - lo.y()) / cell)),
                                           static_cast<std::int64_t>(std::floor((p.z() - lo.z()) / cell))};
    };
    std::unordered_map<std::int64_t, std::vector<std::uint32_t>> grid;
    for (std::size_t i = 0; i < n; ++i) {
        const auto c = cell_of(points[i]);
        grid[key_of(c[0], c[1], c[2])].push_back(static_cast<std::uint32_t>(i));
    }
    const auto kk = static_cast<std::size_t>(std::min<std::size_t>(static_cast<std::size_t>(k), n - 1));
    const std::int64_t max_ring = static_cast<std::int64_t>(std::ceil(extent / cell)) + 1;
    std::vector<double> best;
    for (std::size_t i = 0; i < n; ++i) {
        const auto c = cell_of(points[i]);
        best.clear();
        for (std::int64_t r = 0; r <= max_ring; ++r) {
            for (std::int64_t dx = -r; dx <= r; ++dx) {
                for (std::int64_t dy = -r; dy <= r; ++dy) {
                    for (std::int64_t dz = -r; dz <= r; ++dz) {
                        if (std::max({std::abs(dx), std::abs(dy), std::abs(dz)}) != r) {
                            continue;
                        }
                        const auto it = grid.find(key_of(c[0] + dx, c[1] + dy, c[2] + dz));
                        if (it == grid.end()) {
                            continue;
                        }
                        for (const auto j : it->second) {
                            if (j == i) {
                                continue;
                            }
                            const double d = (points[j] - points[i]).norm();
                            if (best.size() < kk) {
                                best.push_back(d);
                                std::push_heap(best.begin(), best.end());
                            } else if (d < best.front()) {
                                std::pop_heap(best.begin(), best.end());
                                best.back() = d;
                                std::push_heap(best.begin(), best.end());
                            }
                        }
                    }
                }
            }
            // Unvisited cells are at least r * cell away.
            if (best.size() == kk && best.front() <= static_cast<double>(r) * cell) {
                break;
            }
        }
        double sum = 0.0;
        for (const double d : best) {
            sum += d;
        }
        out[i] = best.empty() ? 0.0 : sum / static_cast<double>(best.size());
    }
    return out;
}

GaussianField init_from_point_cloud(const PointCloud& points, int sh_degree)
{
    if (points.empty()) {
        throw ContractError("init_from_point_cloud: empty point cloud");
    }
    GaussianField field(sh_degree);
    const auto dist = mean_neighbor_distance(points.positions, 3);
    const double initial_logit = logit(0.1);
    for (std::size_t i = 0; i < points.size(); ++i) {
        // A lone point has no neighbours to size it; fall back to a 1 cm blob.
        const double s = points.size() == 1 ? 0.01 : std::clamp(dist[i], 1e-5, 1e2);
        const Vec3 dc = (points.colors[i] - Vec3::Constant(0.5)) / kShC0;
        field.push_back(points.positions[i], Vec3::Constant(std::log(s)), Quat::Identity(), initial_logit, dc);
    }
    return field;
}

}  // namespace panogs
