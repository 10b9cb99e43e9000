#pragma once

#include "panogs/geometry.hpp"
#include "panogs/image.hpp"
#include "panogs/point_cloud.hpp"

#include <array>
#include <cstdint>
#include <filesystem>
#include <vector>

namespace panogs {

/// Per-Gaussian parameter arrays, one row per Gaussian. Also used for gradients and
/// optimizer moments, which share the layout.
struct GaussianParams {
    std::vector<double> position;       // 3 per row
    std::vector<double> log_scale;      // 3 per row
    std::vector<double> rotation;       // 4 per row, (w, x, y, z)
    std::vector<double> opacity_logit;  // 1 per row
    std::vector<double> sh_dc;          // 3 per row
    std::vector<double> sh_rest;        // 3 * (coeffs - 1) per row, coefficient-major

    enum class Group { position, log_scale, rotation, opacity, sh_dc, sh_rest };
    static constexpr std::array<Group, 6> kGroups = {Group::position, Group::log_scale, Group::rotation,
                                                     Group::opacity, Group::sh_dc, Group::sh_rest};

    std::vector<double>& group(Group g);
    [[nodiscard]] const std::vector<double>& group(Group g) const;
    static int width(Group g, int rest_width);

    /// Zero-filled arrays for n rows.
    void resize_zero(std::size_t n, int rest_width);
    /// Rows of `src` in the given order; -1 yields a zero row.
    static GaussianParams gather(const GaussianParams& src, const std::vector<int>& rows, int rest_width);
};

int sh_coefficient_count(int degree);

class GaussianField {
public:
    explicit GaussianField(int sh_degree = 1);

    [[nodiscard]] int sh_degree() const { return degree_; }
    [[nodiscard]] int sh_rest_width() const { return 3 * (sh_coefficient_count(degree_) - 1); }
    [[nodiscard]] std::size_t size() const { return params.opacity_logit.size(); }
    [[nodiscard]] bool empty() const { return size() == 0; }

    [[nodiscard]] Vec3 position(std::size_t i) const;
    [[nodiscard]] Vec3 scale(std::size_t i) const;
    [[nodiscard]] Quat rotation(std::size_t i) const;  // normalized
    [[nodiscard]] double opacity(std::size_t i) const;

    /// Appends one Gaussian; higher SH bands start at zero.
    void push_back(const Vec3& position, const Vec3& log_scale, const Quat& rotation, double opacity_logit,
                   const Vec3& sh_dc);

    /// Clamps log-scales and opacity logits into range and renormalizes quaternions.
    void project_to_valid();

    /// Throws DomainError naming the first Gaussian that breaks a member invariant.
    void validate() const;

    GaussianParams params;
    Vec3 background = Vec3::Zero();

private:
    int degree_;
};

double sigmoid(double x);
double logit(double p);

/// SH band value for RGB 0.5 offset: color = max(0, SH(dir) + 0.5).
constexpr double kShC0 = 0.28209479177387814;

/// Basis values b_k(dir) for k < coefficient count, plus their gradients with respect to dir.
void sh_basis(int degree, const Vec3& dir, double* values, Vec3* gradients);

struct RasterSettings {
    double z_near = 0.01;
    double screen_dilation = 0.3;  // px^2 added to every projected covariance
    int tile_size = 16;
    int threads = 0;  // 0: hardware concurrency
};

/// Per-Gaussian projection data from a forward pass.
struct ProjectedGaussian {
    double u = 0, v = 0;            // pixel-space mean
    double depth = 0;               // camera z
    double cov[3] = {0, 0, 0};      // 2D covariance (xx, xy, yy) after dilation/regularization
    double conic[3] = {0, 0, 0};    // inverse covariance (xx, xy, yy)
    double color[3] = {0, 0, 0};
    bool color_clamped[3] = {false, false, false};
    double opacity = 0;
    bool visible = false;
};

struct RasterState {
    std::vector<ProjectedGaussian> projected;
    int tiles_x = 0, tiles_y = 0;
    std::vector<std::uint32_t> tile_offsets;  // CSR over tiles
    std::vector<std::uint32_t> tile_entries;  // Gaussian indices, depth-sorted per tile
};

struct RenderResult {
    Image rgb;
    Image alpha;
    RasterState state;
};

/// Front-to-back splatting of `field` into the camera (K, pose).
RenderResult rasterize(const GaussianField& field, const Intrinsics& K, const Pose& pose, const RasterSettings& settings = {});

struct RasterGradients {
    GaussianParams params;
    std::vector<double> screen_grad_norm;  // |dL/d mean| in normalized device units, per Gaussian
    std::vector<std::uint8_t> visible;
};

/// Gradients of a scalar loss given dL/d rgb for a recorded forward pass.
RasterGradients rasterize_backward(const GaussianField& field, const Intrinsics& K, const Pose& pose,
                                   const RenderResult& forward, const Image& rgb_grad,
                                   const RasterSettings& settings = {});

/// One Gaussian per point with DC color from the point, isotropic scale from the mean
/// distance to its 3 nearest neighbours, opacity 0.1 and identity rotation.
GaussianField init_from_point_cloud(const PointCloud& points, int sh_degree);

/// Mean distance from each point to its k nearest neighbours.
std::vector<double> mean_neighbor_distance(const std::vector<Vec3>& points, int k);

void write_gaussian_ply(const std::filesystem::path& path, const GaussianField& field);
GaussianField read_gaussian_ply(const std::filesystem::path& path);

}  // namespace panogs
