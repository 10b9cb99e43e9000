#pragma once

#include "panogs/adapters.hpp"
#include "panogs/camera_rig.hpp"
#include "panogs/gaussian_field.hpp"

#include <cstdint>
#include <functional>
#include <optional>
#include <string>
#include <vector>

namespace panogs {

struct LossResult {
    double value = 0.0;
    Image grad;  // dL/d render
    bool skipped = false;
};

/// (1 - lambda) * L1 + lambda * (1 - SSIM) over pixels where `mask` is false. Masked pixels
/// get zero gradient; a fully masked target is skipped.
LossResult compute_loss(const Image& render, const Image& target, const std::optional<Mask>& mask, double lambda_dssim);

struct LearningRates {
    double position_init = 1.6e-4;  // times scene extent
    double position_final = 1.6e-6;
    double sh_dc = 2.5e-3;
    double sh_rest = 2.5e-3 / 20.0;
    double opacity = 5e-2;
    double scale = 5e-3;
    double rotation = 1e-3;
};

struct OptimizationSchedule {
    int pre_pcd_iters = 2000;        // 0 skips the PCD phase
    int pre_pano_iters = 2000;
    int transfer_iters = 5000;
    int densify_interval = 100;
    int densify_from = 100;          // first iteration of a phase eligible for densification
    double densify_until = 0.5;      // fraction of each phase after which growth stops
    double densify_grad_threshold = 2e-4;
    double clone_extent_fraction = 0.01;
    double prune_opacity = 0.005;
    std::size_t max_gaussians = 400000;
    double lambda_dssim = 0.2;
    LearningRates lr;
    int sh_degree = 1;
    std::uint64_t seed = 0;

    void validate() const;
};

class AdamOptimizer {
public:
    AdamOptimizer() = default;
    AdamOptimizer(std::size_t n, int rest_width);

    /// One update of every parameter group followed by projection onto the valid set.
    void step(GaussianField& field, const GaussianParams& grads, const LearningRates& lr, double position_lr);

    /// Carries moments along a densify/prune reindexing; -1 rows start from zero.
    void remap(const std::vector<int>& rows, int rest_width);

    [[nodiscard]] std::size_t steps() const { return steps_; }

private:
    GaussianParams m_, v_;
    std::size_t steps_ = 0;
};

/// Running per-Gaussian screen-gradient statistics between densification events.
struct DensifyStats {
    std::vector<double> grad_sum;
    std::vector<int> count;

    void reset(std::size_t n);
    void accumulate(const RasterGradients& g);
};

struct DensifyEvent {
    std::string phase;
    int iteration = 0;
    std::size_t before = 0;
    std::size_t cloned = 0;
    std::size_t split = 0;
    std::size_t pruned = 0;
    std::size_t after = 0;
};

/// Record of every structural change made to a field during optimization.
struct TrainingAudit {
    std::vector<DensifyEvent> densify_events;
    int opacity_reset_events = 0;  // steps after which every opacity was identical

    void check_opacity(const GaussianField& field);
};

struct DensifyOutcome {
    std::size_t cloned = 0;
    std::size_t split = 0;
    std::size_t pruned = 0;
};

/// Clone or split Gaussians with mean screen gradient above threshold (when `grow`), then
/// prune low-opacity ones. Opacities of survivors are untouched.
DensifyOutcome densify_and_prune(GaussianField& field, AdamOptimizer& adam, const DensifyStats& stats,
                                 const OptimizationSchedule& schedule, double scene_extent, bool grow,
                                 std::uint64_t seed);

struct LossRecord {
    std::string stage;
    std::string phase;
    int iteration = 0;
    int camera_id = 0;
    double loss = 0.0;
    std::size_t gaussians = 0;
};

struct TrainingPhase {
    std::string name;
    std::vector<const SupervisionSet*> sources;
    int iterations = 0;
};

struct TrainingContext {
    RasterSettings raster;
    std::function<void(const LossRecord&)> on_iteration;  // optional progress hook
};

/// Runs phases back to back on one field, sampling a uniformly random view from the union
/// of each phase's sources per iteration.
void optimize_field(GaussianField& field, const std::string& stage, const std::vector<TrainingPhase>& phases,
                    const OptimizationSchedule& schedule, double scene_extent, const TrainingContext& ctx,
                    std::vector<LossRecord>& log, TrainingAudit& audit);

struct ReconstructionResult {
    GaussianField pre_field{1};   // after Pre optimization
    GaussianField final_field{1}; // after Transfer optimization
    SupervisionSet inp_set{SupervisionKind::inp, {}};
    std::vector<LossRecord> log;
    TrainingAudit audit;
};

/// Pre stage (PCD then PANO) from `init_points`, INP set from the Pre result, then Transfer
/// on a freshly initialized field supervised by INP and PANO together.
ReconstructionResult two_stage_reconstruct(const PointCloud& init_points, const SupervisionSet& pano_set,
                                           const SupervisionSet& pcd_set, InpaintClient& inpaint,
                                           const CameraRig& rig, const OptimizationSchedule& schedule,
                                           const TrainingContext& ctx = {});

/// Single-stage optimization on `sets` only, for baselines and ablations.
GaussianField single_stage_reconstruct(const PointCloud& init_points, const std::vector<const SupervisionSet*>& sets,
                                       int iterations, const OptimizationSchedule& schedule,
                                       const TrainingContext& ctx, std::vector<LossRecord>& log, TrainingAudit& audit);

/// Fraction of pixels with alpha below 1/255 across renders at the given cameras.
double zero_alpha_fraction(const GaussianField& field, const CameraRig& rig, CameraKind kind,
                           const RasterSettings& settings = {});

}  // namespace panogs
