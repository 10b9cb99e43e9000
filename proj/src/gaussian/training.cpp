#include "panogs/training.hpp"

#include "panogs/errors.hpp"

#include <algorithm>
#include <cmath>
#include <random>

namespace panogs {

namespace {

std::uint64_t mix_seed(std::uint64_t seed, const std::string& tag)
{
    std::uint64_t h = 1469598103934665603ULL ^ seed;
    for (const char c : tag) {
        h = (h ^ static_cast<unsigned char>(c)) * 1099511628211ULL;
    }
    return h;
}

struct View {
    const SupervisionItem* item;
    bool use_mask;
};

}  // namespace

void optimize_field(GaussianField& field, const std::string& stage, const std::vector<TrainingPhase>& phases,
                    const OptimizationSchedule& schedule, double scene_extent, const TrainingContext& ctx,
                    std::vector<LossRecord>& log, TrainingAudit& audit)
{
    if (field.empty()) {
        throw ContractError("optimize_field: empty field");
    }
    const int rw = field.sh_rest_width();
    AdamOptimizer adam(field.size(), rw);
    DensifyStats stats;
    stats.reset(field.size());
    std::mt19937_64 rng(mix_seed(schedule.seed, stage));
    const double extent = std::max(scene_extent, 1e-6);

    int total = 0;
    for (const auto& p : phases) {
        total += p.iterations;
    }
    int global = 0;
    for (const auto& phase : phases) {
        if (phase.iterations == 0) {
            continue;
        }
        std::vector<View> views;
        for (const auto* set : phase.sources) {
            for (const auto& item : set->items) {
                views.push_back({&item, set->kind == SupervisionKind::pcd});
            }
        }
        if (views.empty()) {
            throw PipelineError("phase " + phase.name + " has no supervision views");
        }
        std::uniform_int_distribution<std::size_t> pick(0, views.size() - 1);
        for (int it = 1; it <= phase.iterations; ++it, ++global) {
            const View& view = views[pick(rng)];
            const auto& item = *view.item;
            const auto render = rasterize(field, item.intrinsics, item.pose, ctx.raster);
            static const std::optional<Mask> no_mask;
            const auto loss = compute_loss(render.rgb, item.rgb, view.use_mask ? item.mask : no_mask,
                                           schedule.lambda_dssim);
            if (!std::isfinite(loss.value)) {
                throw PipelineError("loss diverged at " + stage + "/" + phase.name + " iteration " +
                                    std::to_string(it));
            }
            if (!loss.skipped) {
                const auto grads = rasterize_backward(field, item.intrinsics, item.pose, render, loss.grad, ctx.raster);
                stats.accumulate(grads);
                const double t = total > 1 ? static_cast<double>(global) / (total - 1) : 0.0;
                const double pos_lr = std::exp((1.0 - t) * std::log(schedule.lr.position_init * extent) +
                                               t * std::log(schedule.lr.position_final * extent));
                adam.step(field, grads.params, schedule.lr, pos_lr);
            }
            audit.check_opacity(field);

            if (it % schedule.densify_interval == 0 && it >= schedule.densify_from && it < phase.iterations) {
                const bool grow = it <= static_cast<int>(schedule.densify_until * phase.iterations);
                DensifyEvent ev{phase.name, it, field.size(), 0, 0, 0, 0};
                const auto out = densify_and_prune(field, adam, stats, schedule, extent, grow,
                                                   mix_seed(schedule.seed, stage + phase.name + std::to_string(it)));
                ev.cloned = out.cloned;
                ev.split = out.split;
                ev.pruned = out.pruned;
                ev.after = field.size();
                audit.densify_events.push_back(ev);
                audit.check_opacity(field);
                stats.reset(field.size());
                if (field.empty()) {
                    throw PipelineError("every Gaussian was pruned at " + stage + "/" + phase.name + " iteration " +
                                        std::to_string(it));
                }
            }
            LossRecord rec{stage, phase.name, it, item.camera_id, loss.value, field.size()};
            if (ctx.on_iteration) {
                ctx.on_iteration(rec);
            }
            log.push_back(std::move(rec));
        }
    }
}

SupervisionSet build_inp_set(const GaussianField& field, const CameraRig& rig, const SupervisionSet& pcd_set,
                             InpaintClient& inpaint, const RasterSettings& settings)
{
    if (pcd_set.kind != SupervisionKind::pcd) {
        throw ContractError("build_inp_set needs the PCD set for its masks");
    }
    SupervisionSet out{SupervisionKind::inp, {}};
    for (const auto& item : pcd_set.items) {
        const bool known = std::any_of(rig.cameras.begin(), rig.cameras.end(), [&](const RigCamera& c) {
            return c.id == item.camera_id && c.kind == CameraKind::supp;
        });
        if (!known) {
            throw ContractError("PCD item camera " + std::to_string(item.camera_id) +
                                " is not a supplementary camera of the rig");
        }
        if (!item.mask) {
            throw ContractError("PCD item for camera " + std::to_string(item.camera_id) + " has no mask");
        }
        const auto render = rasterize(field, item.intrinsics, item.pose, settings);
        Image filled;
        try {
            filled = checked_fill(inpaint, render.rgb, *item.mask);
        } catch (const ContractError& e) {
            throw ContractError("inpainting view " + std::to_string(item.camera_id) + ": " + e.what());
        } catch (const std::exception& e) {
            throw AdapterError("inpainting view " + std::to_string(item.camera_id) + ": " + e.what());
        }
        out.items.push_back({item.camera_id, item.pose, item.intrinsics, std::move(filled), item.mask});
    }
    return out;
}

ReconstructionResult two_stage_reconstruct(const PointCloud& init_points, const SupervisionSet& pano_set,
                                           const SupervisionSet& pcd_set, InpaintClient& inpaint,
                                           const CameraRig& rig, const OptimizationSchedule& schedule,
                                           const TrainingContext& ctx)
{
    schedule.validate();
    if (pano_set.kind != SupervisionKind::pano || pcd_set.kind != SupervisionKind::pcd) {
        throw ContractError("two_stage_reconstruct: expected PANO and PCD sets");
    }
    const double extent = init_points.bounding_radius();
    ReconstructionResult result;

    GaussianField pre = init_from_point_cloud(init_points, schedule.sh_degree);
    optimize_field(pre, "pre",
                   {{"pcd", {&pcd_set}, schedule.pre_pcd_iters}, {"pano", {&pano_set}, schedule.pre_pano_iters}},
                   schedule, extent, ctx, result.log, result.audit);
    result.inp_set = build_inp_set(pre, rig, pcd_set, inpaint, ctx.raster);
    result.pre_field = std::move(pre);

    GaussianField fresh = init_from_point_cloud(init_points, schedule.sh_degree);
    optimize_field(fresh, "transfer", {{"inp+pano", {&result.inp_set, &pano_set}, schedule.transfer_iters}}, schedule,
                   extent, ctx, result.log, result.audit);
    result.final_field = std::move(fresh);
    return result;
}

GaussianField single_stage_reconstruct(const PointCloud& init_points, const std::vector<const SupervisionSet*>& sets,
                                       int iterations, const OptimizationSchedule& schedule,
                                       const TrainingContext& ctx, std::vector<LossRecord>& log, TrainingAudit& audit)
{
    schedule.validate();
    if (iterations <= 0) {
        throw ConfigError("single-stage iteration count must be positive");
    }
    std::string name;
    for (const auto* s : sets) {
        name += (name.empty() ? "" : "+") + std::string(to_string(s->kind));
    }
    GaussianField field = init_from_point_cloud(init_points, schedule.sh_degree);
    optimize_field(field, "single", {{name, sets, iterations}}, schedule, init_points.bounding_radius(), ctx, log,
                   audit);
    return field;
}

double zero_alpha_fraction(const GaussianField& field, const CameraRig& rig, CameraKind kind,
                           const RasterSettings& settings)
{
    std::size_t zero = 0;
    std::size_t total = 0;
    for (const auto* cam : rig.of_kind(kind)) {
        const auto r = rasterize(field, rig.intrinsics, cam->pose, settings);
        for (double a : r.alpha.data()) {
            zero += a < 1.0 / 255.0 ? 1 : 0;
        }
        total += r.alpha.data().size();
    }
    return total == 0 ? 0.0 : static_cast<double>(zero) / static_cast<double>(total);
}

}  // namespace panogs
